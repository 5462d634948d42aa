#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "wtsid/basis.hpp"

namespace wtsid {

// Physical and electrical constants of one turbine. Defaults describe the
// desk-scale rig: 0.15 m rotor, direct-drive DC generator loaded by a
// switchable resistor bank.
struct TurbineParams {
  double J = 2.5e-6;     // rotor moment of inertia [kg m^2]
  double R = 0.075;      // rotor radius [m]
  double rho = 1.2;      // air density [kg m^-3]
  double nu = 1.5e-5;    // kinematic viscosity [m^2 s^-1]
  double k_tau = 5.0e-3;   // generator torque constant [N m A^-1]
  double k_omega = 5.0e-3; // back-EMF constant [V s rad^-1]
  double R_tot = 1.0;    // internal + cable resistance [Ohm]
  double eta_gen = 1.0;  // generator efficiency (direct coupling)
  double N_g = 1.0;      // gear ratio (direct coupling)

  double reynolds(double u) const { return u * 2.0 * R / nu; }
  double tip_speed_ratio(double omega, double u) const { return omega * R / u; }

  void validate() const;
};

// Aero torque has a 1/omega singularity at standstill; below this floor the
// torque is evaluated at the floor and the integrator clamps the state there.
inline constexpr double kOmegaFloor = 1.0;  // [rad/s]

// Aligned array: the first turbine's surrogate is parameterized on Reynolds
// number, every later one on the upstream tip-speed ratio. The wake deficit
// is absorbed into the downstream Cp, so all torques use the freestream u1.
struct ArrayModel {
  struct Turbine {
    TurbineParams params;
    CpSurrogate cp;
  };
  std::vector<Turbine> turbines;
  double spacing = 0.6;  // inter-turbine distance [m], metadata only

  std::size_t size() const { return turbines.size(); }
  void validate() const;
};

struct ArrayState {
  std::vector<double> omegas;  // [rad/s], clamped at kOmegaFloor
  double time = 0.0;           // [s]
};

// tau_g = k_tau * k_omega * omega / (R_tot + R_v). Throws when the total
// circuit resistance is zero.
double gen_torque(double omega, double R_v, const TurbineParams& params);

// tau_a = 0.5 * rho * pi * R^2 * cp * u^3 / max(omega, floor).
double aero_torque(double omega, double u, double cp, const TurbineParams& params);

// d(omega_i)/dt for the whole array at freestream speed u1 and per-turbine
// load resistances R_vs.
std::vector<double> rhs(const ArrayState& state, double u1, std::span<const double> R_vs,
                        const ArrayModel& model);

// Per-turbine cp and lambda at a given state (same evaluation rhs uses).
struct ArrayAero {
  std::vector<double> cps;
  std::vector<double> lambdas;
};
ArrayAero array_aero(const ArrayState& state, double u1, const ArrayModel& model);

// Jacobian structure of rhs: diagonal entries df_i/domega_i plus the
// sub-diagonal coupling df_i/domega_{i-1} through the upstream tip-speed
// ratio (zero for the first turbine).
struct ArrayJacobian {
  std::vector<double> own;       // df_i/domega_i
  std::vector<double> upstream;  // df_i/domega_{i-1}, entry 0 is 0
};
ArrayJacobian df_domega(const ArrayState& state, double u1, std::span<const double> R_vs,
                        const ArrayModel& model);

// Uniformly sampled inputs: u1[k] and R_vs[turbine][k] held zero-order
// between sample instants.
struct InputSeries {
  double f_s = 20.0;
  std::vector<double> u1;
  std::vector<std::vector<double>> R_vs;  // [turbine][sample]

  std::size_t samples() const { return u1.size(); }
  void validate(std::size_t n_turbines) const;
};

struct Trajectory {
  double f_s = 20.0;
  std::vector<double> t;
  std::vector<double> u1;
  std::vector<std::vector<double>> omegas;   // [turbine][sample]
  std::vector<std::vector<double>> R_vs;     // [turbine][sample]
  std::vector<std::vector<double>> cps;      // [turbine][sample]
  std::vector<std::vector<double>> lambdas;  // [turbine][sample]

  std::size_t samples() const { return t.size(); }
};

// Advances the state over one zero-order-hold interval of length dt using
// `substeps` classical RK4 steps; omegas are clamped at kOmegaFloor.
void advance_rk4(const ArrayModel& model, ArrayState& state, double u1,
                 std::span<const double> R_vs, double dt, int substeps);

// Classical fixed-step RK4 with dt = 1/(f_s*substeps); the trajectory is
// reported at the sample instants. Throws if the state goes non-finite,
// naming the step.
Trajectory integrate(const ArrayModel& model, std::span<const double> omega0,
                     const InputSeries& inputs, int substeps = 10);

// Header: t,u1,omega_1..omega_K,Rv_1..Rv_K,cp_1..cp_K,lambda_1..lambda_K
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

}  // namespace wtsid
