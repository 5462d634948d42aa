#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "wtsid/basis.hpp"
#include "wtsid/dynamics.hpp"
#include "wtsid/identify.hpp"

namespace wtsid {

// Deterministic derived seed for independent noise channels.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t channel);

// Wind input description. Low turbulence: piecewise-linear ramps/holds
// through the given knots. High turbulence: Ornstein-Uhlenbeck fluctuations
// around u_mean with standard deviation ti*u_mean and correlation time
// t_corr, clipped at 0.5*u_mean from below.
struct WindScenario {
  enum class Kind { LowTurbulence, HighTurbulence };
  Kind kind = Kind::LowTurbulence;
  double u_mean = 8.0;                                // [m/s]
  std::vector<std::pair<double, double>> ramp_knots;  // (t [s], u [m/s]); empty -> constant
  double ti = 0.10;                                   // turbulence intensity
  double t_corr = 1.5;                                // integral time scale [s]
  std::uint64_t seed = 0;

  void validate() const;
};

std::vector<double> gen_wind(const WindScenario& scenario, double duration, double f_s);

// High-turbulence pair: the first series drives the turbines, the second is
// what the (displaced) anemometer reports. corr is their correlation; both
// share the marginal statistics. For low turbulence the two are identical.
struct WindPair {
  std::vector<double> driving;
  std::vector<double> reported;
};
WindPair gen_wind_pair(const WindScenario& scenario, double duration, double f_s, double corr);

// u = sqrt(2 dp / rho); throws on negative differential pressure.
double prandtl_velocity(double delta_p, double rho);

enum class FilterMode { Causal, ZeroPhase };

// Digital Butterworth low-pass (bilinear transform with frequency
// pre-warping), order 1 or 4. Zero-phase mode runs forward-backward over a
// reflective padding of three filter time constants; output length equals
// input length in both modes.
std::vector<double> butterworth_lowpass(std::span<const double> series, double f_s, double cutoff,
                                        int order, FilterMode mode);

// Streaming first-order low-pass for the control path.
class FirstOrderLowpass {
 public:
  FirstOrderLowpass(double f_s, double cutoff);
  void reset(double x0);
  double step(double x);

 private:
  double b0_, b1_, a1_;
  double x_prev_ = 0.0, y_prev_ = 0.0;
  bool primed_ = false;
};

// Measurement noise at episode-generation time, relative to signal level.
struct NoiseSpec {
  double sigma_omega_rel = 0.01;
  double sigma_u_rel = 0.01;
  double sigma_tau_rel = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

// Ground-truth surrogates for the synthetic rig. The freestream map peaks
// near Cp = 0.41 at lambda = 5.1 with a mild Reynolds dependence; the waked
// map scales the same bump by a factor that dips when the upstream turbine
// runs at its own optimum. Both keep Cp/lambda strictly decreasing over the
// operating envelope, so every steady state is attracting for any
// nondecreasing torque law.
enum class TwinKind { Freestream, Waked };
CpSurrogate make_twin_truth(TwinKind kind);

// Basis configuration shared by the twin truth maps (wider support than the
// identification default so the whole visited envelope is representable).
BasisConfig twin_truth_basis(TwinKind kind);

// Integrates the twin and assembles a measured episode: reported wind and
// rotor speeds carry independent Gaussian relative noise, the resistance
// schedule is known exactly. The true trajectory is kept for evaluation.
struct SynthEpisode {
  Episode measured;
  Trajectory truth;
};
SynthEpisode synth_episode(const ArrayModel& twin, std::span<const double> u1_driving,
                           std::span<const double> u1_reported,
                           const std::vector<std::vector<double>>& R_v_schedules,
                           const NoiseSpec& noise, std::span<const double> omega0,
                           double f_s = 20.0, int substeps = 10);

}  // namespace wtsid
