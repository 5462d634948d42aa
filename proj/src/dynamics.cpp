#include "wtsid/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "wtsid/csv.hpp"

namespace wtsid {

namespace {

constexpr double kPi = std::numbers::pi;

double clamped_speed(double omega) { return omega < kOmegaFloor ? kOmegaFloor : omega; }

}  // namespace

void TurbineParams::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("turbine params: ") + what + " must be positive");
    }
  };
  positive(J, "J");
  positive(R, "R");
  positive(rho, "rho");
  positive(nu, "nu");
  positive(k_tau, "k_tau");
  positive(k_omega, "k_omega");
  if (R_tot < 0.0 || !std::isfinite(R_tot)) {
    throw std::invalid_argument("turbine params: R_tot must be nonnegative");
  }
}

void ArrayModel::validate() const {
  if (turbines.empty()) throw std::invalid_argument("array: no turbines");
  for (std::size_t i = 0; i < turbines.size(); ++i) {
    turbines[i].params.validate();
    turbines[i].cp.validate();
    const AuxKind expect = i == 0 ? AuxKind::Reynolds : AuxKind::UpstreamTsr;
    if (turbines[i].cp.config.aux_kind != expect) {
      throw std::invalid_argument("array: turbine " + std::to_string(i + 1) +
                                  " has the wrong auxiliary kind for its position");
    }
  }
}

double gen_torque(double omega, double R_v, const TurbineParams& params) {
  if (R_v < 0.0 || !std::isfinite(R_v)) {
    throw std::invalid_argument("gen_torque: R_v must be nonnegative");
  }
  const double total = params.R_tot + R_v;
  if (total <= 0.0) {
    throw std::invalid_argument("gen_torque: zero circuit resistance");
  }
  return params.k_tau * params.k_omega * omega / total;
}

double aero_torque(double omega, double u, double cp, const TurbineParams& params) {
  if (u < 0.0 || !std::isfinite(u)) {
    throw std::invalid_argument("aero_torque: u must be nonnegative");
  }
  const double w = clamped_speed(omega);
  return 0.5 * params.rho * kPi * params.R * params.R * cp * u * u * u / w;
}

ArrayAero array_aero(const ArrayState& state, double u1, const ArrayModel& model) {
  if (!(u1 > 0.0) || !std::isfinite(u1)) {
    throw std::invalid_argument("array: u1 must be positive");
  }
  const std::size_t K = model.size();
  ArrayAero aero;
  aero.cps.resize(K);
  aero.lambdas.resize(K);
  for (std::size_t i = 0; i < K; ++i) {
    const TurbineParams& p = model.turbines[i].params;
    const double lambda = p.tip_speed_ratio(clamped_speed(state.omegas[i]), u1);
    const double aux = i == 0 ? p.reynolds(u1) : aero.lambdas[i - 1];
    aero.lambdas[i] = lambda;
    aero.cps[i] = cp_eval(model.turbines[i].cp, lambda, aux);
  }
  return aero;
}

std::vector<double> rhs(const ArrayState& state, double u1, std::span<const double> R_vs,
                        const ArrayModel& model) {
  const std::size_t K = model.size();
  if (state.omegas.size() != K || R_vs.size() != K) {
    throw std::invalid_argument("rhs: state/input size mismatch");
  }
  const ArrayAero aero = array_aero(state, u1, model);
  std::vector<double> dw(K);
  for (std::size_t i = 0; i < K; ++i) {
    const TurbineParams& p = model.turbines[i].params;
    const double tau_a = aero_torque(state.omegas[i], u1, aero.cps[i], p);
    const double tau_g = gen_torque(state.omegas[i], R_vs[i], p);
    dw[i] = (tau_a - tau_g) / p.J;
  }
  return dw;
}

ArrayJacobian df_domega(const ArrayState& state, double u1, std::span<const double> R_vs,
                        const ArrayModel& model) {
  const std::size_t K = model.size();
  if (state.omegas.size() != K || R_vs.size() != K) {
    throw std::invalid_argument("df_domega: state/input size mismatch");
  }
  ArrayJacobian jac;
  jac.own.resize(K);
  jac.upstream.assign(K, 0.0);

  std::vector<double> lambdas(K);
  for (std::size_t i = 0; i < K; ++i) {
    const TurbineParams& p = model.turbines[i].params;
    lambdas[i] = p.tip_speed_ratio(clamped_speed(state.omegas[i]), u1);
  }
  for (std::size_t i = 0; i < K; ++i) {
    const TurbineParams& p = model.turbines[i].params;
    const CpSurrogate& surr = model.turbines[i].cp;
    const double w = clamped_speed(state.omegas[i]);
    const double aux = i == 0 ? p.reynolds(u1) : lambdas[i - 1];
    const double coeff = 0.5 * p.rho * kPi * p.R * p.R * u1 * u1 * u1;
    const bool floored = state.omegas[i] < kOmegaFloor;

    // d(tau_a)/d(omega_i): through lambda_i inside Cp and through the 1/omega
    // factor; both frozen when the speed is at the floor.
    double dtau_a = 0.0;
    if (!floored) {
      const double cp = cp_eval(surr, lambdas[i], aux);
      const double dcp = cp_grad_lambda(surr, lambdas[i], aux);
      dtau_a = coeff * (dcp * (p.R / u1) / w - cp / (w * w));
    }
    const double dtau_g = p.k_tau * p.k_omega / (p.R_tot + R_vs[i]);
    jac.own[i] = (dtau_a - dtau_g) / p.J;

    if (i > 0 && state.omegas[i - 1] >= kOmegaFloor) {
      const double dcp_daux = cp_grad_aux(surr, lambdas[i], aux);
      jac.upstream[i] = coeff / w * dcp_daux * (p.R / u1) / p.J;
    }
  }
  return jac;
}

void InputSeries::validate(std::size_t n_turbines) const {
  if (!(f_s > 0.0)) throw std::invalid_argument("inputs: f_s must be positive");
  if (u1.size() < 2) throw std::invalid_argument("inputs: need at least two samples");
  if (R_vs.size() != n_turbines) {
    throw std::invalid_argument("inputs: resistance series count != turbine count");
  }
  for (const auto& series : R_vs) {
    if (series.size() != u1.size()) {
      throw std::invalid_argument("inputs: series length mismatch");
    }
  }
}

void advance_rk4(const ArrayModel& model, ArrayState& state, double u1,
                 std::span<const double> R_vs, double dt, int substeps) {
  if (substeps < 1) throw std::invalid_argument("advance: substeps must be >= 1");
  const std::size_t K = model.size();
  const double h = dt / substeps;
  ArrayState probe;
  probe.omegas.resize(K);
  for (int s = 0; s < substeps; ++s) {
    const std::vector<double> k1 = rhs(state, u1, R_vs, model);
    for (std::size_t i = 0; i < K; ++i) probe.omegas[i] = state.omegas[i] + 0.5 * h * k1[i];
    const std::vector<double> k2 = rhs(probe, u1, R_vs, model);
    for (std::size_t i = 0; i < K; ++i) probe.omegas[i] = state.omegas[i] + 0.5 * h * k2[i];
    const std::vector<double> k3 = rhs(probe, u1, R_vs, model);
    for (std::size_t i = 0; i < K; ++i) probe.omegas[i] = state.omegas[i] + h * k3[i];
    const std::vector<double> k4 = rhs(probe, u1, R_vs, model);
    for (std::size_t i = 0; i < K; ++i) {
      state.omegas[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!std::isfinite(state.omegas[i])) {
        throw std::runtime_error("advance: non-finite state at t = " + std::to_string(state.time) +
                                 " turbine " + std::to_string(i + 1));
      }
      state.omegas[i] = std::max(state.omegas[i], kOmegaFloor);
    }
    state.time += h;
  }
}

Trajectory integrate(const ArrayModel& model, std::span<const double> omega0,
                     const InputSeries& inputs, int substeps) {
  model.validate();
  const std::size_t K = model.size();
  inputs.validate(K);
  if (omega0.size() != K) throw std::invalid_argument("integrate: omega0 size mismatch");
  if (substeps < 1) throw std::invalid_argument("integrate: substeps must be >= 1");

  const std::size_t n = inputs.samples();

  Trajectory traj;
  traj.f_s = inputs.f_s;
  traj.t.resize(n);
  traj.u1 = inputs.u1;
  traj.omegas.assign(K, std::vector<double>(n));
  traj.R_vs = inputs.R_vs;
  traj.cps.assign(K, std::vector<double>(n));
  traj.lambdas.assign(K, std::vector<double>(n));

  ArrayState state;
  state.omegas.assign(omega0.begin(), omega0.end());
  for (auto& w : state.omegas) w = std::max(w, kOmegaFloor);
  state.time = 0.0;

  std::vector<double> rv(K);
  for (std::size_t k = 0; k < n; ++k) {
    traj.t[k] = static_cast<double>(k) / inputs.f_s;
    const ArrayAero aero = array_aero(state, inputs.u1[k], model);
    for (std::size_t i = 0; i < K; ++i) {
      traj.omegas[i][k] = state.omegas[i];
      traj.cps[i][k] = aero.cps[i];
      traj.lambdas[i][k] = aero.lambdas[i];
    }
    if (k + 1 == n) break;
    for (std::size_t i = 0; i < K; ++i) rv[i] = inputs.R_vs[i][k];
    try {
      advance_rk4(model, state, inputs.u1[k], rv, 1.0 / inputs.f_s, substeps);
    } catch (const std::runtime_error&) {
      throw std::runtime_error("integrate: non-finite state while advancing sample " +
                               std::to_string(k));
    }
  }
  return traj;
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  CsvTable table;
  table.add_column("t", traj.t);
  table.add_column("u1", traj.u1);
  const std::size_t K = traj.omegas.size();
  for (std::size_t i = 0; i < K; ++i) table.add_column("omega_" + std::to_string(i + 1), traj.omegas[i]);
  for (std::size_t i = 0; i < K; ++i) table.add_column("Rv_" + std::to_string(i + 1), traj.R_vs[i]);
  for (std::size_t i = 0; i < K; ++i) table.add_column("cp_" + std::to_string(i + 1), traj.cps[i]);
  for (std::size_t i = 0; i < K; ++i) table.add_column("lambda_" + std::to_string(i + 1), traj.lambdas[i]);
  write_csv(table, path);
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  Trajectory traj;
  traj.t = table.column("t");
  traj.u1 = table.column("u1");
  for (std::size_t i = 1; table.has_column("omega_" + std::to_string(i)); ++i) {
    const std::string idx = std::to_string(i);
    traj.omegas.push_back(table.column("omega_" + idx));
    traj.R_vs.push_back(table.column("Rv_" + idx));
    traj.cps.push_back(table.column("cp_" + idx));
    traj.lambdas.push_back(table.column("lambda_" + idx));
  }
  if (traj.t.size() >= 2) traj.f_s = 1.0 / (traj.t[1] - traj.t[0]);
  return traj;
}

}  // namespace wtsid
