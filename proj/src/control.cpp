#include "wtsid/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace wtsid {

namespace {
constexpr double kPi = std::numbers::pi;
}

ResistorBank::ResistorBank(std::span<const double> resistors) {
  if (resistors.empty() || resistors.size() > 20) {
    throw std::invalid_argument("resistor bank: need 1..20 resistors");
  }
  for (double r : resistors) {
    if (!(r > 0.0)) throw std::invalid_argument("resistor bank: resistors must be positive");
  }
  const std::size_t combos = (std::size_t{1} << resistors.size()) - 1;
  values_.reserve(combos);
  for (std::size_t bits = 1; bits <= combos; ++bits) {
    double conductance = 0.0;
    for (std::size_t i = 0; i < resistors.size(); ++i) {
      if (bits & (std::size_t{1} << i)) conductance += 1.0 / resistors[i];
    }
    values_.push_back(1.0 / conductance);
  }
  std::sort(values_.begin(), values_.end());
  values_.erase(std::unique(values_.begin(), values_.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-12 * b; }),
                values_.end());
  if (values_.front() < 0.25 - 1e-9 || values_.back() > 1024.0 + 1e-9) {
    throw std::invalid_argument("resistor bank: values leave the supported 0.25..1024 Ohm range");
  }
}

ResistorBank ResistorBank::standard() {
  std::vector<double> resistors(12);
  for (std::size_t i = 0; i < resistors.size(); ++i) {
    resistors[i] = 1024.0 / static_cast<double>(std::size_t{1} << i);
  }
  return ResistorBank(resistors);
}

double ResistorBank::snap(double R) const {
  if (R <= values_.front()) return values_.front();
  if (R >= values_.back()) return values_.back();
  const auto hi = std::lower_bound(values_.begin(), values_.end(), R);
  const auto lo = hi - 1;
  // Ties go to the larger entry.
  return (R - *lo) < (*hi - R) ? *lo : *hi;
}

std::pair<double, double> find_optimum(const CpSurrogate& model, double aux) {
  model.validate();
  const double lo = model.config.support_min();
  const double hi = model.config.support_max();
  const double step = 0.01;

  double best_lambda = lo;
  double best_cp = cp_eval(model, lo, aux);
  for (double lambda = lo + step; lambda <= hi + 0.5 * step; lambda += step) {
    const double l = std::min(lambda, hi);
    const double cp = cp_eval(model, l, aux);
    if (cp > best_cp) {
      best_cp = cp;
      best_lambda = l;
    }
  }

  // Golden-section refinement inside the bracketing coarse cells.
  double a = std::max(lo, best_lambda - step);
  double b = std::min(hi, best_lambda + step);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = cp_eval(model, x1, aux);
  double f2 = cp_eval(model, x2, aux);
  while (b - a > 1e-5) {
    if (f1 >= f2) {  // keep the left interval on ties: smaller lambda wins
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = cp_eval(model, x1, aux);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = cp_eval(model, x2, aux);
    }
  }
  const double lambda_max = 0.5 * (a + b);
  const double cp_max = cp_eval(model, lambda_max, aux);
  const double cp_out = std::max(cp_max, best_cp);
  const double lambda_out = cp_max >= best_cp ? lambda_max : best_lambda;
  if (!(cp_out > 0.0)) {
    throw std::runtime_error("find_optimum: degenerate map, maximum cp is not positive");
  }
  return {lambda_out, cp_out};
}

double k_gain(double lambda_ref, double cp_ref, const TurbineParams& params) {
  if (!(lambda_ref > 0.0)) throw std::invalid_argument("k_gain: lambda_ref must be positive");
  const double area = kPi * params.R * params.R;
  return 0.5 * params.rho * area * std::pow(params.R, 3) * cp_ref / std::pow(lambda_ref, 3);
}

double resistance_command(double omega, double K, const TurbineParams& params,
                          const ResistorBank& bank) {
  if (!(omega > 0.0)) throw std::invalid_argument("resistance_command: omega must be positive");
  if (!(K > 0.0)) return bank.max_value();  // unloaded rotor limit
  const double ideal = params.k_tau * params.k_omega / (K * omega) - params.R_tot;
  return bank.snap(std::clamp(ideal, bank.min_value(), bank.max_value()));
}

Kw2Controller::Kw2Controller(CpSurrogate model, const TurbineParams& params, ResistorBank bank,
                             double f_s, double filter_cutoff)
    : model_(std::move(model)),
      params_(params),
      bank_(std::move(bank)),
      filter_(f_s, filter_cutoff) {
  model_.validate();
  params_.validate();
}

void Kw2Controller::set_reference(double lambda_ref, double aux_ref) {
  if (lambda_ref < model_.config.support_min() || lambda_ref > model_.config.support_max()) {
    throw std::invalid_argument("controller: lambda_ref outside the model's basis support");
  }
  lambda_ref_ = lambda_ref;
  cp_ref_ = cp_eval(model_, lambda_ref, aux_ref);
  K_ = k_gain(lambda_ref, cp_ref_, params_);
}

double Kw2Controller::update(double omega_meas) {
  const double filtered = filter_.step(omega_meas);
  return resistance_command(std::max(filtered, kOmegaFloor), K_, params_, bank_);
}

namespace {

double schedule_value(const SetpointSchedule& schedule, double t) {
  double v = schedule.front().lambda_ref;
  for (const auto& p : schedule) {
    if (p.t <= t + 1e-12) v = p.lambda_ref;
  }
  return v;
}

}  // namespace

ClosedLoopResult closed_loop(const ArrayModel& twin, const std::vector<ControllerSpec>& controllers,
                             const std::vector<SetpointSchedule>& schedules,
                             std::span<const double> u1, const ClosedLoopConfig& config) {
  twin.validate();
  const std::size_t K = twin.size();
  if (controllers.size() != K || schedules.size() != K) {
    throw std::invalid_argument("closed_loop: need one controller and schedule per turbine");
  }
  for (std::size_t i = 0; i < K; ++i) {
    if (schedules[i].empty()) throw std::invalid_argument("closed_loop: empty schedule");
    for (std::size_t p = 0; p + 1 < schedules[i].size(); ++p) {
      if (!(schedules[i][p].t < schedules[i][p + 1].t)) {
        throw std::invalid_argument("closed_loop: schedule times must increase");
      }
    }
  }
  if (u1.size() < 2) throw std::invalid_argument("closed_loop: wind series too short");

  const ResistorBank bank = ResistorBank::standard();
  std::vector<Kw2Controller> ctrl;
  ctrl.reserve(K);
  for (std::size_t i = 0; i < K; ++i) {
    const CpSurrogate& m =
        controllers[i].mode == ControllerSpec::Mode::KOmegaSquared ? controllers[i].model
                                                                   : twin.turbines[i].cp;
    ctrl.emplace_back(m, twin.turbines[i].params, bank, config.f_s, config.filter_cutoff);
  }

  const std::size_t n = u1.size();
  const double dt = 1.0 / config.f_s;

  ClosedLoopResult out;
  out.traj.f_s = config.f_s;
  out.traj.t.resize(n);
  out.traj.u1.assign(u1.begin(), u1.end());
  out.traj.omegas.assign(K, std::vector<double>(n));
  out.traj.R_vs.assign(K, std::vector<double>(n));
  out.traj.cps.assign(K, std::vector<double>(n));
  out.traj.lambdas.assign(K, std::vector<double>(n));
  out.lambda_ref_series.assign(K, std::vector<double>(n));

  ArrayState state;
  state.omegas.resize(K);
  for (std::size_t i = 0; i < K; ++i) {
    state.omegas[i] =
        std::max(schedule_value(schedules[i], 0.0) * u1[0] / twin.turbines[i].params.R,
                 kOmegaFloor);
  }

  std::vector<double> last_ref(K, -1.0), last_aux(K, -1.0);
  std::vector<double> rv(K);

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    out.traj.t[k] = t;

    for (std::size_t i = 0; i < K; ++i) {
      const double ref = schedule_value(schedules[i], t);
      out.lambda_ref_series[i][k] = ref;
      if (controllers[i].mode != ControllerSpec::Mode::KOmegaSquared) continue;
      const double aux = i == 0 ? twin.turbines[i].params.reynolds(config.u_ref)
                                : schedule_value(schedules[i - 1], t);
      if (ref != last_ref[i] || aux != last_aux[i]) {
        ctrl[i].set_reference(ref, aux);
        last_ref[i] = ref;
        last_aux[i] = aux;
      }
    }

    const ArrayAero aero = array_aero(state, u1[k], twin);
    for (std::size_t i = 0; i < K; ++i) {
      out.traj.omegas[i][k] = state.omegas[i];
      out.traj.cps[i][k] = aero.cps[i];
      out.traj.lambdas[i][k] = aero.lambdas[i];
      rv[i] = controllers[i].mode == ControllerSpec::Mode::KOmegaSquared
                  ? ctrl[i].update(state.omegas[i])
                  : bank.snap(controllers[i].fixed_R_v);
      out.traj.R_vs[i][k] = rv[i];
    }
    if (k + 1 == n) break;
    advance_rk4(twin, state, u1[k], rv, dt, config.substeps);
  }

  // Per-segment tracking statistics after the settling window.
  for (std::size_t i = 0; i < K; ++i) {
    std::vector<double> bounds;
    for (const auto& p : schedules[i]) {
      if (p.t < out.traj.t.back()) bounds.push_back(std::max(p.t, 0.0));
    }
    bounds.push_back(out.traj.t.back());
    for (std::size_t seg = 0; seg + 1 < bounds.size(); ++seg) {
      SegmentMetrics m;
      m.turbine = i + 1;
      m.t_begin = bounds[seg];
      m.t_end = bounds[seg + 1];
      m.lambda_ref = schedule_value(schedules[i], bounds[seg]);
      double sum = 0.0, sq = 0.0;
      std::size_t count = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const double t = out.traj.t[k];
        if (t < m.t_begin + config.settle_s || t > m.t_end) continue;
        const double err = out.traj.lambdas[i][k] - m.lambda_ref;
        sum += err;
        sq += err * err;
        ++count;
      }
      if (count > 0) {
        m.mean_err = sum / static_cast<double>(count);
        m.rms_err = std::sqrt(sq / static_cast<double>(count));
      }
      out.segments.push_back(m);
    }
  }
  return out;
}

}  // namespace wtsid
