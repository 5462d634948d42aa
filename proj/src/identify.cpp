#include "wtsid/identify.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "wtsid/csv.hpp"
#include "wtsid/signals.hpp"

namespace wtsid {

namespace {

constexpr double kPi = std::numbers::pi;

double clamped(double omega) { return omega < kOmegaFloor ? kOmegaFloor : omega; }

}  // namespace

void SteadyGrid::validate() const {
  if (n_lambda == 0 || n_aux == 0 || samples.size() != n_lambda * n_aux) {
    throw std::invalid_argument("steady grid: shape/sample count mismatch");
  }
  for (const auto& s : samples) {
    if (!(s.omega > 0.0) || !(s.u1 > 0.0)) {
      throw std::invalid_argument("steady grid: omega and u1 must be positive");
    }
    if (!(s.sigma_omega > 0.0) || !(s.sigma_u > 0.0) || !(s.sigma_tau > 0.0)) {
      throw std::invalid_argument("steady grid: sigmas must be positive");
    }
  }
}

void write_steady_csv(const SteadyGrid& grid, const std::filesystem::path& path) {
  CsvTable table;
  std::vector<double> jl, ka, omega, u1, rv, so, su, st, aux;
  for (std::size_t j = 0; j < grid.n_lambda; ++j) {
    for (std::size_t k = 0; k < grid.n_aux; ++k) {
      const SteadySample& s = grid.at(j, k);
      jl.push_back(static_cast<double>(j));
      ka.push_back(static_cast<double>(k));
      omega.push_back(s.omega);
      u1.push_back(s.u1);
      rv.push_back(s.R_v);
      so.push_back(s.sigma_omega);
      su.push_back(s.sigma_u);
      st.push_back(s.sigma_tau);
      aux.push_back(s.aux);
    }
  }
  table.add_column("i_lambda", jl);
  table.add_column("i_aux", ka);
  table.add_column("omega", omega);
  table.add_column("u1", u1);
  table.add_column("Rv", rv);
  table.add_column("sigma_omega", so);
  table.add_column("sigma_u", su);
  table.add_column("sigma_tau", st);
  table.add_column("aux", aux);
  write_csv(table, path);
}

SteadyGrid read_steady_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  SteadyGrid grid;
  const auto& jl = table.column("i_lambda");
  const auto& ka = table.column("i_aux");
  for (std::size_t r = 0; r < jl.size(); ++r) {
    grid.n_lambda = std::max(grid.n_lambda, static_cast<std::size_t>(jl[r]) + 1);
    grid.n_aux = std::max(grid.n_aux, static_cast<std::size_t>(ka[r]) + 1);
  }
  grid.samples.resize(grid.n_lambda * grid.n_aux);
  for (std::size_t r = 0; r < jl.size(); ++r) {
    SteadySample s;
    s.omega = table.column("omega")[r];
    s.u1 = table.column("u1")[r];
    s.R_v = table.column("Rv")[r];
    s.sigma_omega = table.column("sigma_omega")[r];
    s.sigma_u = table.column("sigma_u")[r];
    s.sigma_tau = table.column("sigma_tau")[r];
    s.aux = table.column("aux")[r];
    grid.at(static_cast<std::size_t>(jl[r]), static_cast<std::size_t>(ka[r])) = s;
  }
  grid.validate();
  return grid;
}

void Episode::validate() const {
  if (t.size() < 2) throw std::invalid_argument("episode: need at least two samples");
  if (u1.size() != t.size()) throw std::invalid_argument("episode: u1 length mismatch");
  if (omegas_meas.empty() || omegas_meas.size() != R_vs.size() ||
      sigma_omega.size() != omegas_meas.size()) {
    throw std::invalid_argument("episode: per-turbine series count mismatch");
  }
  for (std::size_t i = 0; i < omegas_meas.size(); ++i) {
    if (omegas_meas[i].size() != t.size() || R_vs[i].size() != t.size()) {
      throw std::invalid_argument("episode: series length mismatch");
    }
  }
  const double dt = 1.0 / f_s;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    if (std::abs(t[k + 1] - t[k] - dt) > 1e-9 * std::max(1.0, std::abs(t[k]))) {
      throw std::invalid_argument("episode: time base is not uniform at 1/f_s");
    }
  }
}

void EpisodeFile::validate() const {
  if (t.size() < 2) throw std::invalid_argument("episode file: need at least two samples");
  if (u1.size() != t.size() || omega_star.size() != t.size() || R_v.size() != t.size()) {
    throw std::invalid_argument("episode file: series length mismatch");
  }
  if (!omega_upstream.empty() && omega_upstream.size() != t.size()) {
    throw std::invalid_argument("episode file: omega_upstream length mismatch");
  }
  if (!omega_true.empty() && omega_true.size() != t.size()) {
    throw std::invalid_argument("episode file: omega_true length mismatch");
  }
  const double dt = 1.0 / f_s;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    if (std::abs(t[k + 1] - t[k] - dt) > 1e-9 * std::max(1.0, std::abs(t[k]))) {
      throw std::invalid_argument("episode file: time base is not uniform at 1/f_s");
    }
  }
  for (double u : u1) {
    if (!(u > 0.0)) throw std::invalid_argument("episode file: wind speed must stay positive");
  }
}

void write_episode_csv(const EpisodeFile& episode, const std::filesystem::path& path) {
  const std::string idx = std::to_string(episode.turbine);
  CsvTable table;
  table.add_column("t", episode.t);
  table.add_column("u1", episode.u1);
  table.add_column("omega_star_" + idx, episode.omega_star);
  table.add_column("Rv_" + idx, episode.R_v);
  if (!episode.omega_upstream.empty()) table.add_column("omega_upstream", episode.omega_upstream);
  if (!episode.omega_true.empty()) table.add_column("omega_true_" + idx, episode.omega_true);
  write_csv(table, path);
}

EpisodeFile read_episode_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  EpisodeFile ep;
  ep.t = table.column("t");
  ep.u1 = table.column("u1");
  for (const auto& name : table.names) {
    if (name.rfind("omega_star_", 0) == 0) {
      ep.turbine = std::stoi(name.substr(11));
      ep.omega_star = table.column(name);
    } else if (name.rfind("Rv_", 0) == 0) {
      ep.R_v = table.column(name);
    } else if (name == "omega_upstream") {
      ep.omega_upstream = table.column(name);
    } else if (name.rfind("omega_true_", 0) == 0) {
      ep.omega_true = table.column(name);
    }
  }
  if (ep.t.size() >= 2) ep.f_s = 1.0 / (ep.t[1] - ep.t[0]);
  ep.validate();
  return ep;
}

void IdentifyConfig::validate() const {
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("identify config: beta1, beta2 must lie in (0, 1)");
  }
  if (!(eta_lr > 0.0) || !(restart_threshold > 0.0) || !(lr_drop_threshold > 0.0) ||
      !(lr_drop_factor > 0.0)) {
    throw std::invalid_argument("identify config: rates and thresholds must be positive");
  }
  if (max_iters < 0) throw std::invalid_argument("identify config: max_iters must be >= 0");
  if (substeps < 1) throw std::invalid_argument("identify config: substeps must be >= 1");
}

TrainingSeries make_training_series(const EpisodeFile& episode, const TurbineParams& params,
                                    const IdentifyConfig& config) {
  episode.validate();
  TrainingSeries ts;
  ts.f_s = episode.f_s;
  ts.t = episode.t;
  ts.u1 = episode.u1;
  ts.R_v = episode.R_v;
  ts.omega_star = butterworth_lowpass(episode.omega_star, episode.f_s, config.filter_cutoff,
                                      config.filter_order, FilterMode::ZeroPhase);
  ts.aux.resize(episode.t.size());
  if (episode.omega_upstream.empty()) {
    for (std::size_t k = 0; k < ts.aux.size(); ++k) ts.aux[k] = params.reynolds(episode.u1[k]);
  } else {
    const std::vector<double> up =
        butterworth_lowpass(episode.omega_upstream, episode.f_s, config.filter_cutoff,
                            config.filter_order, FilterMode::ZeroPhase);
    for (std::size_t k = 0; k < ts.aux.size(); ++k) {
      ts.aux[k] = params.tip_speed_ratio(up[k], episode.u1[k]);
    }
  }
  return ts;
}

SteadyCp steady_cp(const SteadySample& sample, const TurbineParams& params) {
  if (!(sample.omega > 0.0) || !(sample.u1 > 0.0)) {
    throw std::invalid_argument("steady_cp: omega and u1 must be positive");
  }
  const double tau_g = gen_torque(sample.omega, sample.R_v, params);
  const double denom = params.rho * kPi * params.R * params.R * std::pow(sample.u1, 3);
  if (!(denom > 0.0)) throw std::invalid_argument("steady_cp: zero denominator");
  const double cp = 2.0 * tau_g * sample.omega / denom;

  // First-order propagation; cp scales as omega^2 through tau_g(omega).
  const double d_omega = 2.0 * cp / sample.omega * sample.sigma_omega;
  const double d_u = -3.0 * cp / sample.u1 * sample.sigma_u;
  const double d_tau = tau_g > 0.0 ? cp / tau_g * sample.sigma_tau : 0.0;
  return {cp, std::sqrt(d_omega * d_omega + d_u * d_u + d_tau * d_tau)};
}

Eigen::MatrixXd wls_init(const SteadyGrid& grid, const BasisConfig& config,
                         const TurbineParams& params) {
  grid.validate();
  config.validate();
  const std::size_t nl = grid.n_lambda;
  const std::size_t na = grid.n_aux;

  Eigen::MatrixXd cp_mat(nl, na);
  std::vector<double> lambda_rows(nl, 0.0);
  std::vector<double> aux_cols(na, 0.0);
  std::vector<double> row_var(nl, 0.0);
  for (std::size_t j = 0; j < nl; ++j) {
    for (std::size_t k = 0; k < na; ++k) {
      const SteadySample& s = grid.at(j, k);
      const SteadyCp c = steady_cp(s, params);
      cp_mat(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = c.cp;
      lambda_rows[j] += params.tip_speed_ratio(s.omega, s.u1) / static_cast<double>(na);
      aux_cols[k] += s.aux / static_cast<double>(nl);
      row_var[j] += c.sigma_cp * c.sigma_cp / static_cast<double>(na);
    }
  }

  const Eigen::MatrixXd phi = phi_matrix(lambda_rows, config);
  const Eigen::MatrixXd psi = psi_matrix(aux_cols, config);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_phi(phi);
  if (qr_phi.rank() < phi.cols()) {
    throw std::runtime_error("wls_init: RBF block is rank deficient on this grid");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_psi(psi);
  if (qr_psi.rank() < psi.cols()) {
    throw std::runtime_error("wls_init: polynomial block is rank deficient on this grid");
  }

  // Row weights sigma_min^2 / sigma_j^2 enter as sqrt factors on the
  // overdetermined system, which solves the weighted normal equations.
  double var_min = row_var[0];
  for (double v : row_var) var_min = std::min(var_min, v);
  Eigen::VectorXd w_sqrt(nl);
  for (std::size_t j = 0; j < nl; ++j) w_sqrt(static_cast<Eigen::Index>(j)) = std::sqrt(var_min / row_var[j]);

  const Eigen::MatrixXd phi_w = w_sqrt.asDiagonal() * phi;
  const Eigen::MatrixXd cp_w = w_sqrt.asDiagonal() * cp_mat;
  const Eigen::MatrixXd a = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(phi_w).solve(cp_w);
  const Eigen::MatrixXd w_t = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(psi).solve(a.transpose());
  return w_t.transpose();
}

namespace {

// Scalar single-turbine machinery shared by the forward solve, the adjoint
// solve, and plain simulation. Heap-free in the inner loops.
class TurbineOde {
 public:
  TurbineOde(const CpSurrogate& model, const TurbineParams& params)
      : model_(model), params_(params), wpsi_(model.weights.rows()) {}

  // Fix the zero-order-held inputs for one sample interval.
  void set_inputs(double u, double R_v, double aux) {
    u_ = u;
    r_sum_ = params_.R_tot + R_v;
    if (!(u_ > 0.0)) throw std::invalid_argument("episode: wind speed must be positive");
    if (!(r_sum_ > 0.0)) throw std::invalid_argument("episode: zero circuit resistance");
    coeff_ = 0.5 * params_.rho * kPi * params_.R * params_.R * u_ * u_ * u_;
    wpsi_ = model_.weights * psi_row(aux, model_.config).transpose();
  }

  double cp(double lambda) const {
    double acc = 0.0;
    const auto& cfg = model_.config;
    for (std::size_t m = 0; m < cfg.num_rbf(); ++m) {
      const double d = lambda - cfg.centers[m];
      if (std::abs(d) > cfg.radius) continue;
      const double q = 1.0 - d * d / (cfg.radius * cfg.radius);
      const double q2 = q * q;
      acc += q2 * q2 * q * wpsi_(static_cast<Eigen::Index>(m));
    }
    return acc;
  }

  double dcp_dlambda(double lambda) const {
    double acc = 0.0;
    const auto& cfg = model_.config;
    for (std::size_t m = 0; m < cfg.num_rbf(); ++m) {
      const double d = lambda - cfg.centers[m];
      if (std::abs(d) > cfg.radius) continue;
      const double q = 1.0 - d * d / (cfg.radius * cfg.radius);
      const double q2 = q * q;
      acc += -10.0 * d / (cfg.radius * cfg.radius) * q2 * q2 * wpsi_(static_cast<Eigen::Index>(m));
    }
    return acc;
  }

  double f(double omega) const {
    const double w = clamped(omega);
    const double lambda = w * params_.R / u_;
    const double tau_a = coeff_ * cp(lambda) / w;
    const double tau_g = params_.k_tau * params_.k_omega * omega / r_sum_;
    return (tau_a - tau_g) / params_.J;
  }

  double df_domega(double omega) const {
    const double dtau_g = params_.k_tau * params_.k_omega / r_sum_;
    if (omega < kOmegaFloor) return -dtau_g / params_.J;
    const double lambda = omega * params_.R / u_;
    const double c = cp(lambda);
    const double dc = dcp_dlambda(lambda);
    const double dtau_a = coeff_ * (dc * (params_.R / u_) / omega - c / (omega * omega));
    return (dtau_a - dtau_g) / params_.J;
  }

  // d f / d w_{mn} = coeff/(J omega) * phi_m(lambda) * psi_n(aux); the phi
  // part is returned through `phi`, the caller owns the psi factor.
  double df_dw_scale(double omega) const { return coeff_ / (params_.J * clamped(omega)); }

  double u() const { return u_; }

 private:
  const CpSurrogate& model_;
  const TurbineParams& params_;
  double u_ = 1.0, r_sum_ = 1.0, coeff_ = 0.0;
  Eigen::VectorXd wpsi_;
};

void check_series(const TrainingSeries& series) {
  const std::size_t n = series.t.size();
  if (n < 2 || series.u1.size() != n || series.omega_star.size() != n ||
      series.R_v.size() != n || series.aux.size() != n) {
    throw std::invalid_argument("training series: length mismatch");
  }
}

std::vector<double> forward_solve(TurbineOde& ode, const TrainingSeries& series, int substeps) {
  const std::size_t n = series.t.size();
  const double dt = 1.0 / (series.f_s * substeps);
  std::vector<double> omega(n);
  double w = std::max(series.omega_star[0], kOmegaFloor);
  omega[0] = w;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    ode.set_inputs(series.u1[k], series.R_v[k], series.aux[k]);
    for (int s = 0; s < substeps; ++s) {
      const double k1 = ode.f(w);
      const double k2 = ode.f(w + 0.5 * dt * k1);
      const double k3 = ode.f(w + 0.5 * dt * k2);
      const double k4 = ode.f(w + dt * k3);
      w += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!std::isfinite(w)) {
        double partial = 0.0;
        for (std::size_t j = 0; j <= k; ++j) {
          const double weight = (j == 0) ? 0.5 : 1.0;
          const double resid = series.omega_star[j] - omega[j];
          partial += weight * resid * resid / series.f_s;
        }
        throw EpisodeBlowup(k, partial / series.duration());
      }
      w = std::max(w, kOmegaFloor);
    }
    omega[k + 1] = w;
  }
  return omega;
}

// Cubic Hermite value on a unit interval given endpoint values and slopes
// (slopes already scaled by the interval length).
double hermite(double y0, double s0, double y1, double s1, double tau) {
  const double t2 = tau * tau;
  const double t3 = t2 * tau;
  return (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + tau) * s0 +
         (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * s1;
}

}  // namespace

EpisodeBlowup::EpisodeBlowup(std::size_t sample_in, double partial_cost_in)
    : std::runtime_error("episode: forward solve blew up at sample " + std::to_string(sample_in) +
                         " (partial cost " + std::to_string(partial_cost_in) + ")"),
      sample(sample_in),
      partial_cost(partial_cost_in) {}

std::vector<double> simulate_turbine(const CpSurrogate& model, const TrainingSeries& series,
                                     const TurbineParams& params, int substeps) {
  model.validate();
  params.validate();
  check_series(series);
  TurbineOde ode(model, params);
  return forward_solve(ode, series, substeps);
}

EpisodeGrad episode_cost_and_grad(const CpSurrogate& model, const TrainingSeries& series,
                                  const TurbineParams& params, int substeps) {
  model.validate();
  params.validate();
  check_series(series);

  const std::size_t n = series.t.size();
  const double dt = 1.0 / series.f_s;
  const double dt_sub = dt / substeps;
  const double T0 = series.duration();

  TurbineOde ode(model, params);
  const std::vector<double> omega = forward_solve(ode, series, substeps);

  // Measured-signal slopes for the interpolant (centered differences).
  std::vector<double> mstar(n);
  mstar[0] = (series.omega_star[1] - series.omega_star[0]) * series.f_s;
  mstar[n - 1] = (series.omega_star[n - 1] - series.omega_star[n - 2]) * series.f_s;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    mstar[k] = 0.5 * (series.omega_star[k + 1] - series.omega_star[k - 1]) * series.f_s;
  }

  // Backward sweep of the adjoint terminal value problem,
  // ds/dt = -(df/domega) s + 2 (omega* - omega)/T0, s(T0) = 0,
  // with the forward state reconstructed by cubic interpolation inside each
  // sample interval.
  std::vector<double> s_at_sample(n, 0.0);
  double s = 0.0;
  for (std::size_t k = n - 1; k-- > 0;) {
    ode.set_inputs(series.u1[k], series.R_v[k], series.aux[k]);
    const double w0 = omega[k];
    const double w1 = omega[k + 1];
    const double f0 = ode.f(w0) * dt;
    const double f1 = ode.f(w1) * dt;
    const double y0 = series.omega_star[k];
    const double y1 = series.omega_star[k + 1];
    const double g0 = mstar[k] * dt;
    const double g1 = mstar[k + 1] * dt;

    auto rate = [&](double tau, double s_val) {
      const double w = hermite(w0, f0, w1, f1, tau);
      const double resid = hermite(y0, g0, y1, g1, tau) - w;
      return -ode.df_domega(w) * s_val + 2.0 * resid / T0;
    };

    const double h = -dt_sub;
    for (int sub = substeps; sub-- > 0;) {
      const double tau1 = static_cast<double>(sub + 1) / substeps;
      const double tau_mid = (static_cast<double>(sub) + 0.5) / substeps;
      const double tau0 = static_cast<double>(sub) / substeps;
      const double k1 = rate(tau1, s);
      const double k2 = rate(tau_mid, s + 0.5 * h * k1);
      const double k3 = rate(tau_mid, s + 0.5 * h * k2);
      const double k4 = rate(tau0, s + h * k3);
      s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    s_at_sample[k] = s;
  }

  // Cost and gradient integrals by the trapezoidal rule on the sample grid.
  EpisodeGrad out;
  out.grad = Eigen::MatrixXd::Zero(model.weights.rows(), model.weights.cols());
  double cost = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double weight = (k == 0 || k + 1 == n) ? 0.5 * dt : dt;
    const double resid = series.omega_star[k] - omega[k];
    cost += weight * resid * resid;

    ode.set_inputs(series.u1[k], series.R_v[k], series.aux[k]);
    const double scale = weight * s_at_sample[k] * ode.df_dw_scale(omega[k]);
    const double lambda = clamped(omega[k]) * params.R / series.u1[k];
    out.grad.noalias() +=
        scale * phi_row(lambda, model.config).transpose() * psi_row(series.aux[k], model.config);
  }
  out.cost = cost / T0;
  return out;
}

AdamOptimizer::AdamOptimizer(Eigen::Index rows, Eigen::Index cols, const IdentifyConfig& config)
    : eta_(config.eta_lr),
      beta1_(config.beta1),
      beta2_(config.beta2),
      epsilon_(config.epsilon),
      m_(Eigen::MatrixXd::Zero(rows, cols)),
      v_(Eigen::MatrixXd::Zero(rows, cols)) {}

Eigen::MatrixXd AdamOptimizer::step(const Eigen::MatrixXd& grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  const Eigen::MatrixXd mhat = m_ / c1;
  const Eigen::MatrixXd vhat = v_ / c2;
  return -eta_ * mhat.cwiseQuotient(vhat.cwiseSqrt().array().matrix() +
                                    Eigen::MatrixXd::Constant(m_.rows(), m_.cols(), epsilon_));
}

void AdamOptimizer::restart() {
  m_.setZero();
  v_.setZero();
  t_ = 0;
}

Eigen::MatrixXd adam_minimize(Eigen::MatrixXd w0, const CostGradFn& objective,
                              const IdentifyConfig& config, AdamRunReport* report,
                              const AdamObserver& observer) {
  config.validate();
  AdamRunReport local;
  AdamRunReport& rep = report ? *report : local;
  rep = AdamRunReport{};

  Eigen::MatrixXd w = std::move(w0);
  Eigen::MatrixXd grad(w.rows(), w.cols());
  double cost;
  try {
    cost = objective(w, grad);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("adam: initial evaluation failed: ") + e.what());
  }
  if (!std::isfinite(cost)) throw std::runtime_error("adam: initial cost is not finite");
  rep.cost_history.push_back(cost);

  AdamOptimizer opt(w.rows(), w.cols(), config);
  bool lr_dropped = false;
  int consecutive_failures = 0;
  Eigen::MatrixXd prev_w = w;
  double prev_cost = cost;

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    prev_w = w;
    w += opt.step(grad);

    double new_cost = std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd new_grad(w.rows(), w.cols());
    try {
      new_cost = objective(w, new_grad);
    } catch (const std::exception&) {
      new_cost = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(new_cost)) {
      ++consecutive_failures;
      if (consecutive_failures >= 2) {
        throw std::runtime_error("adam: non-finite cost after restart at iteration " +
                                 std::to_string(iter) + " (|w| = " + std::to_string(w.norm()) +
                                 ")");
      }
      // Undo the step and reset the moment filters; retry from the last
      // good iterate with the gradient already in hand.
      w = prev_w;
      opt.restart();
      rep.restart_iters.push_back(iter);
      rep.cost_history.push_back(prev_cost);
      rep.iterations = iter;
      if (observer) observer(iter, prev_cost, opt);
      continue;
    }
    consecutive_failures = 0;
    rep.cost_history.push_back(new_cost);

    if (new_cost - prev_cost > config.restart_threshold) {
      opt.restart();
      rep.restart_iters.push_back(iter);
    }
    if (!lr_dropped && new_cost < config.lr_drop_threshold) {
      opt.set_learning_rate(config.eta_lr / config.lr_drop_factor);
      lr_dropped = true;
      rep.lr_drop_iter = iter;
    }

    prev_cost = new_cost;
    grad = std::move(new_grad);
    rep.iterations = iter;
    if (observer) observer(iter, new_cost, opt);

    const std::size_t h = rep.cost_history.size();
    if (static_cast<int>(h) > config.conv_window) {
      const double old_cost = rep.cost_history[h - 1 - config.conv_window];
      if (std::abs(new_cost - old_cost) <
          config.conv_rel_tol * std::max(std::abs(old_cost), 1e-12)) {
        rep.converged = true;
        break;
      }
    }
  }
  return w;
}

CpSurrogate adam_run(const CpSurrogate& init, const std::vector<TrainingSeries>& episodes,
                     const TurbineParams& params, const IdentifyConfig& config,
                     AdamRunReport* report) {
  init.validate();
  config.validate();
  if (episodes.empty()) throw std::invalid_argument("adam_run: need at least one episode");

  CpSurrogate model = init;
  const CostGradFn objective = [&](const Eigen::MatrixXd& w, Eigen::MatrixXd& grad_out) {
    CpSurrogate probe = model;
    probe.weights = w;
    grad_out.setZero(w.rows(), w.cols());
    double total = 0.0;
    for (const auto& ep : episodes) {
      const EpisodeGrad eg = episode_cost_and_grad(probe, ep, params, config.substeps);
      total += eg.cost;
      grad_out += eg.grad;
    }
    return total;
  };

  AdamRunReport local;
  AdamRunReport& rep = report ? *report : local;
  model.weights = adam_minimize(init.weights, objective, config, &rep);

  for (const auto& ep : episodes) {
    rep.final_cost_per_episode.push_back(
        episode_cost_and_grad(model, ep, params, config.substeps).cost);
  }
  return model;
}

std::vector<StabilityViolation> stability_scan(const CpSurrogate& model,
                                               const TurbineParams& params,
                                               std::span<const double> lambda_grid,
                                               std::span<const double> aux_grid,
                                               const TorqueLaw& law, double u_ref) {
  model.validate();
  params.validate();
  std::vector<StabilityViolation> violations;
  for (double aux : aux_grid) {
    const double u =
        model.config.aux_kind == AuxKind::Reynolds ? aux * params.nu / (2.0 * params.R) : u_ref;
    if (!(u > 0.0)) throw std::invalid_argument("stability_scan: nonpositive wind speed");
    for (double lambda : lambda_grid) {
      const double cp = cp_eval(model, lambda, aux);
      const double dcp = cp_grad_lambda(model, lambda, aux);
      const double dcq = (dcp * lambda - cp) / (lambda * lambda);
      double dtau_g;
      if (law.kind == TorqueLaw::Kind::ConstantResistance) {
        dtau_g = params.k_tau * params.k_omega * u / (params.R * (params.R_tot + law.value));
      } else {
        dtau_g = 2.0 * law.value * lambda * u * u / (params.R * params.R);
      }
      const double df =
          (0.5 * params.rho * kPi * std::pow(params.R, 3) * u * u * dcq - dtau_g) / params.J;
      if (df >= 0.0) violations.push_back({lambda, aux, df});
    }
  }
  return violations;
}

}  // namespace wtsid
