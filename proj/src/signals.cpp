#include "wtsid/signals.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace wtsid {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t channel) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (channel + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void WindScenario::validate() const {
  if (!(u_mean > 0.0)) throw std::invalid_argument("wind: u_mean must be positive");
  if (ti < 0.0 || ti > 0.5) throw std::invalid_argument("wind: ti must be in [0, 0.5]");
  if (!(t_corr > 0.0)) throw std::invalid_argument("wind: t_corr must be positive");
  for (std::size_t i = 0; i + 1 < ramp_knots.size(); ++i) {
    if (!(ramp_knots[i].first < ramp_knots[i + 1].first)) {
      throw std::invalid_argument("wind: ramp knots must have increasing times");
    }
  }
  for (const auto& [t, u] : ramp_knots) {
    if (!(u > 0.0)) throw std::invalid_argument("wind: ramp knot speeds must be positive");
  }
}

namespace {

std::vector<double> eval_ramps(const WindScenario& sc, double duration, double f_s) {
  const std::size_t n = static_cast<std::size_t>(std::llround(duration * f_s)) + 1;
  std::vector<double> u(n, sc.u_mean);
  if (sc.ramp_knots.empty()) return u;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / f_s;
    const auto& kn = sc.ramp_knots;
    if (t <= kn.front().first) {
      u[k] = kn.front().second;
    } else if (t >= kn.back().first) {
      u[k] = kn.back().second;
    } else {
      std::size_t j = 0;
      while (kn[j + 1].first < t) ++j;
      const double w = (t - kn[j].first) / (kn[j + 1].first - kn[j].first);
      u[k] = kn[j].second + w * (kn[j + 1].second - kn[j].second);
    }
  }
  return u;
}

// Exact discretization of the Ornstein-Uhlenbeck process, started from the
// stationary distribution.
std::vector<double> ou_path(double u_mean, double sigma, double t_corr, std::size_t n, double dt,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double alpha = std::exp(-dt / t_corr);
  const double scatter = sigma * std::sqrt(1.0 - alpha * alpha);
  std::vector<double> x(n);
  double dev = sigma * gauss(rng);
  x[0] = u_mean + dev;
  for (std::size_t k = 1; k < n; ++k) {
    dev = alpha * dev + scatter * gauss(rng);
    x[k] = u_mean + dev;
  }
  return x;
}

void clip_low(std::vector<double>& u, double floor) {
  for (double& v : u) v = std::max(v, floor);
}

}  // namespace

std::vector<double> gen_wind(const WindScenario& scenario, double duration, double f_s) {
  scenario.validate();
  if (!(duration > 0.0) || !(f_s > 0.0)) {
    throw std::invalid_argument("wind: duration and f_s must be positive");
  }
  if (scenario.kind == WindScenario::Kind::LowTurbulence) {
    return eval_ramps(scenario, duration, f_s);
  }
  const std::size_t n = static_cast<std::size_t>(std::llround(duration * f_s)) + 1;
  auto u = ou_path(scenario.u_mean, scenario.ti * scenario.u_mean, scenario.t_corr, n, 1.0 / f_s,
                   mix_seed(scenario.seed, 0));
  clip_low(u, 0.5 * scenario.u_mean);
  return u;
}

WindPair gen_wind_pair(const WindScenario& scenario, double duration, double f_s, double corr) {
  scenario.validate();
  if (corr < -1.0 || corr > 1.0) throw std::invalid_argument("wind: corr must be in [-1, 1]");
  WindPair pair;
  pair.driving = gen_wind(scenario, duration, f_s);
  if (scenario.kind == WindScenario::Kind::LowTurbulence) {
    pair.reported = pair.driving;
    return pair;
  }
  const std::size_t n = pair.driving.size();
  const double sigma = scenario.ti * scenario.u_mean;
  auto other = ou_path(scenario.u_mean, sigma, scenario.t_corr, n, 1.0 / f_s,
                       mix_seed(scenario.seed, 1));
  pair.reported.resize(n);
  const double mix = std::sqrt(1.0 - corr * corr);
  for (std::size_t k = 0; k < n; ++k) {
    pair.reported[k] = scenario.u_mean + corr * (pair.driving[k] - scenario.u_mean) +
                       mix * (other[k] - scenario.u_mean);
  }
  clip_low(pair.reported, 0.5 * scenario.u_mean);
  return pair;
}

double prandtl_velocity(double delta_p, double rho) {
  if (delta_p < 0.0 || !std::isfinite(delta_p)) {
    throw std::invalid_argument("prandtl: negative differential pressure");
  }
  if (!(rho > 0.0)) throw std::invalid_argument("prandtl: rho must be positive");
  return std::sqrt(2.0 * delta_p / rho);
}

namespace {

// Direct-form-II-transposed second-order section.
struct Biquad {
  double b0, b1, b2, a1, a2;
  double z1 = 0.0, z2 = 0.0;

  static Biquad lowpass(double f_s, double cutoff, double q) {
    const double K = std::tan(M_PI * cutoff / f_s);
    const double norm = 1.0 / (1.0 + K / q + K * K);
    Biquad s{};
    s.b0 = K * K * norm;
    s.b1 = 2.0 * s.b0;
    s.b2 = s.b0;
    s.a1 = 2.0 * (K * K - 1.0) * norm;
    s.a2 = (1.0 - K / q + K * K) * norm;
    return s;
  }

  // Steady-state priming for a constant input, so DC passes exactly.
  void prime(double x0) {
    z2 = (b2 - a2) * x0;
    z1 = (b1 - a1) * x0 + z2;
  }

  double step(double x) {
    const double y = b0 * x + z1;
    z1 = b1 * x - a1 * y + z2;
    z2 = b2 * x - a2 * y;
    return y;
  }
};

struct FirstOrder {
  double b0, b1, a1;
  double x_prev = 0.0, y_prev = 0.0;

  static FirstOrder lowpass(double f_s, double cutoff) {
    const double K = std::tan(M_PI * cutoff / f_s);
    FirstOrder s{};
    s.b0 = K / (1.0 + K);
    s.b1 = s.b0;
    s.a1 = (K - 1.0) / (1.0 + K);
    return s;
  }

  void prime(double x0) {
    x_prev = x0;
    y_prev = x0;
  }

  double step(double x) {
    const double y = b0 * x + b1 * x_prev - a1 * y_prev;
    x_prev = x;
    y_prev = y;
    return y;
  }
};

struct Cascade {
  std::vector<Biquad> biquads;
  std::vector<FirstOrder> firsts;

  static Cascade make(double f_s, double cutoff, int order) {
    Cascade c;
    if (order == 1) {
      c.firsts.push_back(FirstOrder::lowpass(f_s, cutoff));
    } else if (order == 4) {
      // Butterworth pole pairs: Q = 1/(2 cos(pi/8)), 1/(2 cos(3 pi/8)).
      c.biquads.push_back(Biquad::lowpass(f_s, cutoff, 0.5 / std::cos(M_PI / 8.0)));
      c.biquads.push_back(Biquad::lowpass(f_s, cutoff, 0.5 / std::cos(3.0 * M_PI / 8.0)));
    } else {
      throw std::invalid_argument("butterworth: order must be 1 or 4");
    }
    return c;
  }

  void prime(double x0) {
    for (auto& s : biquads) s.prime(x0);
    for (auto& s : firsts) s.prime(x0);
  }

  double step(double x) {
    for (auto& s : biquads) x = s.step(x);
    for (auto& s : firsts) x = s.step(x);
    return x;
  }
};

std::vector<double> run_causal(std::span<const double> x, double f_s, double cutoff, int order) {
  Cascade c = Cascade::make(f_s, cutoff, order);
  c.prime(x.front());
  std::vector<double> y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = c.step(x[k]);
  return y;
}

// Anti-symmetric reflection about the end values keeps ramps continuous
// through the padded region.
std::vector<double> pad_reflect(std::span<const double> x, std::size_t pad) {
  std::vector<double> out;
  out.reserve(x.size() + 2 * pad);
  for (std::size_t j = pad; j >= 1; --j) out.push_back(2.0 * x.front() - x[j]);
  out.insert(out.end(), x.begin(), x.end());
  const std::size_t n = x.size();
  for (std::size_t j = 1; j <= pad; ++j) out.push_back(2.0 * x.back() - x[n - 1 - j]);
  return out;
}

}  // namespace

std::vector<double> butterworth_lowpass(std::span<const double> series, double f_s, double cutoff,
                                        int order, FilterMode mode) {
  if (series.empty()) return {};
  if (!(f_s > 0.0)) throw std::invalid_argument("butterworth: f_s must be positive");
  if (!(cutoff > 0.0) || cutoff >= 0.5 * f_s) {
    throw std::invalid_argument("butterworth: cutoff must lie below the Nyquist frequency");
  }
  if (mode == FilterMode::Causal) {
    return run_causal(series, f_s, cutoff, order);
  }
  // Zero phase: reflect-pad three filter time constants, filter forward and
  // backward, then strip the padding.
  const std::size_t pad =
      std::min(series.size() - 1,
               static_cast<std::size_t>(std::ceil(3.0 * f_s / (2.0 * M_PI * cutoff))));
  std::vector<double> padded = pad_reflect(series, pad);
  std::vector<double> fwd = run_causal(padded, f_s, cutoff, order);
  std::reverse(fwd.begin(), fwd.end());
  std::vector<double> bwd = run_causal(fwd, f_s, cutoff, order);
  std::reverse(bwd.begin(), bwd.end());
  return {bwd.begin() + static_cast<std::ptrdiff_t>(pad),
          bwd.begin() + static_cast<std::ptrdiff_t>(pad + series.size())};
}

FirstOrderLowpass::FirstOrderLowpass(double f_s, double cutoff) {
  if (!(f_s > 0.0) || !(cutoff > 0.0) || cutoff >= 0.5 * f_s) {
    throw std::invalid_argument("first-order filter: cutoff must lie below Nyquist");
  }
  const double K = std::tan(M_PI * cutoff / f_s);
  b0_ = K / (1.0 + K);
  b1_ = b0_;
  a1_ = (K - 1.0) / (1.0 + K);
}

void FirstOrderLowpass::reset(double x0) {
  x_prev_ = x0;
  y_prev_ = x0;
  primed_ = true;
}

double FirstOrderLowpass::step(double x) {
  if (!primed_) reset(x);
  const double y = b0_ * x + b1_ * x_prev_ - a1_ * y_prev_;
  x_prev_ = x;
  y_prev_ = y;
  return y;
}

void NoiseSpec::validate() const {
  if (sigma_omega_rel < 0.0 || sigma_u_rel < 0.0 || sigma_tau_rel < 0.0) {
    throw std::invalid_argument("noise: relative sigmas must be nonnegative");
  }
}

BasisConfig twin_truth_basis(TwinKind kind) {
  BasisConfig cfg;
  cfg.centers = {3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0};
  cfg.radius = 2.0;
  cfg.poly_orders = {0, 1, 2};
  if (kind == TwinKind::Freestream) {
    cfg.aux_kind = AuxKind::Reynolds;
    cfg.aux_scale = 8.0e4;
  } else {
    cfg.aux_kind = AuxKind::UpstreamTsr;
    cfg.aux_scale = 1.0;
  }
  return cfg;
}

CpSurrogate make_twin_truth(TwinKind kind) {
  // Bump profile over the turbine's own tip-speed ratio; peak 0.412 near
  // lambda = 5.14, Cp/lambda strictly decreasing on [3.3, 8.7].
  static constexpr double kBump[7] = {
      0.30395443867635907, 0.21408353233859140, 0.30178874365213315, 0.24252534268235831,
      0.23481691846434227, 0.14311760352519037, 0.14465868925013042};
  // Freestream: mild Reynolds gain, +-3% over the operating envelope
  // (argument is Re / 8e4).
  static constexpr double kReFactor[3] = {0.92, 0.10, -0.02};
  // Waked: quadratic in the upstream tip-speed ratio, minimum 0.45 where the
  // upstream turbine extracts the most (lambda_1 = 5).
  static constexpr double kWakeFactor[3] = {1.2, -0.3, 0.03};

  CpSurrogate model;
  model.config = twin_truth_basis(kind);
  const double* factor = kind == TwinKind::Freestream ? kReFactor : kWakeFactor;
  model.weights.resize(7, 3);
  for (int m = 0; m < 7; ++m) {
    for (int n = 0; n < 3; ++n) {
      model.weights(m, n) = kBump[m] * factor[n];
    }
  }
  return model;
}

SynthEpisode synth_episode(const ArrayModel& twin, std::span<const double> u1_driving,
                           std::span<const double> u1_reported,
                           const std::vector<std::vector<double>>& R_v_schedules,
                           const NoiseSpec& noise, std::span<const double> omega0, double f_s,
                           int substeps) {
  noise.validate();
  if (u1_reported.size() != u1_driving.size()) {
    throw std::invalid_argument("synth: driving/reported wind length mismatch");
  }
  InputSeries inputs;
  inputs.f_s = f_s;
  inputs.u1.assign(u1_driving.begin(), u1_driving.end());
  inputs.R_vs = R_v_schedules;

  SynthEpisode out;
  out.truth = integrate(twin, omega0, inputs, substeps);

  const std::size_t n = out.truth.samples();
  const std::size_t K = twin.size();
  Episode& ep = out.measured;
  ep.f_s = f_s;
  ep.t = out.truth.t;
  ep.R_vs = R_v_schedules;
  ep.u1.resize(n);
  ep.omegas_meas.assign(K, std::vector<double>(n));
  ep.sigma_omega.resize(K);

  std::mt19937_64 rng_u(mix_seed(noise.seed, 1000));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    ep.u1[k] = u1_reported[k] * (1.0 + noise.sigma_u_rel * gauss(rng_u));
  }
  for (std::size_t i = 0; i < K; ++i) {
    std::mt19937_64 rng_w(mix_seed(noise.seed, 2000 + i));
    double level = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      ep.omegas_meas[i][k] = out.truth.omegas[i][k] * (1.0 + noise.sigma_omega_rel * gauss(rng_w));
      level += std::abs(out.truth.omegas[i][k]);
    }
    ep.sigma_omega[i] = noise.sigma_omega_rel * level / static_cast<double>(n);
  }
  return out;
}

}  // namespace wtsid
