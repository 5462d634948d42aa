#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "wtsid/identify.hpp"
#include "wtsid/signals.hpp"

using namespace wtsid;

namespace {

constexpr double kPi = std::numbers::pi;

// Least-squares amplitude of a tone in the steady tail of a filtered series.
double tone_amplitude(const std::vector<double>& y, double f_s, double freq, std::size_t skip) {
  double ss = 0.0, sc = 0.0, cc = 0.0, ys = 0.0, yc = 0.0;
  for (std::size_t k = skip; k < y.size(); ++k) {
    const double t = static_cast<double>(k) / f_s;
    const double s = std::sin(2.0 * kPi * freq * t);
    const double c = std::cos(2.0 * kPi * freq * t);
    ss += s * s;
    sc += s * c;
    cc += c * c;
    ys += y[k] * s;
    yc += y[k] * c;
  }
  const double det = ss * cc - sc * sc;
  const double a = (ys * cc - yc * sc) / det;
  const double b = (yc * ss - ys * sc) / det;
  return std::hypot(a, b);
}

std::vector<double> tone(double f_s, double freq, double duration) {
  const std::size_t n = static_cast<std::size_t>(duration * f_s) + 1;
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = std::sin(2.0 * kPi * freq * static_cast<double>(k) / f_s);
  }
  return x;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

TEST_CASE("low-turbulence wind follows the ramp schedule") {
  WindScenario sc;
  sc.kind = WindScenario::Kind::LowTurbulence;
  sc.u_mean = 8.0;
  SUBCASE("no knots gives a constant") {
    const auto u = gen_wind(sc, 4.0, 20.0);
    REQUIRE(u.size() == 81);
    for (double v : u) CHECK(v == 8.0);
  }
  SUBCASE("linear ramps between knots, hold past the last") {
    sc.ramp_knots = {{0.0, 6.0}, {2.0, 10.0}, {4.0, 10.0}};
    const auto u = gen_wind(sc, 6.0, 20.0);
    CHECK(u[0] == doctest::Approx(6.0));
    CHECK(u[20] == doctest::Approx(8.0));   // t = 1, halfway up the ramp
    CHECK(u[40] == doctest::Approx(10.0));  // t = 2
    CHECK(u[70] == doctest::Approx(10.0));  // hold
    CHECK(u.back() == doctest::Approx(10.0));
  }
}

TEST_CASE("Ornstein-Uhlenbeck wind has the requested statistics") {
  WindScenario sc;
  sc.kind = WindScenario::Kind::HighTurbulence;
  sc.u_mean = 8.0;
  sc.ti = 0.10;
  sc.t_corr = 1.5;
  sc.seed = 99;
  SUBCASE("zero intensity means constant wind") {
    WindScenario calm = sc;
    calm.ti = 0.0;
    const auto u = gen_wind(calm, 10.0, 20.0);
    for (double v : u) CHECK(v == doctest::Approx(8.0));
  }
  SUBCASE("sample std within 10% over 200 correlation times") {
    const auto u = gen_wind(sc, 200.0 * sc.t_corr, 20.0);
    CHECK(stddev(u) == doctest::Approx(sc.ti * sc.u_mean).epsilon(0.10));
    CHECK(mean(u) == doctest::Approx(sc.u_mean).epsilon(0.02));
    // Clipping floor respected.
    CHECK(*std::min_element(u.begin(), u.end()) >= 0.5 * sc.u_mean);
  }
  SUBCASE("same seed reproduces the series exactly") {
    const auto a = gen_wind(sc, 20.0, 20.0);
    const auto b = gen_wind(sc, 20.0, 20.0);
    CHECK(a == b);
  }
}

TEST_CASE("decorrelated anemometer pair matches the requested correlation") {
  WindScenario sc;
  sc.kind = WindScenario::Kind::HighTurbulence;
  sc.u_mean = 8.0;
  sc.ti = 0.10;
  sc.t_corr = 1.0;
  sc.seed = 1234;
  const double rho = 0.2;
  const WindPair pair = gen_wind_pair(sc, 400.0, 20.0, rho);
  REQUIRE(pair.driving.size() == pair.reported.size());

  const double ma = mean(pair.driving), mb = mean(pair.reported);
  double cov = 0.0;
  for (std::size_t k = 0; k < pair.driving.size(); ++k) {
    cov += (pair.driving[k] - ma) * (pair.reported[k] - mb);
  }
  cov /= static_cast<double>(pair.driving.size());
  const double corr = cov / (stddev(pair.driving) * stddev(pair.reported));
  CHECK(corr == doctest::Approx(rho).epsilon(0.5));
  CHECK(corr < 0.35);
  CHECK(stddev(pair.reported) == doctest::Approx(stddev(pair.driving)).epsilon(0.15));
}

TEST_CASE("prandtl velocity conversion") {
  CHECK(prandtl_velocity(0.0, 1.2) == 0.0);
  CHECK(prandtl_velocity(0.6, 1.2) == doctest::Approx(1.0));
  for (double u : {0.5, 3.0, 8.0, 20.0}) {
    const double dp = 0.5 * 1.2 * u * u;
    CHECK(prandtl_velocity(dp, 1.2) == doctest::Approx(u).epsilon(1e-14));
  }
  CHECK_THROWS(prandtl_velocity(-1.0, 1.2));
}

TEST_CASE("butterworth filter passes DC exactly") {
  const std::vector<double> c(200, 3.7);
  for (int order : {1, 4}) {
    for (auto mode : {FilterMode::Causal, FilterMode::ZeroPhase}) {
      const auto y = butterworth_lowpass(c, 20.0, 2.0, order, mode);
      REQUIRE(y.size() == c.size());
      for (double v : y) CHECK(v == doctest::Approx(3.7).epsilon(1e-10));
    }
  }
}

TEST_CASE("butterworth hits -3 dB at the cutoff") {
  const double f_s = 20.0, fc = 2.0;
  const auto x = tone(f_s, fc, 30.0);
  const auto y = butterworth_lowpass(x, f_s, fc, 4, FilterMode::Causal);
  const double amp = tone_amplitude(y, f_s, fc, 200);
  const double db = 20.0 * std::log10(amp);
  CHECK(db == doctest::Approx(-3.0103).epsilon(0.06));  // within 0.2 dB
  // The first-order section also lands on -3 dB at its cutoff.
  const auto y1 = butterworth_lowpass(x, f_s, fc, 1, FilterMode::Causal);
  const double db1 = 20.0 * std::log10(tone_amplitude(y1, f_s, fc, 200));
  CHECK(db1 == doctest::Approx(-3.0103).epsilon(0.06));
}

TEST_CASE("butterworth rolloff reaches 40 dB one decade up") {
  // A 20 Hz tone needs a sampling rate above Nyquist, so probe at 400 Hz.
  const double f_s = 400.0, fc = 2.0, f_probe = 20.0;
  const auto x = tone(f_s, f_probe, 10.0);
  const auto y = butterworth_lowpass(x, f_s, fc, 4, FilterMode::Causal);
  const double amp = tone_amplitude(y, f_s, f_probe, 2000);
  CHECK(20.0 * std::log10(amp) < -40.0);
}

TEST_CASE("zero-phase filtering preserves the impulse peak location") {
  std::vector<double> x(401, 0.0);
  x[200] = 1.0;
  const auto y = butterworth_lowpass(x, 20.0, 2.0, 4, FilterMode::ZeroPhase);
  const auto peak = std::max_element(y.begin(), y.end());
  CHECK(std::distance(y.begin(), peak) == 200);
  // The causal pass lags by construction.
  const auto yc = butterworth_lowpass(x, 20.0, 2.0, 4, FilterMode::Causal);
  const auto peak_c = std::max_element(yc.begin(), yc.end());
  CHECK(std::distance(yc.begin(), peak_c) > 200);
}

TEST_CASE("butterworth validates its arguments") {
  const std::vector<double> x(50, 1.0);
  CHECK_THROWS(butterworth_lowpass(x, 20.0, 10.0, 4, FilterMode::Causal));   // at Nyquist
  CHECK_THROWS(butterworth_lowpass(x, 20.0, 12.0, 4, FilterMode::Causal));   // beyond
  CHECK_THROWS(butterworth_lowpass(x, 20.0, 2.0, 2, FilterMode::Causal));    // unsupported order
}

TEST_CASE("streaming first-order filter matches the batch causal filter") {
  const auto x = tone(20.0, 1.0, 5.0);
  const auto batch = butterworth_lowpass(x, 20.0, 2.0, 1, FilterMode::Causal);
  FirstOrderLowpass filt(20.0, 2.0);
  filt.reset(x.front());
  for (std::size_t k = 0; k < x.size(); ++k) {
    CHECK(filt.step(x[k]) == doctest::Approx(batch[k]).epsilon(1e-12));
  }
}

TEST_CASE("twin truth maps have the documented shape") {
  const CpSurrogate free = make_twin_truth(TwinKind::Freestream);
  const CpSurrogate waked = make_twin_truth(TwinKind::Waked);
  const TurbineParams p;

  const double cp_peak = cp_eval(free, 5.0, p.reynolds(8.0));
  CHECK(cp_peak > 0.35);
  CHECK(cp_peak < 0.45);
  CHECK(cp_eval(free, free.config.support_max() + 0.1, 8.0e4) == 0.0);

  // The wake deepens as the upstream turbine approaches its optimum.
  CHECK(cp_eval(waked, 5.0, 5.0) < cp_eval(waked, 5.0, 6.5));
  CHECK(cp_eval(waked, 5.0, 4.0) > cp_eval(waked, 5.0, 5.0));
  // Waked output is well below freestream.
  CHECK(cp_eval(waked, 5.0, 5.0) < 0.6 * cp_peak);

  // Both maps keep every steady state attracting even for a torque law with
  // a vanishing slope (huge constant resistance).
  std::vector<double> lambdas, res, tsrs;
  for (double l = 3.5; l <= 8.5 + 1e-9; l += 0.01) lambdas.push_back(l);
  for (double r = 5.0e4; r <= 1.1e5; r += 1.0e4) res.push_back(r);
  for (double a = 3.5; a <= 8.5; a += 0.5) tsrs.push_back(a);
  const TorqueLaw coasting = TorqueLaw::constant_resistance(1.0e9);
  CHECK(stability_scan(free, p, lambdas, res, coasting).empty());
  CHECK(stability_scan(waked, p, lambdas, tsrs, coasting, 8.0).empty());
}

TEST_CASE("synthetic episodes carry calibrated noise and are reproducible") {
  ArrayModel twin;
  TurbineParams p;
  twin.turbines.push_back({p, make_twin_truth(TwinKind::Freestream)});
  twin.turbines.push_back({p, make_twin_truth(TwinKind::Waked)});

  const std::size_t n = 641;
  const std::vector<double> u(n, 8.0);
  const std::vector<std::vector<double>> rv(2, std::vector<double>(n, 2.0));
  const std::vector<double> omega0{5.0 * 8.0 / p.R, 4.0 * 8.0 / p.R};

  SUBCASE("zero noise reproduces the truth exactly") {
    NoiseSpec quiet;
    quiet.sigma_omega_rel = quiet.sigma_u_rel = quiet.sigma_tau_rel = 0.0;
    const SynthEpisode ep = synth_episode(twin, u, u, rv, quiet, omega0);
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(ep.measured.omegas_meas[0][k] == ep.truth.omegas[0][k]);
      CHECK(ep.measured.u1[k] == 8.0);
    }
  }
  SUBCASE("relative noise level recovered from residuals") {
    NoiseSpec noise;
    noise.sigma_omega_rel = 0.01;
    noise.seed = 17;
    const SynthEpisode ep = synth_episode(twin, u, u, rv, noise, omega0);
    std::vector<double> rel(n);
    for (std::size_t k = 0; k < n; ++k) {
      rel[k] = ep.measured.omegas_meas[0][k] / ep.truth.omegas[0][k] - 1.0;
    }
    CHECK(stddev(rel) == doctest::Approx(0.01).epsilon(0.10));
    CHECK(ep.measured.sigma_omega[0] ==
          doctest::Approx(0.01 * mean(ep.truth.omegas[0])).epsilon(0.01));
  }
  SUBCASE("seed determinism") {
    NoiseSpec noise;
    noise.seed = 5;
    const SynthEpisode a = synth_episode(twin, u, u, rv, noise, omega0);
    const SynthEpisode b = synth_episode(twin, u, u, rv, noise, omega0);
    CHECK(a.measured.omegas_meas[0] == b.measured.omegas_meas[0]);
    CHECK(a.measured.u1 == b.measured.u1);
  }
}
