#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <filesystem>
#include <random>

#include "wtsid/basis.hpp"

using namespace wtsid;

namespace {

CpSurrogate random_model(unsigned seed, BasisConfig config = {}) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  CpSurrogate model;
  model.config = config;
  model.weights.resize(config.num_rbf(), config.num_poly());
  for (Eigen::Index m = 0; m < model.weights.rows(); ++m) {
    for (Eigen::Index n = 0; n < model.weights.cols(); ++n) model.weights(m, n) = dist(rng);
  }
  return model;
}

// Independent double-loop evaluation of the tensor-product sum.
double cp_oracle(const CpSurrogate& model, double lambda, double aux) {
  double acc = 0.0;
  for (std::size_t m = 0; m < model.config.num_rbf(); ++m) {
    for (std::size_t n = 0; n < model.config.num_poly(); ++n) {
      const double d = lambda - model.config.centers[m];
      double phi = 0.0;
      if (std::abs(d) <= model.config.radius) {
        phi = std::pow(1.0 - d * d / (model.config.radius * model.config.radius), 5);
      }
      const double psi = std::pow(aux / model.config.aux_scale, model.config.poly_orders[n]);
      acc += model.weights(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) * phi * psi;
    }
  }
  return acc;
}

}  // namespace

TEST_CASE("rbf_eval basic values") {
  CHECK(rbf_eval(5.0, 5.0, 1.5) == doctest::Approx(1.0));
  CHECK(rbf_eval(7.0, 5.0, 1.5) == 0.0);
  CHECK(rbf_eval(5.0 + 1.5 / std::sqrt(2.0), 5.0, 1.5) == doctest::Approx(0.03125).epsilon(1e-12));
  CHECK(rbf_eval(5.0 - 1.5 / std::sqrt(2.0), 5.0, 1.5) == doctest::Approx(0.03125).epsilon(1e-12));
  // Value stays in [0, 1].
  for (double l = 0.0; l < 10.0; l += 0.01) {
    const double v = rbf_eval(l, 5.0, 1.5);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS(rbf_eval(std::nan(""), 5.0, 1.5));
  CHECK_THROWS(rbf_eval(5.0, 5.0, 0.0));
}

TEST_CASE("rbf_deriv vanishes at center and support edge, matches FD") {
  CHECK(rbf_deriv(5.0, 5.0, 1.5) == 0.0);
  CHECK(rbf_deriv(6.5, 5.0, 1.5) == 0.0);
  CHECK(rbf_deriv(3.5, 5.0, 1.5) == 0.0);
  const double h = 1e-6;
  for (double l = 3.0; l < 7.0; l += 0.037) {
    const double fd = (rbf_eval(l + h, 5.0, 1.5) - rbf_eval(l - h, 5.0, 1.5)) / (2.0 * h);
    CHECK(rbf_deriv(l, 5.0, 1.5) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("phi_matrix at the default centers is unit diagonal") {
  BasisConfig config;
  const std::vector<double> lambdas = config.centers;
  const Eigen::MatrixXd phi = phi_matrix(lambdas, config);
  REQUIRE(phi.rows() == 5);
  REQUIRE(phi.cols() == 5);
  for (int j = 0; j < 5; ++j) {
    CHECK(phi(j, j) == doctest::Approx(1.0));
    for (int m = 0; m < 5; ++m) {
      if (std::abs(j - m) >= 2) CHECK(phi(j, m) == 0.0);
    }
  }
  // Neighbor value (distance 1, radius 1.5): (1 - 1/2.25)^5 = (5/9)^5.
  CHECK(phi(0, 1) == doctest::Approx(std::pow(5.0 / 9.0, 5)));
}

TEST_CASE("phi_matrix handles empty input and matches scalar calls") {
  BasisConfig config;
  CHECK(phi_matrix(std::vector<double>{}, config).rows() == 0);
  const std::vector<double> lambdas{6.0};
  const Eigen::MatrixXd phi = phi_matrix(lambdas, config);
  for (int m = 0; m < 5; ++m) {
    CHECK(phi(0, m) == rbf_eval(6.0, config.centers[static_cast<std::size_t>(m)], config.radius));
  }
}

TEST_CASE("psi_matrix rows are scaled monomials") {
  BasisConfig config;
  config.aux_scale = 4.0e4;
  const std::vector<double> aux{0.0, 4.0e4, 8.0e4};
  const Eigen::MatrixXd psi = psi_matrix(aux, config);
  CHECK(psi(0, 0) == 1.0);
  CHECK(psi(0, 1) == 0.0);
  CHECK(psi(0, 2) == 0.0);
  CHECK(psi(1, 0) == doctest::Approx(1.0));
  CHECK(psi(1, 1) == doctest::Approx(1.0));
  CHECK(psi(1, 2) == doctest::Approx(1.0));
  CHECK(psi(2, 1) == doctest::Approx(2.0));
  CHECK(psi(2, 2) == doctest::Approx(4.0));
}

TEST_CASE("cp_eval matches the double-sum oracle and elementary cases") {
  BasisConfig config;
  CpSurrogate zero;
  zero.config = config;
  zero.weights = Eigen::MatrixXd::Zero(5, 3);
  CHECK(cp_eval(zero, 5.3, 5.0e4) == 0.0);

  CpSurrogate unit = zero;
  unit.weights(2, 0) = 1.0;
  CHECK(cp_eval(unit, config.centers[2], 12345.0) == doctest::Approx(1.0));

  const CpSurrogate model = random_model(42);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> lam(2.0, 10.0), aux(2.0e4, 1.2e5);
  for (int i = 0; i < 200; ++i) {
    const double l = lam(rng), a = aux(rng);
    CHECK(cp_eval(model, l, a) == doctest::Approx(cp_oracle(model, l, a)).epsilon(1e-12));
  }
  CHECK_THROWS(cp_eval(model, std::nan(""), 5.0e4));
}

TEST_CASE("cp_grad_weights: compact support, FD, single-center reduction") {
  const CpSurrogate model = random_model(3);
  const Eigen::MatrixXd outside = cp_grad_weights(model, 11.0, 8.0e4);
  CHECK(outside.cwiseAbs().maxCoeff() == 0.0);

  // Central differences on each weight.
  CpSurrogate probe = model;
  const double lambda = 5.7, aux = 7.3e4, h = 1e-6;
  const Eigen::MatrixXd grad = cp_grad_weights(model, lambda, aux);
  for (Eigen::Index m = 0; m < probe.weights.rows(); ++m) {
    for (Eigen::Index n = 0; n < probe.weights.cols(); ++n) {
      const double save = probe.weights(m, n);
      probe.weights(m, n) = save + h;
      const double up = cp_eval(probe, lambda, aux);
      probe.weights(m, n) = save - h;
      const double dn = cp_eval(probe, lambda, aux);
      probe.weights(m, n) = save;
      const double fd = (up - dn) / (2.0 * h);
      CHECK(grad(m, n) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
  // cp equals the Frobenius inner product of the gradient with the weights.
  CHECK(cp_eval(model, lambda, aux) ==
        doctest::Approx((grad.array() * model.weights.array()).sum()).epsilon(1e-12));

  BasisConfig single;
  single.centers = {5.0};
  const CpSurrogate one = random_model(9, single);
  const Eigen::MatrixXd g = cp_grad_weights(one, 5.4, 9.0e4);
  for (Eigen::Index n = 0; n < 3; ++n) {
    CHECK(g(0, n) == doctest::Approx(rbf_eval(5.4, 5.0, 1.5) *
                                     psi_row(9.0e4, single)(n)).epsilon(1e-12));
  }
}

TEST_CASE("cp_grad_lambda: single-bump symmetry, edges, FD everywhere") {
  BasisConfig single;
  single.centers = {6.0};
  const CpSurrogate bump = random_model(1, single);
  CHECK(cp_grad_lambda(bump, 6.0, 5.0e4) == 0.0);
  CHECK(cp_grad_lambda(bump, 7.5, 5.0e4) == 0.0);

  const CpSurrogate model = random_model(11);
  const double h = 1e-5;
  // Includes points straddling support boundaries.
  for (double l = 2.0; l < 10.0; l += 0.0317) {
    const double fd = (cp_eval(model, l + h, 6.0e4) - cp_eval(model, l - h, 6.0e4)) / (2.0 * h);
    const double an = cp_grad_lambda(model, l, 6.0e4);
    CHECK(an == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("cp_grad_aux matches finite differences") {
  const CpSurrogate model = random_model(17);
  const double h = 1.0;  // aux is O(1e5)
  for (double aux = 3.0e4; aux < 1.2e5; aux += 7321.0) {
    const double fd = (cp_eval(model, 5.2, aux + h) - cp_eval(model, 5.2, aux - h)) / (2.0 * h);
    CHECK(cp_grad_aux(model, 5.2, aux) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("compact support and linearity in the weights") {
  const BasisConfig config;
  const CpSurrogate a = random_model(21);
  const CpSurrogate b = random_model(22);
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> aux(1.0e4, 2.0e5);

  for (double l : {config.support_min() - 0.001, config.support_max() + 0.001, 0.0, 20.0}) {
    CHECK(cp_eval(a, l, aux(rng)) == 0.0);
  }

  CpSurrogate combo = a;
  combo.weights = 0.3 * a.weights + 1.7 * b.weights;
  for (int i = 0; i < 50; ++i) {
    const double l = 2.0 + 8.0 * i / 50.0;
    const double x = aux(rng);
    const double expected = 0.3 * cp_eval(a, l, x) + 1.7 * cp_eval(b, l, x);
    CHECK(cp_eval(combo, l, x) == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("config validation catches broken invariants") {
  BasisConfig config;
  config.centers = {5.0, 4.0};
  CHECK_THROWS(config.validate());
  config = BasisConfig{};
  config.radius = -1.0;
  CHECK_THROWS(config.validate());
  config = BasisConfig{};
  config.poly_orders = {0, 0};
  CHECK_THROWS(config.validate());
  config = BasisConfig{};
  config.aux_scale = 0.0;
  CHECK_THROWS(config.validate());

  CpSurrogate model;
  model.config = BasisConfig{};
  model.weights = Eigen::MatrixXd::Zero(4, 3);
  CHECK_THROWS(model.validate());
}

TEST_CASE("model file round-trips bit exactly") {
  const auto path = std::filesystem::temp_directory_path() / "wtsid_model_roundtrip.txt";
  CpSurrogate model = random_model(31);
  // Awkward values that expose any precision loss.
  model.weights(0, 0) = 1.0 / 3.0;
  model.weights(1, 2) = -2.718281828459045e-7;
  model.config.aux_scale = 80000.0000000001;
  save_surrogate(model, path);
  const CpSurrogate back = load_surrogate(path);
  CHECK(back.config.aux_kind == model.config.aux_kind);
  CHECK(back.config.radius == model.config.radius);
  CHECK(back.config.aux_scale == model.config.aux_scale);
  REQUIRE(back.config.centers == model.config.centers);
  REQUIRE(back.config.poly_orders == model.config.poly_orders);
  for (Eigen::Index m = 0; m < model.weights.rows(); ++m) {
    for (Eigen::Index n = 0; n < model.weights.cols(); ++n) {
      CHECK(back.weights(m, n) == model.weights(m, n));
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("model loader rejects malformed files") {
  const auto path = std::filesystem::temp_directory_path() / "wtsid_model_bad.txt";
  {
    std::ofstream out(path);
    out << "not-a-model 1\n";
  }
  CHECK_THROWS(load_surrogate(path));
  std::filesystem::remove(path);
}
