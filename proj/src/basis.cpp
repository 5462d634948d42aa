#include "wtsid/basis.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "wtsid/csv.hpp"

namespace wtsid {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument(std::string("basis: non-finite ") + what);
  }
}

}  // namespace

void BasisConfig::validate() const {
  if (centers.empty()) throw std::invalid_argument("basis: no RBF centers");
  for (std::size_t m = 0; m + 1 < centers.size(); ++m) {
    if (!(centers[m] < centers[m + 1])) {
      throw std::invalid_argument("basis: centers must be strictly increasing");
    }
  }
  for (double c : centers) require_finite(c, "center");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("basis: radius must be positive");
  }
  if (poly_orders.empty()) throw std::invalid_argument("basis: no polynomial orders");
  if (poly_orders.front() < 0) {
    throw std::invalid_argument("basis: polynomial orders must be nonnegative");
  }
  for (std::size_t n = 0; n + 1 < poly_orders.size(); ++n) {
    if (!(poly_orders[n] < poly_orders[n + 1])) {
      throw std::invalid_argument("basis: polynomial orders must be strictly increasing");
    }
  }
  if (!(aux_scale > 0.0) || !std::isfinite(aux_scale)) {
    throw std::invalid_argument("basis: aux_scale must be positive");
  }
}

void CpSurrogate::validate() const {
  config.validate();
  if (weights.rows() != static_cast<Eigen::Index>(config.num_rbf()) ||
      weights.cols() != static_cast<Eigen::Index>(config.num_poly())) {
    throw std::invalid_argument("surrogate: weight matrix shape does not match basis");
  }
  if (!weights.allFinite()) {
    throw std::invalid_argument("surrogate: non-finite weight");
  }
}

double rbf_eval(double lambda, double center, double radius) {
  require_finite(lambda, "lambda");
  require_finite(center, "center");
  if (!(radius > 0.0)) throw std::invalid_argument("basis: radius must be positive");
  const double d = lambda - center;
  if (std::abs(d) > radius) return 0.0;
  const double q = 1.0 - (d * d) / (radius * radius);
  const double q2 = q * q;
  return q2 * q2 * q;
}

double rbf_deriv(double lambda, double center, double radius) {
  require_finite(lambda, "lambda");
  require_finite(center, "center");
  if (!(radius > 0.0)) throw std::invalid_argument("basis: radius must be positive");
  const double d = lambda - center;
  if (std::abs(d) > radius) return 0.0;
  const double q = 1.0 - (d * d) / (radius * radius);
  const double q2 = q * q;
  return -10.0 * d / (radius * radius) * q2 * q2;
}

Eigen::RowVectorXd phi_row(double lambda, const BasisConfig& config) {
  Eigen::RowVectorXd row(config.num_rbf());
  for (std::size_t m = 0; m < config.num_rbf(); ++m) {
    row(static_cast<Eigen::Index>(m)) = rbf_eval(lambda, config.centers[m], config.radius);
  }
  return row;
}

Eigen::RowVectorXd psi_row(double aux, const BasisConfig& config) {
  require_finite(aux, "aux");
  const double x = aux / config.aux_scale;
  Eigen::RowVectorXd row(config.num_poly());
  for (std::size_t n = 0; n < config.num_poly(); ++n) {
    row(static_cast<Eigen::Index>(n)) = std::pow(x, config.poly_orders[n]);
  }
  return row;
}

Eigen::MatrixXd phi_matrix(std::span<const double> lambdas, const BasisConfig& config) {
  Eigen::MatrixXd out(lambdas.size(), config.num_rbf());
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    out.row(static_cast<Eigen::Index>(j)) = phi_row(lambdas[j], config);
  }
  return out;
}

Eigen::MatrixXd psi_matrix(std::span<const double> aux_values, const BasisConfig& config) {
  Eigen::MatrixXd out(aux_values.size(), config.num_poly());
  for (std::size_t j = 0; j < aux_values.size(); ++j) {
    out.row(static_cast<Eigen::Index>(j)) = psi_row(aux_values[j], config);
  }
  return out;
}

double cp_eval(const CpSurrogate& model, double lambda, double aux) {
  require_finite(lambda, "lambda");
  require_finite(aux, "aux");
  return phi_row(lambda, model.config) * model.weights * psi_row(aux, model.config).transpose();
}

Eigen::MatrixXd cp_grad_weights(const CpSurrogate& model, double lambda, double aux) {
  return phi_row(lambda, model.config).transpose() * psi_row(aux, model.config);
}

double cp_grad_lambda(const CpSurrogate& model, double lambda, double aux) {
  const BasisConfig& cfg = model.config;
  Eigen::RowVectorXd dphi(cfg.num_rbf());
  for (std::size_t m = 0; m < cfg.num_rbf(); ++m) {
    dphi(static_cast<Eigen::Index>(m)) = rbf_deriv(lambda, cfg.centers[m], cfg.radius);
  }
  return dphi * model.weights * psi_row(aux, cfg).transpose();
}

double cp_grad_aux(const CpSurrogate& model, double lambda, double aux) {
  const BasisConfig& cfg = model.config;
  require_finite(aux, "aux");
  const double x = aux / cfg.aux_scale;
  Eigen::RowVectorXd dpsi(cfg.num_poly());
  for (std::size_t n = 0; n < cfg.num_poly(); ++n) {
    const int p = cfg.poly_orders[n];
    dpsi(static_cast<Eigen::Index>(n)) =
        p == 0 ? 0.0 : p * std::pow(x, p - 1) / cfg.aux_scale;
  }
  return phi_row(lambda, cfg) * model.weights * dpsi.transpose();
}

void save_surrogate(const CpSurrogate& model, const std::filesystem::path& path) {
  model.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("surrogate: cannot write " + path.string());
  out << "wtsid-cp-model 1\n";
  out << "aux_kind " << (model.config.aux_kind == AuxKind::Reynolds ? "reynolds" : "upstream_tsr")
      << "\n";
  out << "aux_scale " << format_double(model.config.aux_scale, 17) << "\n";
  out << "radius " << format_double(model.config.radius, 17) << "\n";
  out << "centers " << model.config.num_rbf();
  for (double c : model.config.centers) out << " " << format_double(c, 17);
  out << "\n";
  out << "poly_orders " << model.config.num_poly();
  for (int n : model.config.poly_orders) out << " " << n;
  out << "\n";
  out << "weights\n";
  for (Eigen::Index m = 0; m < model.weights.rows(); ++m) {
    for (Eigen::Index n = 0; n < model.weights.cols(); ++n) {
      out << (n ? " " : "") << format_double(model.weights(m, n), 17);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("surrogate: write failed " + path.string());
}

CpSurrogate load_surrogate(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("surrogate: cannot open " + path.string());
  auto fail = [&](const std::string& why) -> std::runtime_error {
    return std::runtime_error("surrogate: " + path.string() + ": " + why);
  };
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "wtsid-cp-model") throw fail("bad header");
  if (version != 1) throw fail("unsupported format version " + std::to_string(version));

  CpSurrogate model;
  std::string key, value;
  if (!(in >> key >> value) || key != "aux_kind") throw fail("expected aux_kind");
  if (value == "reynolds") {
    model.config.aux_kind = AuxKind::Reynolds;
  } else if (value == "upstream_tsr") {
    model.config.aux_kind = AuxKind::UpstreamTsr;
  } else {
    throw fail("unknown aux_kind '" + value + "'");
  }
  if (!(in >> key >> model.config.aux_scale) || key != "aux_scale") throw fail("expected aux_scale");
  if (!(in >> key >> model.config.radius) || key != "radius") throw fail("expected radius");

  std::size_t count = 0;
  if (!(in >> key >> count) || key != "centers") throw fail("expected centers");
  model.config.centers.resize(count);
  for (auto& c : model.config.centers) {
    if (!(in >> c)) throw fail("truncated centers");
  }
  if (!(in >> key >> count) || key != "poly_orders") throw fail("expected poly_orders");
  model.config.poly_orders.resize(count);
  for (auto& n : model.config.poly_orders) {
    if (!(in >> n)) throw fail("truncated poly_orders");
  }
  if (!(in >> key) || key != "weights") throw fail("expected weights");
  model.weights.resize(static_cast<Eigen::Index>(model.config.num_rbf()),
                       static_cast<Eigen::Index>(model.config.num_poly()));
  for (Eigen::Index m = 0; m < model.weights.rows(); ++m) {
    for (Eigen::Index n = 0; n < model.weights.cols(); ++n) {
      if (!(in >> model.weights(m, n))) throw fail("truncated weights");
    }
  }
  model.validate();
  return model;
}

}  // namespace wtsid
