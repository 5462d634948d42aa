#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <vector>

namespace wtsid {

// Which auxiliary variable the polynomial block of a surrogate acts on.
// A freestream turbine sees the rotor Reynolds number; a waked turbine sees
// the tip-speed ratio of the turbine directly upstream.
enum class AuxKind { Reynolds, UpstreamTsr };

// Tensor-product basis for a power-coefficient map: compactly supported
// radial bumps in the turbine's own tip-speed ratio, monomials in the
// (scaled) auxiliary variable.
struct BasisConfig {
  std::vector<double> centers{4.0, 5.0, 6.0, 7.0, 8.0};  // RBF centers in lambda
  double radius = 1.5;                                   // shared RBF shape factor
  std::vector<int> poly_orders{0, 1, 2};
  AuxKind aux_kind = AuxKind::Reynolds;
  // The auxiliary variable is divided by aux_scale before exponentiation;
  // keeps the polynomial block well conditioned when aux is a Reynolds
  // number of order 1e5. Use 1.0 for tip-speed-ratio auxiliaries.
  double aux_scale = 8.0e4;

  std::size_t num_rbf() const { return centers.size(); }
  std::size_t num_poly() const { return poly_orders.size(); }
  double support_min() const { return centers.front() - radius; }
  double support_max() const { return centers.back() + radius; }

  // Throws std::invalid_argument when the invariants are broken
  // (centers strictly increasing, radius > 0, orders strictly increasing
  // and nonnegative, aux_scale > 0).
  void validate() const;
};

// A Cp map: basis configuration plus the M x N weight matrix. Cp is linear
// in the weights, which is what makes both the steady-state regression and
// the adjoint gradient cheap.
struct CpSurrogate {
  BasisConfig config;
  Eigen::MatrixXd weights;  // rows follow centers, columns follow poly_orders

  void validate() const;
};

// Quintic compact bump: (1 - d^2/c^2)^5 for |d| <= c, exactly zero outside,
// with d = lambda - center. Throws on non-finite input.
double rbf_eval(double lambda, double center, double radius);

// d/dlambda of rbf_eval; zero outside the support and at its boundary.
double rbf_deriv(double lambda, double center, double radius);

// Row of RBF values for one lambda / one aux value.
Eigen::RowVectorXd phi_row(double lambda, const BasisConfig& config);
Eigen::RowVectorXd psi_row(double aux, const BasisConfig& config);

// Stacked evaluations: entry (j, m) = rbf_eval(lambdas[j], centers[m]).
Eigen::MatrixXd phi_matrix(std::span<const double> lambdas, const BasisConfig& config);
// Entry (j, n) = (aux[j] / aux_scale)^orders[n].
Eigen::MatrixXd psi_matrix(std::span<const double> aux_values, const BasisConfig& config);

// Cp(lambda, aux) = phi(lambda) * W * psi(aux)^T.
double cp_eval(const CpSurrogate& model, double lambda, double aux);

// dCp/dW, entry (m, n) = phi_m(lambda) * psi_n(aux). cp_eval equals the
// Frobenius inner product of this matrix with the weights.
Eigen::MatrixXd cp_grad_weights(const CpSurrogate& model, double lambda, double aux);

// Analytic dCp/dlambda and dCp/daux.
double cp_grad_lambda(const CpSurrogate& model, double lambda, double aux);
double cp_grad_aux(const CpSurrogate& model, double lambda, double aux);

// Plain-text model file (format-version line, basis config, weights stored
// row major with 17 significant digits so a round-trip is bit exact).
void save_surrogate(const CpSurrogate& model, const std::filesystem::path& path);
CpSurrogate load_surrogate(const std::filesystem::path& path);

}  // namespace wtsid
