#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "wtsid/basis.hpp"
#include "wtsid/dynamics.hpp"

namespace wtsid {

// One steady operating point used for the regression initialization.
// sigma_* are the standard deviations of the individual measurements.
struct SteadySample {
  double omega = 0.0;        // [rad/s]
  double u1 = 0.0;           // [m/s]
  double R_v = 0.0;          // [Ohm]
  double sigma_omega = 0.0;  // [rad/s]
  double sigma_u = 0.0;      // [m/s]
  double sigma_tau = 0.0;    // [N m]
  double aux = 0.0;          // Reynolds number or upstream tip-speed ratio
};

// Rectangular grid of steady samples, row index = tip-speed-ratio bin,
// column index = auxiliary-variable bin, stored row major.
struct SteadyGrid {
  std::size_t n_lambda = 0;
  std::size_t n_aux = 0;
  std::vector<SteadySample> samples;

  const SteadySample& at(std::size_t j, std::size_t k) const { return samples[j * n_aux + k]; }
  SteadySample& at(std::size_t j, std::size_t k) { return samples[j * n_aux + k]; }
  void validate() const;
};

void write_steady_csv(const SteadyGrid& grid, const std::filesystem::path& path);
SteadyGrid read_steady_csv(const std::filesystem::path& path);

// A synchronized observation window for the whole array, uniformly sampled.
struct Episode {
  double f_s = 20.0;
  std::vector<double> t;
  std::vector<double> u1;                          // measured freestream speed
  std::vector<std::vector<double>> omegas_meas;    // [turbine][sample]
  std::vector<std::vector<double>> R_vs;           // [turbine][sample]
  std::vector<double> sigma_omega;                 // per-turbine measurement std

  std::size_t samples() const { return t.size(); }
  std::size_t turbines() const { return omegas_meas.size(); }
  double duration() const { return t.empty() ? 0.0 : t.back() - t.front(); }
  void validate() const;
};

// One turbine's identification episode as stored on disk. omega_upstream is
// present for waked turbines only; omega_true is available from the synthetic
// rig and used for evaluation.
struct EpisodeFile {
  int turbine = 1;
  double f_s = 20.0;
  std::vector<double> t, u1, omega_star, R_v;
  std::vector<double> omega_upstream;  // empty for the freestream turbine
  std::vector<double> omega_true;      // empty when unknown

  void validate() const;
};

// Header: t,u1,omega_star_<i>,Rv_<i>[,omega_upstream][,omega_true_<i>]
void write_episode_csv(const EpisodeFile& episode, const std::filesystem::path& path);
EpisodeFile read_episode_csv(const std::filesystem::path& path);

// Optimizer and preprocessing knobs for one identification run.
struct IdentifyConfig {
  double eta_lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_iters = 1000;
  double restart_threshold = 100.0;  // cost increase that resets the moments
  double lr_drop_threshold = 10.0;   // cost level below which eta is reduced (once)
  double lr_drop_factor = 10.0;
  double filter_cutoff = 2.0;  // [Hz]
  int filter_order = 4;
  int substeps = 10;
  double conv_rel_tol = 1e-6;  // relative cost change over conv_window iterations
  int conv_window = 10;

  void validate() const;
};

// Episode reduced to what the single-turbine adjoint solve needs: filtered
// measured speed, held inputs, and the per-sample auxiliary series (Reynolds
// number for the freestream turbine, measured upstream tip-speed ratio for a
// waked one).
struct TrainingSeries {
  double f_s = 20.0;
  std::vector<double> t, u1, omega_star, R_v, aux;

  std::size_t samples() const { return t.size(); }
  double duration() const { return t.back() - t.front(); }
};

// Filters omega_star (zero phase) and builds the auxiliary series.
TrainingSeries make_training_series(const EpisodeFile& episode, const TurbineParams& params,
                                    const IdentifyConfig& config);

// Steady-state power coefficient and its first-order uncertainty:
// cp = 2 tau_g omega / (rho pi R^2 u^3) with tau_g from the generator model,
// so dcp/domega = 2 cp/omega and dcp/du = -3 cp/u.
struct SteadyCp {
  double cp;
  double sigma_cp;
};
SteadyCp steady_cp(const SteadySample& sample, const TurbineParams& params);

// Two-sided weighted least squares on the steady grid: weighted regression in
// the RBF block (row weights sigma_min^2/sigma_j^2), ordinary regression in
// the polynomial block. Throws naming the rank-deficient block.
Eigen::MatrixXd wls_init(const SteadyGrid& grid, const BasisConfig& config,
                         const TurbineParams& params);

// Forward simulation of the single-turbine model over a training series,
// starting from the filtered measured speed. Returns omega at the samples.
std::vector<double> simulate_turbine(const CpSurrogate& model, const TrainingSeries& series,
                                     const TurbineParams& params, int substeps = 10);

// Thrown when the forward solve diverges; carries the cost accumulated up to
// the failing sample (normalized by the full episode length).
class EpisodeBlowup : public std::runtime_error {
 public:
  EpisodeBlowup(std::size_t sample, double partial_cost);
  std::size_t sample;
  double partial_cost;
};

// Forward solve, backward adjoint solve, and the accumulated weight gradient
// for one episode. cost = (1/T0) * integral of (omega* - omega)^2.
struct EpisodeGrad {
  double cost = 0.0;
  Eigen::MatrixXd grad;
};
EpisodeGrad episode_cost_and_grad(const CpSurrogate& model, const TrainingSeries& series,
                                  const TurbineParams& params, int substeps = 10);

// Adam with bias-corrected moments. Kept separate from the episode machinery
// so it can be exercised on plain test objectives.
class AdamOptimizer {
 public:
  AdamOptimizer(Eigen::Index rows, Eigen::Index cols, const IdentifyConfig& config);

  // Returns the additive update -eta * mhat / (sqrt(vhat) + eps).
  Eigen::MatrixXd step(const Eigen::MatrixXd& grad);

  // Clears the moments and the bias-correction counter.
  void restart();

  void set_learning_rate(double eta) { eta_ = eta; }
  double learning_rate() const { return eta_; }
  const Eigen::MatrixXd& first_moment() const { return m_; }
  const Eigen::MatrixXd& second_moment() const { return v_; }
  int iteration_count() const { return t_; }

 private:
  double eta_, beta1_, beta2_, epsilon_;
  Eigen::MatrixXd m_, v_;
  int t_ = 0;
};

struct AdamRunReport {
  std::vector<double> cost_history;  // entry 0 is the initial cost
  std::vector<int> restart_iters;
  int lr_drop_iter = -1;
  int iterations = 0;
  bool converged = false;
  std::vector<double> final_cost_per_episode;
};

// Objective callback: fills grad_out and returns the cost at w.
using CostGradFn = std::function<double(const Eigen::MatrixXd& w, Eigen::MatrixXd& grad_out)>;

// Optional per-iteration hook (iteration, cost, optimizer state).
using AdamObserver = std::function<void(int, double, const AdamOptimizer&)>;

// Core optimization loop: Adam steps with the restart rule on cost jumps, a
// one-shot learning-rate drop, and convergence on stagnating cost. A
// non-finite cost rolls the step back and restarts once; twice in a row
// aborts.
Eigen::MatrixXd adam_minimize(Eigen::MatrixXd w0, const CostGradFn& objective,
                              const IdentifyConfig& config, AdamRunReport* report = nullptr,
                              const AdamObserver& observer = {});

// Episodic refinement: total gradient summed over episodes.
CpSurrogate adam_run(const CpSurrogate& init, const std::vector<TrainingSeries>& episodes,
                     const TurbineParams& params, const IdentifyConfig& config,
                     AdamRunReport* report = nullptr);

// Generator torque law assumed when scanning steady-state stability.
struct TorqueLaw {
  enum class Kind { ConstantResistance, KOmegaSquared };
  Kind kind = Kind::ConstantResistance;
  double value = 1.0;  // R_v [Ohm] or the gain K [N m s^2]

  static TorqueLaw constant_resistance(double R_v) { return {Kind::ConstantResistance, R_v}; }
  static TorqueLaw k_omega_squared(double K) { return {Kind::KOmegaSquared, K}; }
};

struct StabilityViolation {
  double lambda;
  double aux;
  double df_dlambda;  // nonnegative value that triggered the report
};

// Evaluates df/dlambda at every steady grid point and reports where it fails
// to be negative. For Reynolds auxiliaries the wind speed follows from the
// Reynolds number itself; for tip-speed-ratio auxiliaries u_ref is used.
std::vector<StabilityViolation> stability_scan(const CpSurrogate& model,
                                               const TurbineParams& params,
                                               std::span<const double> lambda_grid,
                                               std::span<const double> aux_grid,
                                               const TorqueLaw& law, double u_ref = 8.0);

}  // namespace wtsid
