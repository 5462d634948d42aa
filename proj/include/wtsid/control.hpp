#pragma once

#include <span>
#include <utility>
#include <vector>

#include "wtsid/basis.hpp"
#include "wtsid/dynamics.hpp"
#include "wtsid/signals.hpp"

namespace wtsid {

// Achievable load resistances of the switchable bank. Values are every
// parallel combination of the configured resistors, deduplicated and sorted.
class ResistorBank {
 public:
  explicit ResistorBank(std::span<const double> resistors);

  // The rig's bank: 12 resistors at 1024/2^i Ohm, giving 4095 values
  // 1024/b for b = 1..4095, all inside [0.25, 1024].
  static ResistorBank standard();

  // Clamp into range, then snap to the nearest entry (ties toward the
  // larger resistance, i.e. the gentler braking torque).
  double snap(double R) const;

  double min_value() const { return values_.front(); }
  double max_value() const { return values_.back(); }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
};

// Argmax of cp over the basis support at fixed auxiliary value: coarse grid
// (step 0.01) plus golden-section refinement to 1e-5, ties toward smaller
// lambda. Throws when the map has no positive maximum.
std::pair<double, double> find_optimum(const CpSurrogate& model, double aux);

// K = 0.5 * rho * A * R^3 * cp_ref / lambda_ref^3 with A = pi R^2. For a
// non-optimal setpoint pass cp at that setpoint, which makes lambda_ref an
// equilibrium of the closed loop.
double k_gain(double lambda_ref, double cp_ref, const TurbineParams& params);

// R_v = k_tau k_omega / (K omega) - R_tot, clamped and snapped onto the bank.
double resistance_command(double omega, double K, const TurbineParams& params,
                          const ResistorBank& bank);

// Torque controller in resistance form: holds the gain for the current
// setpoint and low-pass-filters the measured speed.
class Kw2Controller {
 public:
  Kw2Controller(CpSurrogate model, const TurbineParams& params, ResistorBank bank,
                double f_s, double filter_cutoff);

  // Recomputes cp_ref and K from the controller's own map.
  void set_reference(double lambda_ref, double aux_ref);

  // One sample tick: filter omega, emit the bank resistance to apply.
  double update(double omega_meas);

  double lambda_ref() const { return lambda_ref_; }
  double cp_ref() const { return cp_ref_; }
  double gain() const { return K_; }
  const CpSurrogate& model() const { return model_; }

 private:
  CpSurrogate model_;
  TurbineParams params_;
  ResistorBank bank_;
  FirstOrderLowpass filter_;
  double lambda_ref_ = 0.0, cp_ref_ = 0.0, K_ = 0.0;
};

// Per-turbine actuation in a closed-loop run: either the Kw2 law driven by
// the given surrogate, or a fixed resistance (the uncontrolled baseline).
struct ControllerSpec {
  enum class Mode { KOmegaSquared, FixedResistance };
  Mode mode = Mode::KOmegaSquared;
  CpSurrogate model;
  double fixed_R_v = 1.0;
};

struct SetpointPoint {
  double t = 0.0;
  double lambda_ref = 5.0;
};
using SetpointSchedule = std::vector<SetpointPoint>;  // piecewise constant, sorted by t

struct ClosedLoopConfig {
  double f_s = 20.0;
  int substeps = 10;
  double filter_cutoff = 2.0;  // [Hz], first-order causal filter in the loop
  double settle_s = 3.0;       // excluded from per-segment error metrics
  double u_ref = 8.0;          // wind speed assumed when fixing the Reynolds setpoint
};

struct SegmentMetrics {
  std::size_t turbine = 0;  // 1-based
  double t_begin = 0.0, t_end = 0.0;
  double lambda_ref = 0.0;
  double mean_err = 0.0;  // mean of lambda - lambda_ref after settling
  double rms_err = 0.0;
};

struct ClosedLoopResult {
  Trajectory traj;
  std::vector<std::vector<double>> lambda_ref_series;  // [turbine][sample]
  std::vector<SegmentMetrics> segments;
};

// Simulates the twin with controller commands updated at f_s from filtered
// speeds. Downstream controllers take the upstream reference as their
// auxiliary input, so their gain retargets when the upstream setpoint moves.
ClosedLoopResult closed_loop(const ArrayModel& twin, const std::vector<ControllerSpec>& controllers,
                             const std::vector<SetpointSchedule>& schedules,
                             std::span<const double> u1, const ClosedLoopConfig& config);

}  // namespace wtsid
