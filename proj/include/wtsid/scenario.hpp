#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wtsid/control.hpp"
#include "wtsid/dynamics.hpp"
#include "wtsid/identify.hpp"
#include "wtsid/signals.hpp"

namespace wtsid {

// Everything needed to synthesize one experiment on the digital twin:
// episode structure, wind statistics, excitation schedules, measurement
// noise, and the steady calibration grid.
struct ScenarioConfig {
  enum class Kind { LowTurbulence, HighTurbulence };
  Kind kind = Kind::LowTurbulence;
  std::uint64_t seed = 1;
  double f_s = 20.0;
  double duration = 32.0;  // [s] per episode
  int n_turbines = 2;
  int episodes_train = 7;
  int episodes_test = 4;
  TurbineParams params;
  NoiseSpec noise;

  // Low turbulence: wind ramps between random levels, resistance steps that
  // chase random tip-speed-ratio targets.
  double u_min = 6.5, u_max = 9.5;   // [m/s]
  double wind_segment_s = 8.0;
  double lambda_min = 3.4, lambda_max = 8.0;
  double rv_segment_s = 5.0;

  // High turbulence: Ornstein-Uhlenbeck wind around u_mean, fixed loads,
  // anemometer decorrelated from the rotor inflow.
  double u_mean = 8.0;
  double ti = 0.12;
  double t_corr = 1.5;      // [s]
  double measured_corr = 0.2;
  double rv_fixed = 1.0;    // [Ohm] applied to every turbine

  // Steady calibration grid (per turbine).
  int grid_n_lambda = 9;
  double grid_lambda_min = 3.2, grid_lambda_max = 8.6;
  int grid_n_aux = 5;
  double grid_u_min = 5.5, grid_u_max = 8.5;          // freestream turbine: Re from u
  double grid_aux_min_tsr = 3.8, grid_aux_max_tsr = 7.8;  // waked turbines: upstream lambda

  void validate() const;
};

ScenarioConfig load_scenario_config(const std::filesystem::path& path);
void save_scenario_config(const ScenarioConfig& config, const std::filesystem::path& path);

// One synthesized experiment, in memory.
struct ScenarioData {
  ScenarioConfig config;
  ArrayModel twin;
  std::vector<SynthEpisode> train;
  std::vector<SynthEpisode> test;
  std::vector<SteadyGrid> steady;  // per turbine
};

ScenarioData build_scenario(const ScenarioConfig& config);

// Per-turbine identification files extracted from a synthesized episode
// (waked turbines get the measured upstream speed as context).
EpisodeFile episode_file_for_turbine(const SynthEpisode& episode, std::size_t turbine_index);

// Writes truth models, per-turbine episode CSVs, truth trajectories, steady
// grids, and a manifest.json naming all of them. Deterministic output.
struct ScenarioFiles {
  std::filesystem::path manifest;
  std::vector<std::string> truth_models;
  std::vector<std::vector<std::string>> train_files;  // [episode][turbine]
  std::vector<std::vector<std::string>> test_files;
  std::vector<std::string> steady_files;
};
ScenarioFiles write_scenario(const ScenarioData& data, const std::filesystem::path& out_dir);

// Manifest loaded back for downstream commands.
struct Manifest {
  ScenarioConfig config;
  std::filesystem::path dir;
  std::vector<std::string> truth_models;
  std::vector<std::vector<std::string>> train_files;
  std::vector<std::vector<std::string>> test_files;
  std::vector<std::string> steady_files;
};
Manifest load_manifest(const std::filesystem::path& path);

// Equilibrium tip-speed ratio on the stable branch for a given load; used
// both for excitation design and steady-grid construction.
double equilibrium_lambda(const CpSurrogate& model, const TurbineParams& params, double u,
                          double aux, double R_sum);

// Load resistance that places the turbine at lambda_target in steady state.
double equilibrium_resistance(const CpSurrogate& model, const TurbineParams& params, double u,
                              double aux, double lambda_target);

// WLS initialization followed by episodic Adam refinement for one turbine.
struct IdentifyRunResult {
  CpSurrogate init_model;
  CpSurrogate final_model;
  AdamRunReport report;
};
IdentifyRunResult run_identification(const SteadyGrid& grid,
                                     const std::vector<EpisodeFile>& episodes,
                                     const BasisConfig& basis, const TurbineParams& params,
                                     const IdentifyConfig& config);

// Simulates the model over an episode's inputs and compares against the
// measured series (and the true one when the file carries it).
struct EvalStats {
  std::size_t samples = 0;
  double rmse_meas = 0.0;
  double rmse_true = 0.0;  // NaN when no truth column is present
  double mean_meas = 0.0, mean_sim = 0.0;
  double std_meas = 0.0, std_sim = 0.0;
};
EvalStats evaluate_model(const CpSurrogate& model, const EpisodeFile& episode,
                         const TurbineParams& params, const IdentifyConfig& config);

// Pooled statistics over several episodes (concatenated samples).
EvalStats evaluate_model_pooled(const CpSurrogate& model, const std::vector<EpisodeFile>& episodes,
                                const TurbineParams& params, const IdentifyConfig& config);

}  // namespace wtsid
