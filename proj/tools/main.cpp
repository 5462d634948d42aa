// Command-line front end: scenario synthesis on the digital twin,
// identification runs, closed-loop control experiments, statistical
// evaluation, and stability scans.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "wtsid/control.hpp"
#include "wtsid/csv.hpp"
#include "wtsid/dynamics.hpp"
#include "wtsid/identify.hpp"
#include "wtsid/scenario.hpp"
#include "wtsid/signals.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wtsid;

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  in >> j;
  return j;
}

void write_json_file(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

IdentifyConfig identify_config_from_json(const json& j) {
  IdentifyConfig c;
  c.eta_lr = j.value("eta_lr", c.eta_lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.max_iters = j.value("max_iters", c.max_iters);
  c.restart_threshold = j.value("restart_threshold", c.restart_threshold);
  c.lr_drop_threshold = j.value("lr_drop_threshold", c.lr_drop_threshold);
  c.lr_drop_factor = j.value("lr_drop_factor", c.lr_drop_factor);
  c.filter_cutoff = j.value("filter_cutoff", c.filter_cutoff);
  c.filter_order = j.value("filter_order", c.filter_order);
  c.substeps = j.value("substeps", c.substeps);
  c.validate();
  return c;
}

BasisConfig basis_from_json(const json& j) {
  BasisConfig b;
  if (j.contains("centers")) b.centers = j.at("centers").get<std::vector<double>>();
  b.radius = j.value("radius", b.radius);
  if (j.contains("poly_orders")) b.poly_orders = j.at("poly_orders").get<std::vector<int>>();
  const std::string kind = j.value("aux_kind", "reynolds");
  if (kind == "reynolds") {
    b.aux_kind = AuxKind::Reynolds;
  } else if (kind == "upstream_tsr") {
    b.aux_kind = AuxKind::UpstreamTsr;
  } else {
    throw std::invalid_argument("basis: unknown aux_kind '" + kind + "'");
  }
  b.aux_scale = j.value("aux_scale", b.aux_kind == AuxKind::Reynolds ? 8.0e4 : 1.0);
  b.validate();
  return b;
}

// Controller model specs: "truth", "fixed:<R_v>", "biased:<factor>" (truth
// map scaled), or a path to a saved model file.
ControllerSpec controller_from_spec(const std::string& spec, const Manifest& manifest,
                                    std::size_t turbine, const fs::path& base_dir) {
  ControllerSpec ctl;
  auto truth = [&]() {
    return load_surrogate(manifest.dir / manifest.truth_models.at(turbine));
  };
  if (spec == "truth") {
    ctl.model = truth();
  } else if (spec.rfind("fixed:", 0) == 0) {
    ctl.mode = ControllerSpec::Mode::FixedResistance;
    ctl.fixed_R_v = std::stod(spec.substr(6));
  } else if (spec.rfind("biased:", 0) == 0) {
    ctl.model = truth();
    ctl.model.weights *= std::stod(spec.substr(7));
  } else {
    fs::path p(spec);
    if (p.is_relative() && !fs::exists(p)) p = base_dir / p;
    ctl.model = load_surrogate(p);
  }
  return ctl;
}

int cmd_simulate(const fs::path& config_path, const fs::path& out,
                 std::optional<std::uint64_t> seed) {
  ScenarioConfig config = load_scenario_config(config_path);
  if (seed) config.seed = *seed;
  const ScenarioData data = build_scenario(config);
  const ScenarioFiles files = write_scenario(data, out);
  std::cout << "wrote " << files.train_files.size() << " training and " << files.test_files.size()
            << " test episodes (" << data.twin.size() << " turbines) to " << out << "\n";
  std::cout << "manifest: " << files.manifest << "\n";
  return 0;
}

int cmd_identify(const fs::path& manifest_path, int turbine, const fs::path& out,
                 const std::optional<fs::path>& config_path, std::optional<int> max_iters) {
  const Manifest manifest = load_manifest(manifest_path);
  if (turbine < 1 || turbine > static_cast<int>(manifest.truth_models.size())) {
    throw std::invalid_argument("identify: turbine index out of range");
  }
  const std::size_t idx = static_cast<std::size_t>(turbine - 1);

  IdentifyConfig config;
  std::optional<BasisConfig> basis;
  if (config_path) {
    const json j = read_json_file(*config_path);
    config = identify_config_from_json(j);
    if (j.contains("basis")) basis = basis_from_json(j.at("basis"));
  }
  if (max_iters) config.max_iters = *max_iters;
  if (!basis) {
    // Default to the basis the twin's truth map uses for this position.
    basis = load_surrogate(manifest.dir / manifest.truth_models[idx]).config;
  }

  const SteadyGrid grid = read_steady_csv(manifest.dir / manifest.steady_files.at(idx));
  std::vector<EpisodeFile> train;
  for (const auto& per_turbine : manifest.train_files) {
    train.push_back(read_episode_csv(manifest.dir / per_turbine.at(idx)));
  }

  const IdentifyRunResult run =
      run_identification(grid, train, *basis, manifest.config.params, config);

  fs::create_directories(out);
  const std::string suffix = "_t" + std::to_string(turbine);
  save_surrogate(run.init_model, out / ("init_model" + suffix + ".txt"));
  save_surrogate(run.final_model, out / ("model" + suffix + ".txt"));

  CsvTable history;
  std::vector<double> iters(run.report.cost_history.size());
  for (std::size_t i = 0; i < iters.size(); ++i) iters[i] = static_cast<double>(i);
  history.add_column("iteration", iters);
  history.add_column("cost", run.report.cost_history);
  write_csv(history, out / ("cost_history" + suffix + ".csv"));

  json report;
  report["turbine"] = turbine;
  report["iterations"] = run.report.iterations;
  report["converged"] = run.report.converged;
  report["restart_iterations"] = run.report.restart_iters;
  report["lr_drop_iteration"] = run.report.lr_drop_iter;
  report["episode_gradient_aggregation"] = "sum";
  report["eta_lr"] = config.eta_lr;
  report["final_cost_per_episode"] = run.report.final_cost_per_episode;
  report["init_model"] = ("init_model" + suffix + ".txt");
  report["final_model"] = ("model" + suffix + ".txt");

  // Held-out comparison of the initial and refined models.
  json tests = json::array();
  for (const auto& per_turbine : manifest.test_files) {
    const EpisodeFile ep = read_episode_csv(manifest.dir / per_turbine.at(idx));
    const EvalStats init_stats = evaluate_model(run.init_model, ep, manifest.config.params, config);
    const EvalStats final_stats =
        evaluate_model(run.final_model, ep, manifest.config.params, config);
    tests.push_back({{"episode", per_turbine.at(idx)},
                     {"rmse_init", init_stats.rmse_meas},
                     {"rmse_final", final_stats.rmse_meas},
                     {"rmse_true_init", init_stats.rmse_true},
                     {"rmse_true_final", final_stats.rmse_true}});
  }
  report["test_episodes"] = tests;
  write_json_file(report, out / ("report" + suffix + ".json"));

  std::cout << "turbine " << turbine << ": cost " << run.report.cost_history.front() << " -> "
            << run.report.cost_history.back() << " in " << run.report.iterations << " iterations ("
            << run.report.restart_iters.size() << " restarts)\n";
  return 0;
}

int cmd_control(const fs::path& config_path, const fs::path& out) {
  const json j = read_json_file(config_path);
  const Manifest manifest = load_manifest(fs::path(j.at("manifest").get<std::string>()));
  const std::size_t K = manifest.truth_models.size();

  ArrayModel twin;
  for (std::size_t i = 0; i < K; ++i) {
    twin.turbines.push_back(
        {manifest.config.params, load_surrogate(manifest.dir / manifest.truth_models[i])});
  }
  twin.validate();

  const auto ctl_specs = j.at("controllers").get<std::vector<std::string>>();
  if (ctl_specs.size() != K) {
    throw std::invalid_argument("control: need one controller spec per turbine");
  }
  std::vector<ControllerSpec> controllers;
  for (std::size_t i = 0; i < K; ++i) {
    controllers.push_back(controller_from_spec(ctl_specs[i], manifest, i, config_path.parent_path()));
  }

  std::vector<SetpointSchedule> schedules;
  for (const auto& sched : j.at("schedule")) {
    SetpointSchedule s;
    for (const auto& point : sched) {
      s.push_back({point.at(0).get<double>(), point.at(1).get<double>()});
    }
    schedules.push_back(s);
  }
  if (schedules.size() != K) throw std::invalid_argument("control: need one schedule per turbine");

  // Reject references the controller's own map cannot represent.
  for (std::size_t i = 0; i < K; ++i) {
    if (controllers[i].mode != ControllerSpec::Mode::KOmegaSquared) continue;
    const auto& cfg = controllers[i].model.config;
    for (const auto& p : schedules[i]) {
      if (p.lambda_ref < cfg.support_min() || p.lambda_ref > cfg.support_max()) {
        throw std::invalid_argument("control: schedule for turbine " + std::to_string(i + 1) +
                                    " references lambda outside the model support");
      }
    }
  }

  ClosedLoopConfig loop;
  if (j.contains("loop")) {
    const auto& l = j.at("loop");
    loop.f_s = l.value("f_s", loop.f_s);
    loop.substeps = l.value("substeps", loop.substeps);
    loop.filter_cutoff = l.value("filter_cutoff", loop.filter_cutoff);
    loop.settle_s = l.value("settle_s", loop.settle_s);
    loop.u_ref = l.value("u_ref", loop.u_ref);
  }

  const double duration = j.at("duration").get<double>();
  const auto& wind_spec = j.at("wind");
  std::vector<double> u1;
  const std::string wind_kind = wind_spec.value("kind", "constant");
  const std::size_t n = static_cast<std::size_t>(std::llround(duration * loop.f_s)) + 1;
  if (wind_kind == "constant") {
    u1.assign(n, wind_spec.at("u").get<double>());
  } else if (wind_kind == "high_turbulence") {
    WindScenario w;
    w.kind = WindScenario::Kind::HighTurbulence;
    w.u_mean = wind_spec.value("u_mean", 8.0);
    w.ti = wind_spec.value("ti", 0.08);
    w.t_corr = wind_spec.value("t_corr", 1.5);
    w.seed = wind_spec.value("seed", std::uint64_t{0});
    u1 = gen_wind(w, duration, loop.f_s);
  } else {
    throw std::invalid_argument("control: unknown wind kind '" + wind_kind + "'");
  }

  const ClosedLoopResult result = closed_loop(twin, controllers, schedules, u1, loop);

  fs::create_directories(out);
  write_trajectory_csv(result.traj, out / "control_traj.csv");
  CsvTable refs;
  refs.add_column("t", result.traj.t);
  for (std::size_t i = 0; i < K; ++i) {
    refs.add_column("lambda_ref_" + std::to_string(i + 1), result.lambda_ref_series[i]);
  }
  write_csv(refs, out / "control_refs.csv");

  json metrics = json::array();
  std::cout << "segment tracking metrics (settle " << loop.settle_s << " s):\n";
  for (const auto& seg : result.segments) {
    metrics.push_back({{"turbine", seg.turbine},
                       {"t_begin", seg.t_begin},
                       {"t_end", seg.t_end},
                       {"lambda_ref", seg.lambda_ref},
                       {"mean_err", seg.mean_err},
                       {"rms_err", seg.rms_err}});
    std::cout << "  turbine " << seg.turbine << " [" << seg.t_begin << ", " << seg.t_end
              << ") lambda_ref " << seg.lambda_ref << ": mean " << seg.mean_err << " rms "
              << seg.rms_err << "\n";
  }
  write_json_file({{"segments", metrics}}, out / "control_metrics.json");
  return 0;
}

int cmd_eval(const fs::path& manifest_path, int turbine, const std::string& model_spec,
             const std::string& split, const fs::path& out) {
  const Manifest manifest = load_manifest(manifest_path);
  if (turbine < 1 || turbine > static_cast<int>(manifest.truth_models.size())) {
    throw std::invalid_argument("eval: turbine index out of range");
  }
  const std::size_t idx = static_cast<std::size_t>(turbine - 1);

  CpSurrogate model;
  if (model_spec == "truth") {
    model = load_surrogate(manifest.dir / manifest.truth_models[idx]);
  } else {
    model = load_surrogate(model_spec);
  }

  const auto& file_set = split == "train" ? manifest.train_files : manifest.test_files;
  if (file_set.empty()) throw std::invalid_argument("eval: no episodes in split '" + split + "'");
  std::vector<EpisodeFile> episodes;
  for (const auto& per_turbine : file_set) {
    episodes.push_back(read_episode_csv(manifest.dir / per_turbine.at(idx)));
  }

  IdentifyConfig config;  // filter defaults
  const EvalStats stats = evaluate_model_pooled(model, episodes, manifest.config.params, config);

  fs::create_directories(out);

  // Histograms of measured vs simulated speed for plotting.
  std::vector<double> meas, sim;
  for (const auto& ep : episodes) {
    const TrainingSeries series = make_training_series(ep, manifest.config.params, config);
    const std::vector<double> s = simulate_turbine(model, series, manifest.config.params);
    meas.insert(meas.end(), ep.omega_star.begin(), ep.omega_star.end());
    sim.insert(sim.end(), s.begin(), s.end());
  }
  double lo = meas.front(), hi = meas.front();
  for (double v : meas) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : sim) lo = std::min(lo, v), hi = std::max(hi, v);
  const int bins = 40;
  std::vector<double> lo_col(bins), hi_col(bins), c_meas(bins, 0.0), c_sim(bins, 0.0);
  const double width = (hi - lo) / bins > 0 ? (hi - lo) / bins : 1.0;
  for (int b = 0; b < bins; ++b) {
    lo_col[b] = lo + b * width;
    hi_col[b] = lo + (b + 1) * width;
  }
  auto fill = [&](const std::vector<double>& v, std::vector<double>& counts) {
    for (double x : v) {
      int b = static_cast<int>((x - lo) / width);
      b = std::clamp(b, 0, bins - 1);
      counts[static_cast<std::size_t>(b)] += 1.0;
    }
  };
  fill(meas, c_meas);
  fill(sim, c_sim);
  CsvTable hist;
  hist.add_column("bin_lo", lo_col);
  hist.add_column("bin_hi", hi_col);
  hist.add_column("count_measured", c_meas);
  hist.add_column("count_model", c_sim);
  write_csv(hist, out / ("eval_hist_t" + std::to_string(turbine) + ".csv"));

  json report;
  report["turbine"] = turbine;
  report["split"] = split;
  report["episodes"] = file_set.size();
  report["rmse_vs_measured"] = stats.rmse_meas;
  if (std::isfinite(stats.rmse_true)) report["rmse_vs_true"] = stats.rmse_true;
  report["mean_measured"] = stats.mean_meas;
  report["mean_model"] = stats.mean_sim;
  report["mean_error_rel"] = (stats.mean_sim - stats.mean_meas) / stats.mean_meas;
  report["std_measured"] = stats.std_meas;
  report["std_model"] = stats.std_sim;
  report["std_ratio"] = stats.std_sim / stats.std_meas;
  write_json_file(report, out / ("eval_t" + std::to_string(turbine) + ".json"));

  std::cout << "turbine " << turbine << " (" << split << "): rmse " << stats.rmse_meas
            << ", mean error " << 100.0 * (stats.mean_sim - stats.mean_meas) / stats.mean_meas
            << " %, std ratio " << stats.std_sim / stats.std_meas << "\n";
  return 0;
}

int cmd_stability(const std::string& model_spec, const fs::path& manifest_path,
                  double lambda_min, double lambda_max, double lambda_step, double aux_min,
                  double aux_max, int aux_count, const std::string& law_spec, double u_ref,
                  const fs::path& out) {
  const Manifest manifest = load_manifest(manifest_path);
  CpSurrogate model;
  if (model_spec.rfind("truth:", 0) == 0) {
    const int t = std::stoi(model_spec.substr(6));
    model = load_surrogate(manifest.dir / manifest.truth_models.at(t - 1));
  } else {
    model = load_surrogate(model_spec);
  }

  TorqueLaw law = TorqueLaw::constant_resistance(1.0);
  if (law_spec.rfind("const_rv:", 0) == 0) {
    law = TorqueLaw::constant_resistance(std::stod(law_spec.substr(9)));
  } else if (law_spec.rfind("kw2:", 0) == 0) {
    law = TorqueLaw::k_omega_squared(std::stod(law_spec.substr(4)));
  } else {
    throw std::invalid_argument("stability: law must be const_rv:<Ohm> or kw2:<K>");
  }

  std::vector<double> lambdas;
  for (double l = lambda_min; l <= lambda_max + 0.5 * lambda_step; l += lambda_step) {
    lambdas.push_back(l);
  }
  std::vector<double> auxes;
  for (int i = 0; i < aux_count; ++i) {
    auxes.push_back(aux_min + (aux_max - aux_min) * i / std::max(aux_count - 1, 1));
  }

  const auto violations =
      stability_scan(model, manifest.config.params, lambdas, auxes, law, u_ref);

  fs::create_directories(out);
  CsvTable table;
  std::vector<double> vl, va, vd;
  for (const auto& v : violations) {
    vl.push_back(v.lambda);
    va.push_back(v.aux);
    vd.push_back(v.df_dlambda);
  }
  table.add_column("lambda", vl);
  table.add_column("aux", va);
  table.add_column("df_dlambda", vd);
  write_csv(table, out / "stability_violations.csv");

  std::cout << violations.size() << " violation(s) over " << lambdas.size() * auxes.size()
            << " grid points\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surrogate identification and torque control for a model wind-turbine array"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int turbine = 1;
  int max_iters = -1;
  std::string model_spec = "truth", split = "test", manifest_path, law_spec = "const_rv:1.0";
  double lambda_min = 3.5, lambda_max = 8.5, lambda_step = 0.05;
  double aux_min = 0.0, aux_max = 0.0, u_ref = 8.0;
  int aux_count = 5;

  auto* sim = app.add_subcommand("simulate", "synthesize episodes from the digital twin");
  sim->add_option("--config", config_path, "scenario JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out_dir, "output directory");
  sim->add_option("--seed", seed, "override the scenario seed")->each([&](const std::string&) {
    seed_set = true;
  });

  auto* ident = app.add_subcommand("identify", "fit a turbine's Cp surrogate");
  ident->add_option("--manifest", manifest_path, "manifest.json from simulate")
      ->required()
      ->check(CLI::ExistingFile);
  ident->add_option("--turbine", turbine, "1-based turbine index");
  ident->add_option("--config", config_path, "identification JSON")->check(CLI::ExistingFile);
  ident->add_option("--out", out_dir, "output directory");
  ident->add_option("--max-iters", max_iters, "override the iteration cap");

  auto* ctl = app.add_subcommand("control", "closed-loop tracking on the twin");
  ctl->add_option("--config", config_path, "control JSON")->required()->check(CLI::ExistingFile);
  ctl->add_option("--out", out_dir, "output directory");

  auto* ev = app.add_subcommand("eval", "statistics of a model against episodes");
  ev->add_option("--manifest", manifest_path, "manifest.json from simulate")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--turbine", turbine, "1-based turbine index");
  ev->add_option("--model", model_spec, "'truth' or a model file path");
  ev->add_option("--split", split, "train or test")->check(CLI::IsMember({"train", "test"}));
  ev->add_option("--out", out_dir, "output directory");

  auto* stab = app.add_subcommand("stability", "scan steady states for instability");
  stab->add_option("--manifest", manifest_path, "manifest.json (turbine parameters)")
      ->required()
      ->check(CLI::ExistingFile);
  stab->add_option("--model", model_spec, "'truth:<i>' or a model file path");
  stab->add_option("--lambda-min", lambda_min);
  stab->add_option("--lambda-max", lambda_max);
  stab->add_option("--lambda-step", lambda_step);
  stab->add_option("--aux-min", aux_min)->required();
  stab->add_option("--aux-max", aux_max)->required();
  stab->add_option("--aux-count", aux_count);
  stab->add_option("--law", law_spec, "const_rv:<Ohm> or kw2:<K>");
  stab->add_option("--u-ref", u_ref, "wind speed for tip-speed-ratio auxiliaries");
  stab->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      return cmd_simulate(config_path, out_dir,
                          seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt);
    }
    if (ident->parsed()) {
      return cmd_identify(manifest_path, turbine, out_dir,
                          config_path.empty() ? std::nullopt
                                              : std::optional<fs::path>(config_path),
                          max_iters >= 0 ? std::optional<int>(max_iters) : std::nullopt);
    }
    if (ctl->parsed()) return cmd_control(config_path, out_dir);
    if (ev->parsed()) return cmd_eval(manifest_path, turbine, model_spec, split, out_dir);
    if (stab->parsed()) {
      return cmd_stability(model_spec, manifest_path, lambda_min, lambda_max, lambda_step,
                           aux_min, aux_max, aux_count, law_spec, u_ref, out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
