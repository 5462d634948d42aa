#include "wtsid/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "wtsid/csv.hpp"

namespace wtsid {

using nlohmann::json;

void ScenarioConfig::validate() const {
  params.validate();
  noise.validate();
  if (!(f_s > 0.0) || !(duration > 0.0)) {
    throw std::invalid_argument("scenario: f_s and duration must be positive");
  }
  if (n_turbines < 1) throw std::invalid_argument("scenario: need at least one turbine");
  if (episodes_train < 1) throw std::invalid_argument("scenario: need at least one training episode");
  if (episodes_test < 0) throw std::invalid_argument("scenario: episodes_test must be >= 0");
  if (!(u_min > 0.0) || !(u_max >= u_min)) throw std::invalid_argument("scenario: bad wind range");
  if (!(wind_segment_s > 0.0) || !(rv_segment_s > 0.0)) {
    throw std::invalid_argument("scenario: segment lengths must be positive");
  }
  if (!(lambda_max > lambda_min)) throw std::invalid_argument("scenario: bad lambda range");
  if (grid_n_lambda < 2 || grid_n_aux < 2) {
    throw std::invalid_argument("scenario: steady grid needs at least 2x2 points");
  }
  if (ti < 0.0 || ti > 0.5) throw std::invalid_argument("scenario: ti must be in [0, 0.5]");
  if (measured_corr < 0.0 || measured_corr > 1.0) {
    throw std::invalid_argument("scenario: measured_corr must be in [0, 1]");
  }
}

namespace {

json params_to_json(const TurbineParams& p) {
  return json{{"J", p.J},         {"R", p.R},           {"rho", p.rho},
              {"nu", p.nu},       {"k_tau", p.k_tau},   {"k_omega", p.k_omega},
              {"R_tot", p.R_tot}, {"eta_gen", p.eta_gen}, {"N_g", p.N_g}};
}

TurbineParams params_from_json(const json& j) {
  TurbineParams p;
  p.J = j.value("J", p.J);
  p.R = j.value("R", p.R);
  p.rho = j.value("rho", p.rho);
  p.nu = j.value("nu", p.nu);
  p.k_tau = j.value("k_tau", p.k_tau);
  p.k_omega = j.value("k_omega", p.k_omega);
  p.R_tot = j.value("R_tot", p.R_tot);
  p.eta_gen = j.value("eta_gen", p.eta_gen);
  p.N_g = j.value("N_g", p.N_g);
  return p;
}

json config_to_json(const ScenarioConfig& c) {
  json j;
  j["kind"] = c.kind == ScenarioConfig::Kind::LowTurbulence ? "low_turbulence" : "high_turbulence";
  j["seed"] = c.seed;
  j["f_s"] = c.f_s;
  j["duration"] = c.duration;
  j["turbines"] = c.n_turbines;
  j["episodes_train"] = c.episodes_train;
  j["episodes_test"] = c.episodes_test;
  j["turbine_params"] = params_to_json(c.params);
  j["noise"] = {{"sigma_omega_rel", c.noise.sigma_omega_rel},
                {"sigma_u_rel", c.noise.sigma_u_rel},
                {"sigma_tau_rel", c.noise.sigma_tau_rel}};
  j["wind"] = {{"u_min", c.u_min}, {"u_max", c.u_max}, {"segment_s", c.wind_segment_s}};
  j["resistance"] = {{"lambda_min", c.lambda_min},
                     {"lambda_max", c.lambda_max},
                     {"segment_s", c.rv_segment_s}};
  j["high"] = {{"u_mean", c.u_mean},
               {"ti", c.ti},
               {"t_corr", c.t_corr},
               {"measured_corr", c.measured_corr},
               {"rv_fixed", c.rv_fixed}};
  j["steady_grid"] = {{"n_lambda", c.grid_n_lambda},
                      {"lambda_min", c.grid_lambda_min},
                      {"lambda_max", c.grid_lambda_max},
                      {"n_aux", c.grid_n_aux},
                      {"u_min", c.grid_u_min},
                      {"u_max", c.grid_u_max},
                      {"aux_min_tsr", c.grid_aux_min_tsr},
                      {"aux_max_tsr", c.grid_aux_max_tsr}};
  return j;
}

ScenarioConfig config_from_json(const json& j) {
  ScenarioConfig c;
  const std::string kind = j.value("kind", "low_turbulence");
  if (kind == "low_turbulence") {
    c.kind = ScenarioConfig::Kind::LowTurbulence;
  } else if (kind == "high_turbulence") {
    c.kind = ScenarioConfig::Kind::HighTurbulence;
  } else {
    throw std::invalid_argument("scenario config: unknown kind '" + kind + "'");
  }
  c.seed = j.value("seed", c.seed);
  c.f_s = j.value("f_s", c.f_s);
  c.duration = j.value("duration", c.duration);
  c.n_turbines = j.value("turbines", c.n_turbines);
  c.episodes_train = j.value("episodes_train", c.episodes_train);
  c.episodes_test = j.value("episodes_test", c.episodes_test);
  if (j.contains("turbine_params")) c.params = params_from_json(j.at("turbine_params"));
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    c.noise.sigma_omega_rel = n.value("sigma_omega_rel", c.noise.sigma_omega_rel);
    c.noise.sigma_u_rel = n.value("sigma_u_rel", c.noise.sigma_u_rel);
    c.noise.sigma_tau_rel = n.value("sigma_tau_rel", c.noise.sigma_tau_rel);
  }
  if (j.contains("wind")) {
    const auto& w = j.at("wind");
    c.u_min = w.value("u_min", c.u_min);
    c.u_max = w.value("u_max", c.u_max);
    c.wind_segment_s = w.value("segment_s", c.wind_segment_s);
  }
  if (j.contains("resistance")) {
    const auto& r = j.at("resistance");
    c.lambda_min = r.value("lambda_min", c.lambda_min);
    c.lambda_max = r.value("lambda_max", c.lambda_max);
    c.rv_segment_s = r.value("segment_s", c.rv_segment_s);
  }
  if (j.contains("high")) {
    const auto& h = j.at("high");
    c.u_mean = h.value("u_mean", c.u_mean);
    c.ti = h.value("ti", c.ti);
    c.t_corr = h.value("t_corr", c.t_corr);
    c.measured_corr = h.value("measured_corr", c.measured_corr);
    c.rv_fixed = h.value("rv_fixed", c.rv_fixed);
  }
  if (j.contains("steady_grid")) {
    const auto& g = j.at("steady_grid");
    c.grid_n_lambda = g.value("n_lambda", c.grid_n_lambda);
    c.grid_lambda_min = g.value("lambda_min", c.grid_lambda_min);
    c.grid_lambda_max = g.value("lambda_max", c.grid_lambda_max);
    c.grid_n_aux = g.value("n_aux", c.grid_n_aux);
    c.grid_u_min = g.value("u_min", c.grid_u_min);
    c.grid_u_max = g.value("u_max", c.grid_u_max);
    c.grid_aux_min_tsr = g.value("aux_min_tsr", c.grid_aux_min_tsr);
    c.grid_aux_max_tsr = g.value("aux_max_tsr", c.grid_aux_max_tsr);
  }
  c.validate();
  return c;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  in >> j;
  return j;
}

void write_json_file(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace

ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
  return config_from_json(read_json_file(path));
}

void save_scenario_config(const ScenarioConfig& config, const std::filesystem::path& path) {
  write_json_file(config_to_json(config), path);
}

double equilibrium_lambda(const CpSurrogate& model, const TurbineParams& params, double u,
                          double aux, double R_sum) {
  // Steady state: tau_a = tau_g  <=>  C * lambda^2 / cp(lambda) = R_sum * u,
  // C = 2 k_tau k_omega / (rho pi R^4). The stable branch is where
  // lambda^2/cp increases, to the right of its minimum.
  const double C = 2.0 * params.k_tau * params.k_omega /
                   (params.rho * M_PI * std::pow(params.R, 4));
  auto g = [&](double lambda) {
    const double cp = cp_eval(model, lambda, aux);
    if (!(cp > 0.0)) return std::numeric_limits<double>::infinity();
    return C * lambda * lambda / cp;
  };
  const double target = R_sum * u;
  const double lo_edge = model.config.support_min() + 1e-6;
  const double hi_edge = model.config.support_max() - 1e-6;

  // Locate the minimum of g by coarse scan, then bisect on the rising branch.
  double lam_min = lo_edge;
  double g_min = g(lo_edge);
  for (double l = lo_edge; l <= hi_edge; l += 0.01) {
    const double v = g(l);
    if (v < g_min) {
      g_min = v;
      lam_min = l;
    }
  }
  if (!(target > g_min)) {
    throw std::runtime_error("equilibrium_lambda: no steady state at this load (shutdown)");
  }
  double a = lam_min, b = hi_edge;
  if (g(b) < target) {
    throw std::runtime_error("equilibrium_lambda: load too light, equilibrium beyond support");
  }
  for (int it = 0; it < 200 && b - a > 1e-12 * std::max(1.0, b); ++it) {
    const double mid = 0.5 * (a + b);
    (g(mid) < target ? a : b) = mid;
  }
  return 0.5 * (a + b);
}

double equilibrium_resistance(const CpSurrogate& model, const TurbineParams& params, double u,
                              double aux, double lambda_target) {
  const double cp = cp_eval(model, lambda_target, aux);
  if (!(cp > 0.0)) {
    throw std::runtime_error("equilibrium_resistance: cp must be positive at the target");
  }
  const double C = 2.0 * params.k_tau * params.k_omega /
                   (params.rho * M_PI * std::pow(params.R, 4));
  return C * lambda_target * lambda_target / (cp * u) - params.R_tot;
}

namespace {

struct EpisodePlan {
  std::vector<double> u_driving, u_reported;
  std::vector<std::vector<double>> rv;  // [turbine][sample]
  std::vector<double> omega0;
};

// Low-turbulence excitation: wind ramps between random levels, resistance
// steps placed on the bank that chase random tip-speed-ratio targets using
// the truth maps (the synthetic stand-in for an operator exciting the rig).
EpisodePlan plan_low_turbulence(const ScenarioConfig& cfg, const ArrayModel& twin,
                                const ResistorBank& bank, std::uint64_t ep_seed) {
  const std::size_t n = static_cast<std::size_t>(std::llround(cfg.duration * cfg.f_s)) + 1;
  const std::size_t K = twin.size();
  EpisodePlan plan;

  std::mt19937_64 rng(mix_seed(ep_seed, 11));
  std::uniform_real_distribution<double> u_dist(cfg.u_min, cfg.u_max);
  WindScenario wind;
  wind.kind = WindScenario::Kind::LowTurbulence;
  wind.u_mean = 0.5 * (cfg.u_min + cfg.u_max);
  for (double t = 0.0; t <= cfg.duration + 0.5 * cfg.wind_segment_s; t += cfg.wind_segment_s) {
    wind.ramp_knots.emplace_back(t, u_dist(rng));
  }
  plan.u_driving = gen_wind(wind, cfg.duration, cfg.f_s);
  plan.u_reported = plan.u_driving;

  std::uniform_real_distribution<double> lam_dist(cfg.lambda_min, cfg.lambda_max);
  plan.rv.assign(K, std::vector<double>(n));
  std::vector<double> lam_target(K, 0.0);
  plan.omega0.resize(K);
  const std::size_t step_len = static_cast<std::size_t>(std::llround(cfg.rv_segment_s * cfg.f_s));
  for (std::size_t i = 0; i < K; ++i) {
    std::mt19937_64 rng_i(mix_seed(ep_seed, 100 + i));
    double rv_now = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k % std::max<std::size_t>(step_len, 1) == 0) {
        lam_target[i] = lam_dist(rng_i);
        const double u_now = plan.u_driving[k];
        // Downstream turbines take the upstream target as their auxiliary.
        const double aux = i == 0 ? twin.turbines[i].params.reynolds(u_now)
                                  : lam_target[i - 1];
        const double rv_ideal = equilibrium_resistance(twin.turbines[i].cp,
                                                       twin.turbines[i].params, u_now, aux,
                                                       lam_target[i]);
        rv_now = bank.snap(std::clamp(rv_ideal, bank.min_value(), bank.max_value()));
      }
      plan.rv[i][k] = rv_now;
      if (k == 0) {
        plan.omega0[i] = lam_target[i] * plan.u_driving[0] / twin.turbines[i].params.R;
      }
    }
  }
  return plan;
}

EpisodePlan plan_high_turbulence(const ScenarioConfig& cfg, const ArrayModel& twin,
                                 const ResistorBank& bank, std::uint64_t ep_seed) {
  const std::size_t n = static_cast<std::size_t>(std::llround(cfg.duration * cfg.f_s)) + 1;
  const std::size_t K = twin.size();
  EpisodePlan plan;

  WindScenario wind;
  wind.kind = WindScenario::Kind::HighTurbulence;
  wind.u_mean = cfg.u_mean;
  wind.ti = cfg.ti;
  wind.t_corr = cfg.t_corr;
  wind.seed = mix_seed(ep_seed, 21);
  const WindPair pair = gen_wind_pair(wind, cfg.duration, cfg.f_s, cfg.measured_corr);
  plan.u_driving = pair.driving;
  plan.u_reported = pair.reported;

  const double rv = bank.snap(cfg.rv_fixed);
  plan.rv.assign(K, std::vector<double>(n, rv));
  plan.omega0.resize(K);
  double aux = twin.turbines[0].params.reynolds(cfg.u_mean);
  for (std::size_t i = 0; i < K; ++i) {
    const double lam = equilibrium_lambda(twin.turbines[i].cp, twin.turbines[i].params,
                                          cfg.u_mean, aux, twin.turbines[i].params.R_tot + rv);
    plan.omega0[i] = lam * cfg.u_mean / twin.turbines[i].params.R;
    aux = lam;  // next turbine sees this one's tip-speed ratio
  }
  return plan;
}

SteadyGrid make_steady_grid(const ScenarioConfig& cfg, const ArrayModel& twin,
                            const ResistorBank& bank, std::size_t turbine,
                            std::uint64_t seed) {
  const CpSurrogate& truth = twin.turbines[turbine].cp;
  const TurbineParams& params = twin.turbines[turbine].params;
  const bool freestream = turbine == 0;

  SteadyGrid grid;
  grid.n_lambda = static_cast<std::size_t>(cfg.grid_n_lambda);
  grid.n_aux = static_cast<std::size_t>(cfg.grid_n_aux);
  grid.samples.resize(grid.n_lambda * grid.n_aux);

  std::mt19937_64 rng(mix_seed(seed, 900 + turbine));
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (std::size_t j = 0; j < grid.n_lambda; ++j) {
    const double lam_target = cfg.grid_lambda_min +
                              (cfg.grid_lambda_max - cfg.grid_lambda_min) *
                                  static_cast<double>(j) /
                                  static_cast<double>(grid.n_lambda - 1);
    for (std::size_t k = 0; k < grid.n_aux; ++k) {
      const double frac = static_cast<double>(k) / static_cast<double>(grid.n_aux - 1);
      double u, aux_true;
      if (freestream) {
        u = cfg.grid_u_min + (cfg.grid_u_max - cfg.grid_u_min) * frac;
        aux_true = params.reynolds(u);
      } else {
        u = 0.5 * (cfg.grid_u_min + cfg.grid_u_max);
        aux_true = cfg.grid_aux_min_tsr + (cfg.grid_aux_max_tsr - cfg.grid_aux_min_tsr) * frac;
      }
      // Place the bank load for the target, then settle on the exact
      // equilibrium that load produces.
      const double rv_ideal = equilibrium_resistance(truth, params, u, aux_true, lam_target);
      const double rv = bank.snap(std::clamp(rv_ideal, bank.min_value(), bank.max_value()));
      const double lam = equilibrium_lambda(truth, params, u, aux_true, params.R_tot + rv);
      const double omega = lam * u / params.R;

      SteadySample s;
      s.R_v = rv;
      s.sigma_omega = std::max(cfg.noise.sigma_omega_rel * omega, 1e-12);
      s.sigma_u = std::max(cfg.noise.sigma_u_rel * u, 1e-12);
      s.sigma_tau = std::max(cfg.noise.sigma_tau_rel * gen_torque(omega, rv, params), 1e-12);
      s.omega = omega * (1.0 + cfg.noise.sigma_omega_rel * gauss(rng));
      s.u1 = u * (1.0 + cfg.noise.sigma_u_rel * gauss(rng));
      if (freestream) {
        s.aux = params.reynolds(s.u1);
      } else {
        // The upstream tip-speed ratio is itself inferred from noisy
        // measurements of the upstream speed and the shared anemometer.
        const double omega_up = aux_true * u / params.R;
        const double omega_up_meas = omega_up * (1.0 + cfg.noise.sigma_omega_rel * gauss(rng));
        s.aux = params.tip_speed_ratio(omega_up_meas, s.u1);
      }
      grid.at(j, k) = s;
    }
  }
  return grid;
}

}  // namespace

ScenarioData build_scenario(const ScenarioConfig& config) {
  config.validate();
  ScenarioData data;
  data.config = config;

  data.twin.spacing = 8.0 * config.params.R;  // four diameters
  data.twin.turbines.push_back({config.params, make_twin_truth(TwinKind::Freestream)});
  for (int i = 1; i < config.n_turbines; ++i) {
    data.twin.turbines.push_back({config.params, make_twin_truth(TwinKind::Waked)});
  }
  data.twin.validate();

  const ResistorBank bank = ResistorBank::standard();
  const int total = config.episodes_train + config.episodes_test;
  for (int e = 0; e < total; ++e) {
    const std::uint64_t ep_seed = mix_seed(config.seed, static_cast<std::uint64_t>(e));
    const EpisodePlan plan = config.kind == ScenarioConfig::Kind::LowTurbulence
                                 ? plan_low_turbulence(config, data.twin, bank, ep_seed)
                                 : plan_high_turbulence(config, data.twin, bank, ep_seed);
    NoiseSpec noise = config.noise;
    noise.seed = mix_seed(ep_seed, 77);
    SynthEpisode ep = synth_episode(data.twin, plan.u_driving, plan.u_reported, plan.rv, noise,
                                    plan.omega0, config.f_s);
    if (e < config.episodes_train) {
      data.train.push_back(std::move(ep));
    } else {
      data.test.push_back(std::move(ep));
    }
  }

  for (std::size_t i = 0; i < data.twin.size(); ++i) {
    data.steady.push_back(make_steady_grid(config, data.twin, bank, i, config.seed));
  }
  return data;
}

EpisodeFile episode_file_for_turbine(const SynthEpisode& episode, std::size_t turbine_index) {
  const Episode& m = episode.measured;
  if (turbine_index >= m.turbines()) {
    throw std::invalid_argument("episode_file_for_turbine: index out of range");
  }
  EpisodeFile f;
  f.turbine = static_cast<int>(turbine_index) + 1;
  f.f_s = m.f_s;
  f.t = m.t;
  f.u1 = m.u1;
  f.omega_star = m.omegas_meas[turbine_index];
  f.R_v = m.R_vs[turbine_index];
  if (turbine_index > 0) f.omega_upstream = m.omegas_meas[turbine_index - 1];
  f.omega_true = episode.truth.omegas[turbine_index];
  return f;
}

namespace {

std::string two_digits(std::size_t v) {
  return (v < 10 ? "0" : "") + std::to_string(v);
}

std::vector<std::vector<std::string>> write_episode_set(
    const std::vector<SynthEpisode>& episodes, const std::string& prefix,
    const std::filesystem::path& dir) {
  std::vector<std::vector<std::string>> names;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    std::vector<std::string> per_turbine;
    for (std::size_t i = 0; i < episodes[e].measured.turbines(); ++i) {
      const std::string name =
          prefix + "_ep" + two_digits(e + 1) + "_t" + std::to_string(i + 1) + ".csv";
      write_episode_csv(episode_file_for_turbine(episodes[e], i), dir / name);
      per_turbine.push_back(name);
    }
    write_trajectory_csv(episodes[e].truth, dir / (prefix + "_ep" + two_digits(e + 1) + "_truth.csv"));
    names.push_back(per_turbine);
  }
  return names;
}

}  // namespace

ScenarioFiles write_scenario(const ScenarioData& data, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  ScenarioFiles files;

  for (std::size_t i = 0; i < data.twin.size(); ++i) {
    const std::string name = "truth_model_" + std::to_string(i + 1) + ".txt";
    save_surrogate(data.twin.turbines[i].cp, out_dir / name);
    files.truth_models.push_back(name);
  }
  files.train_files = write_episode_set(data.train, "train", out_dir);
  files.test_files = write_episode_set(data.test, "test", out_dir);
  for (std::size_t i = 0; i < data.steady.size(); ++i) {
    const std::string name = "steady_t" + std::to_string(i + 1) + ".csv";
    write_steady_csv(data.steady[i], out_dir / name);
    files.steady_files.push_back(name);
  }

  json manifest;
  manifest["scenario"] = config_to_json(data.config);
  manifest["truth_models"] = files.truth_models;
  manifest["train_episodes"] = files.train_files;
  manifest["test_episodes"] = files.test_files;
  manifest["steady_samples"] = files.steady_files;
  files.manifest = out_dir / "manifest.json";
  write_json_file(manifest, files.manifest);
  return files;
}

Manifest load_manifest(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  Manifest m;
  m.dir = path.parent_path();
  m.config = config_from_json(j.at("scenario"));
  m.truth_models = j.at("truth_models").get<std::vector<std::string>>();
  m.train_files = j.at("train_episodes").get<std::vector<std::vector<std::string>>>();
  m.test_files = j.at("test_episodes").get<std::vector<std::vector<std::string>>>();
  m.steady_files = j.at("steady_samples").get<std::vector<std::string>>();
  return m;
}

IdentifyRunResult run_identification(const SteadyGrid& grid,
                                     const std::vector<EpisodeFile>& episodes,
                                     const BasisConfig& basis, const TurbineParams& params,
                                     const IdentifyConfig& config) {
  IdentifyRunResult result;
  result.init_model.config = basis;
  result.init_model.weights = wls_init(grid, basis, params);

  std::vector<TrainingSeries> series;
  series.reserve(episodes.size());
  for (const auto& ep : episodes) series.push_back(make_training_series(ep, params, config));

  result.final_model = adam_run(result.init_model, series, params, config, &result.report);
  return result;
}

EvalStats evaluate_model(const CpSurrogate& model, const EpisodeFile& episode,
                         const TurbineParams& params, const IdentifyConfig& config) {
  return evaluate_model_pooled(model, {episode}, params, config);
}

EvalStats evaluate_model_pooled(const CpSurrogate& model, const std::vector<EpisodeFile>& episodes,
                                const TurbineParams& params, const IdentifyConfig& config) {
  if (episodes.empty()) throw std::invalid_argument("evaluate: no episodes");
  EvalStats stats;
  double sq_meas = 0.0, sq_true = 0.0;
  double sum_meas = 0.0, sum_sim = 0.0;
  bool have_truth = true;
  std::vector<double> all_meas, all_sim;
  for (const auto& ep : episodes) {
    const TrainingSeries series = make_training_series(ep, params, config);
    const std::vector<double> sim = simulate_turbine(model, series, params, config.substeps);
    for (std::size_t k = 0; k < sim.size(); ++k) {
      const double meas = ep.omega_star[k];
      sq_meas += (meas - sim[k]) * (meas - sim[k]);
      if (ep.omega_true.empty()) {
        have_truth = false;
      } else {
        sq_true += (ep.omega_true[k] - sim[k]) * (ep.omega_true[k] - sim[k]);
      }
      sum_meas += meas;
      sum_sim += sim[k];
      all_meas.push_back(meas);
      all_sim.push_back(sim[k]);
      ++stats.samples;
    }
  }
  const double n = static_cast<double>(stats.samples);
  stats.rmse_meas = std::sqrt(sq_meas / n);
  stats.rmse_true = have_truth ? std::sqrt(sq_true / n) : std::numeric_limits<double>::quiet_NaN();
  stats.mean_meas = sum_meas / n;
  stats.mean_sim = sum_sim / n;
  double var_meas = 0.0, var_sim = 0.0;
  for (std::size_t k = 0; k < all_meas.size(); ++k) {
    var_meas += (all_meas[k] - stats.mean_meas) * (all_meas[k] - stats.mean_meas);
    var_sim += (all_sim[k] - stats.mean_sim) * (all_sim[k] - stats.mean_sim);
  }
  stats.std_meas = std::sqrt(var_meas / n);
  stats.std_sim = std::sqrt(var_sim / n);
  return stats;
}

}  // namespace wtsid
