// hybandit: command-line front end for the bandit simulation harness.
//
// Settings are resolved in layers: built-in defaults, then the --setting
// preset, then the JSON --config file, then individual flags.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hybandit/algorithms.hpp"
#include "hybandit/environments.hpp"
#include "hybandit/harness.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace hybandit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Bad configuration or flag values; reported with exit code 2.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::string setting;
  std::string algos;
  std::string k_grid;
  std::optional<double> scale;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out_dir;
  std::optional<double> rho;
  std::optional<std::size_t> n_envs;
  std::optional<std::size_t> n_trials;
  std::optional<std::size_t> diagnostics_every;
  std::optional<std::size_t> regret_stride;
  bool quiet = false;

  // command specific
  std::string out;
  std::size_t env_id = 0;
  std::string log;
  std::optional<std::size_t> train_n;
  std::optional<double> noise_std;
  double burn_in = 0.0;
  std::string run_dir;
  SyntheticLogConfig gen_log;
};

/// Everything a command needs after layering defaults, preset, config, flags.
struct Resolved {
  ExperimentSpec spec;
  std::string setting_name = "custom";
  fs::path out_dir;
  std::optional<double> rho;
  std::string log;
  std::size_t train_n = 0;
  double replay_noise_std = 0.01;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<Algo> parse_algos(const std::vector<std::string>& names) {
  std::vector<Algo> out;
  for (const auto& n : names) {
    try {
      out.push_back(parse_algo(n));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (out.empty()) throw ConfigError("no algorithms given");
  return out;
}

std::vector<std::size_t> parse_k_grid(const std::vector<std::string>& items) {
  std::vector<std::size_t> out;
  for (const auto& s : items) {
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || v <= 0) throw ConfigError("bad K grid entry '" + s + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ConfigError("empty K grid");
  return out;
}

std::string normalize_setting(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "1" || s == "setting1") return "1";
  if (s == "2" || s == "setting2") return "2";
  if (s == "3" || s == "setting3") return "3";
  if (s == "custom" || s == "diversity" || s == "replay") return s;
  throw ConfigError("unknown setting '" + s + "' (expected 1, 2, 3, custom or diversity)");
}

void apply_preset(const std::string& name, ExperimentSpec& spec) {
  if (name == "1") {
    spec.setting = Setting::Setting1;
  } else if (name == "2") {
    spec.setting = Setting::Setting2;
  } else if (name == "3") {
    spec.setting = Setting::Setting3;
  } else if (name == "diversity") {
    spec.setting = Setting::Custom;
    spec.dims = {10, 10, 25};
    spec.T = 5000;
    spec.n_envs = 1;
    spec.n_trials = 100;
    spec.diagnostics_every = 100;
  } else if (name == "replay") {
    spec.setting = Setting::Replay;
  } else {
    spec.setting = Setting::Custom;
  }
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

std::size_t get_count(const json& j, const std::string& key) {
  if (!j.at(key).is_number_unsigned())
    throw ConfigError("config key '" + key + "' must be a nonnegative integer");
  return j.at(key).get<std::size_t>();
}

void apply_config(const json& cfg, Resolved& r) {
  static const std::vector<std::string> known = {
      "setting", "algos", "n_envs", "n_trials", "k_grid", "diagnostics_every",
      "seed", "d1", "d2", "K", "T", "noise_std", "S", "delta", "scale",
      "lambda", "gamma", "gamma_form", "threads", "out_dir", "regret_stride",
      "rho", "confidence_every_round", "elliptic_every_round",
      "dense_sandwich_limit", "log", "train_n", "replay_noise_std"};
  for (const auto& [key, value] : cfg.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown config key '" + key + "'");

  ExperimentSpec& s = r.spec;
  if (cfg.contains("algos")) s.algos = parse_algos(get_as<std::vector<std::string>>(cfg, "algos"));
  if (cfg.contains("n_envs")) s.n_envs = get_count(cfg, "n_envs");
  if (cfg.contains("n_trials")) s.n_trials = get_count(cfg, "n_trials");
  if (cfg.contains("k_grid")) s.k_grid = get_as<std::vector<std::size_t>>(cfg, "k_grid");
  if (cfg.contains("diagnostics_every")) s.diagnostics_every = get_count(cfg, "diagnostics_every");
  if (cfg.contains("seed")) s.base_seed = get_as<std::uint64_t>(cfg, "seed");
  if (cfg.contains("d1")) s.dims.d1 = get_count(cfg, "d1");
  if (cfg.contains("d2")) s.dims.d2 = get_count(cfg, "d2");
  if (cfg.contains("K")) s.dims.K = get_count(cfg, "K");
  if (cfg.contains("T")) s.T = get_count(cfg, "T");
  if (cfg.contains("noise_std")) s.noise_std = get_as<double>(cfg, "noise_std");
  if (cfg.contains("S")) s.S = get_as<double>(cfg, "S");
  if (cfg.contains("delta")) s.delta = get_as<double>(cfg, "delta");
  if (cfg.contains("scale")) s.scale = get_as<double>(cfg, "scale");
  if (cfg.contains("lambda")) s.overrides.lambda = get_as<double>(cfg, "lambda");
  if (cfg.contains("gamma")) s.overrides.gamma = get_as<double>(cfg, "gamma");
  if (cfg.contains("gamma_form")) {
    const auto f = get_as<std::string>(cfg, "gamma_form");
    if (f == "default") s.overrides.gamma_form = GammaForm::Default;
    else if (f == "main_text") s.overrides.gamma_form = GammaForm::MainText;
    else if (f == "appendix") s.overrides.gamma_form = GammaForm::Appendix;
    else throw ConfigError("gamma_form must be default, main_text or appendix");
  }
  if (cfg.contains("threads")) s.threads = get_as<unsigned>(cfg, "threads");
  if (cfg.contains("out_dir")) r.out_dir = get_as<std::string>(cfg, "out_dir");
  if (cfg.contains("regret_stride")) s.regret_stride = get_count(cfg, "regret_stride");
  if (cfg.contains("rho")) r.rho = get_as<double>(cfg, "rho");
  if (cfg.contains("confidence_every_round"))
    s.trial.confidence_every_round = get_as<bool>(cfg, "confidence_every_round");
  if (cfg.contains("elliptic_every_round"))
    s.trial.elliptic_every_round = get_as<bool>(cfg, "elliptic_every_round");
  if (cfg.contains("dense_sandwich_limit"))
    s.trial.dense_sandwich_limit = get_count(cfg, "dense_sandwich_limit");
  if (cfg.contains("log")) r.log = get_as<std::string>(cfg, "log");
  if (cfg.contains("train_n")) r.train_n = get_count(cfg, "train_n");
  if (cfg.contains("replay_noise_std")) r.replay_noise_std = get_as<double>(cfg, "replay_noise_std");
}

fs::path default_out_dir() {
  if (const char* env = std::getenv("HYBANDIT_OUT_DIR"); env != nullptr && *env != '\0')
    return env;
  return "hybandit_out";
}

Resolved resolve(const Options& o, bool require_source) {
  std::optional<json> cfg;
  if (!o.config.empty()) cfg = load_config(o.config);
  if (require_source && !cfg && o.setting.empty())
    throw ConfigError("one of --config or --setting is required");

  Resolved r;
  std::string setting = "custom";
  if (cfg && cfg->contains("setting")) {
    const json& v = cfg->at("setting");
    setting = v.is_number_integer() ? std::to_string(v.get<long long>()) : get_as<std::string>(*cfg, "setting");
  }
  if (!o.setting.empty()) setting = o.setting;
  r.setting_name = normalize_setting(setting);
  r.spec.threads = std::max(1u, std::thread::hardware_concurrency());
  apply_preset(r.setting_name, r.spec);
  if (cfg) apply_config(*cfg, r);

  ExperimentSpec& s = r.spec;
  if (!o.algos.empty()) s.algos = parse_algos(split_list(o.algos));
  if (!o.k_grid.empty()) s.k_grid = parse_k_grid(split_list(o.k_grid));
  if (o.scale) s.scale = *o.scale;
  if (o.seed) s.base_seed = *o.seed;
  if (o.threads) s.threads = *o.threads;
  if (o.n_envs) s.n_envs = *o.n_envs;
  if (o.n_trials) s.n_trials = *o.n_trials;
  if (o.diagnostics_every) s.diagnostics_every = *o.diagnostics_every;
  if (o.regret_stride) s.regret_stride = *o.regret_stride;
  if (o.rho) r.rho = *o.rho;
  if (!o.out_dir.empty()) r.out_dir = o.out_dir;
  if (r.out_dir.empty()) r.out_dir = default_out_dir();
  if (!o.log.empty()) r.log = o.log;
  if (o.train_n) r.train_n = *o.train_n;
  if (o.noise_std) r.replay_noise_std = *o.noise_std;

  if (s.n_envs == 0 || s.n_trials == 0) throw ConfigError("n_envs and n_trials must be positive");
  if (s.threads == 0) throw ConfigError("threads must be positive");
  if (!(s.noise_std >= 0.0)) throw ConfigError("noise_std must be nonnegative");
  if (!(s.S > 0.0)) throw ConfigError("S must be positive");
  if (r.rho && !(*r.rho > 0.0 && *r.rho <= 1.0)) throw ConfigError("rho must lie in (0, 1]");
  if (!(r.replay_noise_std >= 0.0)) throw ConfigError("replay noise_std must be nonnegative");
  return r;
}

/// Validates every shape and policy config up front so that bad values
/// surface as configuration errors before any work starts.
std::vector<Shape> check_spec(const ExperimentSpec& spec) {
  try {
    const auto shapes = resolve_shapes(spec);
    for (const Shape& sh : shapes) {
      SyntheticEnvConfig cfg{sh.dims, sh.T, spec.noise_std, spec.S, 0, 1};
      cfg.validate();
      for (Algo a : spec.algos)
        make_policy_config(a, sh.dims, spec.S, sh.T, spec.delta, spec.overrides);
    }
    return shapes;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

json spec_json(const Resolved& r, const std::vector<Shape>& shapes) {
  const ExperimentSpec& s = r.spec;
  json j;
  j["setting"] = r.setting_name;
  json algos = json::array();
  for (Algo a : s.algos) algos.push_back(std::string(to_string(a)));
  j["algos"] = algos;
  j["n_envs"] = scaled_count(s.n_envs, s.scale);
  j["n_trials"] = scaled_count(s.n_trials, s.scale);
  json sh = json::array();
  for (const Shape& x : shapes)
    sh.push_back({{"d1", x.dims.d1}, {"d2", x.dims.d2}, {"K", x.dims.K}, {"T", x.T}});
  j["shapes"] = sh;
  j["seed"] = s.base_seed;
  j["noise_std"] = s.noise_std;
  j["S"] = s.S;
  j["delta"] = s.delta;
  j["scale"] = s.scale;
  j["diagnostics_every"] = s.diagnostics_every;
  j["regret_stride"] = s.regret_stride;
  if (s.overrides.lambda) j["lambda"] = *s.overrides.lambda;
  if (s.overrides.gamma) j["gamma"] = *s.overrides.gamma;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

ProgressFn progress_printer(bool quiet) {
  if (quiet) return {};
  return [](std::size_t done, std::size_t total) {
    std::fprintf(stderr, "\r[%zu/%zu] trials", done, total);
    if (done == total) std::fputc('\n', stderr);
    std::fflush(stderr);
  };
}

// ---------------------------------------------------------------------------
// Commands

int cmd_gen_env(const Options& o) {
  Resolved r = resolve(o, true);
  const auto shapes = check_spec(r.spec);
  const Shape& shape = shapes.front();
  SyntheticEnvConfig cfg;
  cfg.dims = shape.dims;
  cfg.T = shape.T;
  cfg.noise_std = r.spec.noise_std;
  cfg.S = r.spec.S;
  cfg.n_trials = scaled_count(r.spec.n_trials, r.spec.scale);
  cfg.env_seed = derive_seed(derive_seed(r.spec.base_seed, shape.dims.K, Purpose::Environment),
                             o.env_id, Purpose::Environment);
  const SyntheticEnvironment env(cfg);
  const fs::path out = o.out.empty() ? r.out_dir / "environment.json" : fs::path(o.out);
  write_text(out, environment_dump(env));
  std::printf("wrote %s (d1=%zu d2=%zu K=%zu T=%zu)\n", out.string().c_str(), cfg.dims.d1,
              cfg.dims.d2, cfg.dims.K, cfg.T);
  return kExitOk;
}

int cmd_run(const Options& o) {
  Resolved r = resolve(o, true);
  if (r.spec.setting == Setting::Replay) throw ConfigError("use the replay command for replay runs");
  const auto shapes = check_spec(r.spec);
  fs::create_directories(r.out_dir);
  write_text(r.out_dir / "run.json", spec_json(r, shapes).dump(2) + "\n");
  const ExperimentResult res = run_experiment(r.spec, r.out_dir, progress_printer(o.quiet));
  for (const auto& row : res.summary)
    std::printf("%-10s K=%-4zu d1=%-3zu d2=%-3zu T=%-6zu mean=%.4f std=%.4f (n=%zu)\n",
                std::string(to_string(row.algo)).c_str(), row.dims.K, row.dims.d1, row.dims.d2,
                row.T, row.mean_final_regret, row.std_final_regret, row.n_trials);
  std::printf("results in %s\n", r.out_dir.string().c_str());
  return kExitOk;
}

json theory_json(const TheoryConstants& c) {
  return {{"rho", c.rho},
          {"T_m", c.T_m},
          {"T_o", c.T_o},
          {"horizon_exceeds_T_o", c.horizon_exceeds_T_o},
          {"gamma_LinUCB", c.gamma_linucb},
          {"gamma_HyLinUCB", c.gamma_hylinucb},
          {"gamma_DisLinUCB", c.gamma_dislinucb}};
}

int cmd_diagnose(const Options& o) {
  Resolved r = resolve(o, true);
  ExperimentSpec& s = r.spec;
  if (s.setting == Setting::Replay) throw ConfigError("diagnose needs a synthetic setting");
  if (s.diagnostics_every == 0) s.diagnostics_every = 100;
  s.trial.confidence_every_round = true;
  s.trial.elliptic_every_round = true;
  const auto shapes = check_spec(s);
  fs::create_directories(r.out_dir);
  write_text(r.out_dir / "run.json", spec_json(r, shapes).dump(2) + "\n");

  json theory = json::array();
  std::vector<double> rhos;
  for (const Shape& sh : shapes) {
    const double rho = r.rho.value_or(unit_ball_rho(sh.dims));
    rhos.push_back(rho);
    TheoryConstants c;
    try {
      c = theory_constants(rho, sh.dims, sh.T, s.delta, s.S);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    json j = {{"d1", sh.dims.d1}, {"d2", sh.dims.d2}, {"K", sh.dims.K}, {"T", sh.T},
              {"delta", s.delta}};
    j.update(theory_json(c));
    theory.push_back(j);
    std::printf("shape d1=%zu d2=%zu K=%zu T=%zu: rho=%.6g T_m=%.6g T_o=%.6g (T >= T_o: %s)\n",
                sh.dims.d1, sh.dims.d2, sh.dims.K, sh.T, c.rho, c.T_m, c.T_o,
                c.horizon_exceeds_T_o ? "yes" : "no");
    std::printf("  gamma: LinUCB=%.6g HyLinUCB=%.6g DisLinUCB=%.6g\n", c.gamma_linucb,
                c.gamma_hylinucb, c.gamma_dislinucb);
  }

  const ExperimentResult res = run_experiment(s, r.out_dir, progress_printer(o.quiet));

  struct Tally {
    std::size_t trials = 0;
    RunningStats slope_V;
    std::size_t V_ok = 0, W_ok = 0, B_ok = 0, assumption_skipped = 0;
    std::size_t conf_checked = 0, conf_bad_trials = 0;
    double conf_max_ratio = 0.0;
    std::size_t sandwich_samples = 0, sandwich_pass = 0;
    std::size_t elliptic_checked = 0, elliptic_bad_trials = 0;
  };
  std::map<std::pair<std::size_t, int>, Tally> tallies;
  std::vector<std::pair<std::size_t, int>> order;
  for (const auto& tr : res.trials) {
    std::size_t shape_idx = 0;
    while (shape_idx + 1 < shapes.size() && !(shapes[shape_idx].dims == tr.dims)) ++shape_idx;
    const auto key = std::make_pair(shape_idx, static_cast<int>(tr.regret.algo));
    if (!tallies.count(key)) order.push_back(key);
    Tally& t = tallies[key];
    ++t.trials;
    const auto& d = tr.diagnostics;
    try {
      const AssumptionReport a = validate_assumption(d, rhos[shape_idx], tr.dims, s.delta, o.burn_in);
      t.slope_V.add(a.slope_V);
      t.V_ok += a.V_growth_ok;
      t.W_ok += a.W_growth_ok;
      t.B_ok += a.B_bound_ok;
    } catch (const std::invalid_argument&) {
      ++t.assumption_skipped;
    }
    if (d.confidence_checked) {
      ++t.conf_checked;
      t.conf_bad_trials += d.confidence_violations > 0;
      t.conf_max_ratio = std::max(t.conf_max_ratio, d.confidence_max_ratio);
    }
    for (const auto& smp : d.samples) {
      ++t.sandwich_samples;
      t.sandwich_pass += smp.sandwich_min >= 0.5 && smp.sandwich_max <= 2.0;
    }
    if (d.elliptic_checked) {
      ++t.elliptic_checked;
      t.elliptic_bad_trials += d.elliptic_violations > 0;
    }
  }

  json report = json::array();
  for (const auto& key : order) {
    const Tally& t = tallies.at(key);
    const Shape& sh = shapes[key.first];
    const std::string algo(to_string(static_cast<Algo>(key.second)));
    std::printf("%s K=%zu (%zu trials)\n", algo.c_str(), sh.dims.K, t.trials);
    const std::size_t fitted = t.trials - t.assumption_skipped;
    std::printf("  lambda_min(V) slope: mean %.6g (rho=%.6g); growth ok %zu/%zu, W growth ok %zu/%zu, "
                "B bound ok %zu/%zu\n",
                t.slope_V.mean(), rhos[key.first], t.V_ok, fitted, t.W_ok, fitted, t.B_ok, fitted);
    if (t.conf_checked > 0)
      std::printf("  confidence: %zu/%zu trials with a violation, max residual/gamma %.6g\n",
                  t.conf_bad_trials, t.conf_checked, t.conf_max_ratio);
    else
      std::printf("  confidence: skipped (no estimator)\n");
    std::printf("  sandwich in [0.5, 2]: %zu/%zu samples\n", t.sandwich_pass, t.sandwich_samples);
    if (t.elliptic_checked > 0)
      std::printf("  elliptic potential: %zu/%zu trials with a violation\n", t.elliptic_bad_trials,
                  t.elliptic_checked);
    report.push_back({{"algo", algo},
                      {"K", sh.dims.K},
                      {"trials", t.trials},
                      {"mean_slope_V", t.slope_V.mean()},
                      {"V_growth_ok", t.V_ok},
                      {"W_growth_ok", t.W_ok},
                      {"B_bound_ok", t.B_ok},
                      {"assumption_fitted", fitted},
                      {"confidence_checked", t.conf_checked},
                      {"confidence_violating_trials", t.conf_bad_trials},
                      {"confidence_max_ratio", t.conf_max_ratio},
                      {"sandwich_samples", t.sandwich_samples},
                      {"sandwich_pass", t.sandwich_pass},
                      {"elliptic_checked", t.elliptic_checked},
                      {"elliptic_violating_trials", t.elliptic_bad_trials}});
  }
  write_text(r.out_dir / "theory.json",
             json{{"constants", theory}, {"report", report}}.dump(2) + "\n");
  std::printf("results in %s\n", r.out_dir.string().c_str());
  return kExitOk;
}

int cmd_replay(const Options& o) {
  Resolved r = resolve(o, false);
  if (r.log.empty()) throw ConfigError("replay needs --log (or a 'log' config key)");
  if (r.train_n == 0) throw ConfigError("replay needs a positive --train-n");
  r.setting_name = "replay";
  r.spec.setting = Setting::Replay;

  const auto log = parse_replay_log(r.log);
  if (log.size() <= r.train_n)
    throw ConfigError("train_n (" + std::to_string(r.train_n) + ") must be smaller than the log (" +
                      std::to_string(log.size()) + " records)");
  const ReplayEnvironment env = semi_synthetic_environment(log, r.train_n, r.replay_noise_std);
  r.spec.dims = env.dims();
  r.spec.T = env.horizon();
  r.spec.S = env.params().S;
  for (Algo a : r.spec.algos) {
    try {
      make_policy_config(a, env.dims(), r.spec.S, env.horizon(), r.spec.delta, r.spec.overrides);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  std::printf("fitted hybrid model on %zu records: d1=%zu d2=%zu K=%zu, mse %.6g, "
              "feature divisors x=%.6g z=%.6g\n",
              r.train_n, env.dims().d1, env.dims().d2, env.dims().K, env.model().fit_residual,
              env.scaling().x_divisor, env.scaling().z_divisor);

  fs::create_directories(r.out_dir);
  json j = spec_json(r, {{env.dims(), env.horizon()}});
  j["log"] = r.log;
  j["train_n"] = r.train_n;
  j["replay_noise_std"] = r.replay_noise_std;
  j["fit_residual"] = env.model().fit_residual;
  j["x_divisor"] = env.scaling().x_divisor;
  j["z_divisor"] = env.scaling().z_divisor;
  write_text(r.out_dir / "run.json", j.dump(2) + "\n");

  ExperimentSpec spec = r.spec;
  spec.scale = 1.0;
  spec.n_trials = scaled_count(r.spec.n_trials, r.spec.scale);
  const ExperimentResult res = run_on_environment(spec, env, r.out_dir, progress_printer(o.quiet));
  for (const auto& row : res.summary)
    std::printf("%-10s T=%zu mean=%.4f std=%.4f (n=%zu)\n",
                std::string(to_string(row.algo)).c_str(), row.T, row.mean_final_regret,
                row.std_final_regret, row.n_trials);
  std::printf("results in %s\n", r.out_dir.string().c_str());
  return kExitOk;
}

/// Rebuilds summary.csv from regret.csv and run.json of a finished run.
int cmd_summarize(const Options& o) {
  const fs::path dir = o.run_dir.empty() ? default_out_dir() : fs::path(o.run_dir);
  const json run = load_config((dir / "run.json").string());
  std::vector<Shape> shapes;
  for (const auto& s : run.at("shapes"))
    shapes.push_back({{s.at("d1").get<std::size_t>(), s.at("d2").get<std::size_t>(),
                       s.at("K").get<std::size_t>()},
                      s.at("T").get<std::size_t>()});
  const std::size_t per_shape = run.at("setting") == "replay"
                                    ? run.at("algos").size() * run.at("n_trials").get<std::size_t>()
                                    : run.at("n_envs").get<std::size_t>() * run.at("algos").size() *
                                          run.at("n_trials").get<std::size_t>();

  std::ifstream in(dir / "regret.csv");
  if (!in) throw std::runtime_error("cannot read " + (dir / "regret.csv").string());
  std::string line;
  std::getline(in, line);
  if (line != "algo,env_id,trial_id,round,cum_regret,chosen_arm")
    throw std::runtime_error("unexpected regret.csv header");

  std::vector<TrialResult> trials;
  std::string prev_key;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++n;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw std::runtime_error("regret.csv line " + std::to_string(n + 1) + ": expected 6 fields");
    const std::size_t round = std::stoull(f[3]);
    const std::string key = f[0] + "," + f[1] + "," + f[2];
    if (trials.empty() || key != prev_key || round <= trials.back().T) {
      const std::size_t idx = trials.size() / std::max<std::size_t>(1, per_shape);
      if (idx >= shapes.size()) throw std::runtime_error("regret.csv has more trials than run.json describes");
      TrialResult t;
      t.dims = shapes[idx].dims;
      t.regret.algo = parse_algo(f[0]);
      t.regret.env_id = std::stoull(f[1]);
      t.regret.trial_id = std::stoull(f[2]);
      trials.push_back(std::move(t));
      prev_key = key;
    }
    TrialResult& t = trials.back();
    t.T = round;
    t.regret.cum_regret.assign(1, std::stod(f[4]));
  }
  const auto rows = summarize(trials);
  const fs::path out = o.out.empty() ? dir / "summary.csv" : fs::path(o.out);
  write_summary_csv(out, rows);
  for (const auto& row : rows)
    std::printf("%-10s K=%-4zu T=%-6zu mean=%.4f std=%.4f (n=%zu)\n",
                std::string(to_string(row.algo)).c_str(), row.dims.K, row.T,
                row.mean_final_regret, row.std_final_regret, row.n_trials);
  std::printf("wrote %s\n", out.string().c_str());
  return kExitOk;
}

int cmd_gen_log(const Options& o) {
  if (o.out.empty()) throw ConfigError("gen-log needs --out");
  SyntheticLogConfig cfg = o.gen_log;
  if (o.seed) cfg.seed = *o.seed;
  if (cfg.K == 0 || cfg.user_dim == 0 || cfg.arm_dim == 0)
    throw ConfigError("K and feature dimensions must be positive");
  const SyntheticLog log = generate_replay_log(cfg);
  write_replay_log(o.out, log.records);
  std::printf("wrote %zu records to %s\n", log.records.size(), o.out.c_str());
  return kExitOk;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON config file");
  cmd->add_option("--setting", o.setting, "Preset: 1, 2, 3, custom or diversity");
  cmd->add_option("--algos", o.algos, "Comma-separated algorithms (linucb,dislinucb,hylinucb,oracle)");
  cmd->add_option("--k-grid", o.k_grid, "Comma-separated K values for setting 3");
  cmd->add_option("--scale", o.scale, "Scale factor for T and trial counts");
  cmd->add_option("--seed", o.seed, "Base seed");
  cmd->add_option("--threads", o.threads, "Worker threads");
  cmd->add_option("--out-dir", o.out_dir, "Output directory (default $HYBANDIT_OUT_DIR)");
  cmd->add_option("--n-envs", o.n_envs, "Environments per shape");
  cmd->add_option("--n-trials", o.n_trials, "Trials per environment and algorithm");
  cmd->add_option("--diagnostics-every", o.diagnostics_every, "Diagnostics stride in rounds");
  cmd->add_option("--regret-stride", o.regret_stride, "Write every n-th round to regret CSVs");
  cmd->add_flag("--quiet", o.quiet, "No progress output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid-reward linear contextual bandit simulator"};
  app.require_subcommand(1);
  Options o;

  auto* gen_env = app.add_subcommand("gen-env", "Write a synthetic environment dump");
  add_common(gen_env, o);
  gen_env->add_option("--out", o.out, "Output file (default <out-dir>/environment.json)");
  gen_env->add_option("--env-id", o.env_id, "Environment index within the shape");

  auto* run = app.add_subcommand("run", "Run an experiment and write regret CSVs");
  add_common(run, o);

  auto* diagnose = app.add_subcommand("diagnose", "Run with diagnostics and report theory checks");
  add_common(diagnose, o);
  diagnose->add_option("--rho", o.rho, "Diversity constant (default 1/(max(d1,d2)+2))");
  diagnose->add_option("--burn-in", o.burn_in, "Ignore samples before this round in slope fits");

  auto* replay = app.add_subcommand("replay", "Semi-synthetic run from a replay log");
  add_common(replay, o);
  replay->add_option("--log", o.log, "Line-delimited JSON replay log");
  replay->add_option("--train-n", o.train_n, "Records used for parameter learning");
  replay->add_option("--noise-std", o.noise_std, "Reward noise standard deviation (default 0.01)");

  auto* summ = app.add_subcommand("summarize", "Rebuild summary.csv from a run directory");
  summ->add_option("--run-dir", o.run_dir, "Run directory (default $HYBANDIT_OUT_DIR)");
  summ->add_option("--out", o.out, "Output file (default <run-dir>/summary.csv)");

  auto* gen_log = app.add_subcommand("gen-log", "Write a synthetic replay log");
  gen_log->add_option("--out", o.out, "Output file")->required();
  gen_log->add_option("--records", o.gen_log.n_records, "Number of records");
  gen_log->add_option("--K", o.gen_log.K, "Articles per record");
  gen_log->add_option("--user-dim", o.gen_log.user_dim, "User feature dimension");
  gen_log->add_option("--arm-dim", o.gen_log.arm_dim, "Article feature dimension");
  gen_log->add_option("--seed", o.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen_env) return cmd_gen_env(o);
    if (*run) return cmd_run(o);
    if (*diagnose) return cmd_diagnose(o);
    if (*replay) return cmd_replay(o);
    if (*summ) return cmd_summarize(o);
    if (*gen_log) return cmd_gen_log(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    std::fprintf(stderr, "%s", app.help().c_str());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
