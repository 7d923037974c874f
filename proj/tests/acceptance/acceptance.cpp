// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "oracles.hpp"

#include "hybandit/harness.hpp"

using namespace hybandit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// AC1: block LinUCB and HyLinUCB against a dense (d1 + d2 K) reference.
Outcome oracle_equivalence() {
  oracle::Gen g(101);
  std::size_t arm_mismatch = 0;
  double worst_phi = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const Dims d{1 + g.index(4), 1 + g.index(4), 1 + g.index(5)};
    const SyntheticEnvironment env({d, 1000, 0.1, 1.0, 1000u + inst, 1});
    const std::uint64_t seed = 5000u + inst;
    for (Algo a : {Algo::LinUCB, Algo::HyLinUCB}) {
      const PolicyConfig cfg = make_policy_config(a, d, 1.0, env.horizon(), 0.1);
      SharedPolicy pol(cfg);
      oracle::DenseLinUCB ref(d, cfg.lambda, cfg.gamma);
      for (std::size_t t = 0; t < env.horizon(); ++t) {
        const ContextRound round = env.context(t);
        const std::size_t arm = pol.select_arm(round);
        if (arm != ref.select(round)) {
          ++arm_mismatch;
          break;
        }
        CounterRng noise(seed, 0, t, Purpose::Noise);
        const ArmFeatures& f = round.arms[arm];
        const double y = draw_reward(env.params(), arm, f.x, f.z, env.noise_std(), noise);
        pol.update(arm, f, y);
        ref.update(arm, f, y);
        if ((t + 1) % 100 == 0) {
          const Eigen::VectorXd diff = oracle::to_eigen(pol.phi_hat()) - ref.phi();
          worst_phi = std::max(worst_phi, diff.cwiseAbs().maxCoeff());
        }
      }
    }
  }
  return {arm_mismatch == 0 && worst_phi <= 1e-8,
          fmt("40 runs, %zu arm-sequence mismatches, max |phi - phi_dense| %.3g", arm_mismatch,
              worst_phi)};
}

// AC2: LinUCB confidence ellipsoid coverage with N(0, 1) noise.
Outcome confidence_coverage() {
  const Dims d{3, 3, 5};
  std::size_t bad = 0, n = 0;
  double worst = 0.0;
  TrialOptions opts;
  opts.confidence_every_round = true;
  for (std::size_t k = 0; k < 200; ++k, ++n) {
    const SyntheticEnvironment env({d, 1000, 1.0, 1.0, 2000u + k, 1});
    const PolicyConfig cfg = make_policy_config(Algo::LinUCB, d, 1.0, env.horizon(), 0.1);
    const TrialResult r = run_trial(cfg, env, 0, k, derive_seed(77, k, Purpose::Trial), opts);
    if (r.diagnostics.confidence_violations > 0) ++bad;
    worst = std::max(worst, r.diagnostics.confidence_max_ratio);
  }
  const double frac = static_cast<double>(bad) / static_cast<double>(n);
  return {frac <= 0.1, fmt("%zu/%zu trials with a violation (fraction %.3f), max residual/gamma %.3f",
                           bad, n, frac, worst)};
}

// AC3: elliptic potential inequality at every round.
Outcome elliptic_potential() {
  std::size_t checked = 0, violations = 0;
  double worst = INFINITY;
  TrialOptions opts;
  opts.elliptic_every_round = true;
  for (std::size_t k = 0; k < 10; ++k) {
    const SyntheticEnvironment env({{4, 3, 5}, 2000, 0.1, 1.0, 3000u + k, 1});
    for (Algo a : {Algo::LinUCB, Algo::DisLinUCB, Algo::HyLinUCB}) {
      const PolicyConfig cfg = make_policy_config(a, env.dims(), 1.0, env.horizon(), 0.1);
      const TrialResult r = run_trial(cfg, env, 0, k, 900 + k, opts);
      if (!r.diagnostics.elliptic_checked) return {false, "elliptic check was not run"};
      ++checked;
      violations += r.diagnostics.elliptic_violations;
      worst = std::min(worst, r.diagnostics.elliptic_worst_slack);
    }
  }
  oracle::Gen g(103);
  for (std::size_t d : {1u, 2u, 6u, 12u})
    for (double lam : {1.0, 3.0}) {
      std::vector<Vector> xs;
      for (int s = 0; s < 3000; ++s) xs.push_back(s % 3 == 0 ? g.unit_sphere(d) : g.unit_ball(d));
      const EllipticReport r = check_elliptic_potential(xs, lam);
      ++checked;
      violations += r.violations;
      worst = std::min(worst, r.worst_slack);
    }
  return {violations == 0,
          fmt("%zu sequences, %zu violating rounds, min slack %.4g", checked, violations, worst)};
}

// AC4: dilation eigenvalues are the signed singular values.
Outcome dilation() {
  oracle::Gen g(104);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t m = 1 + g.index(8), n = 1 + g.index(6);
    const Matrix b = g.gaussian_matrix(m, n);
    const Vector eig = sym_eigenvalues(hermitian_dilation(b));
    const Vector sv = oracle::singular_values(b);
    Vector expect(m + n, 0.0);
    for (std::size_t i = 0; i < sv.size(); ++i) {
      expect[i] = sv[i];
      expect[m + n - 1 - i] = -sv[i];
    }
    std::sort(expect.begin(), expect.end());
    if (eig.size() != expect.size()) return {false, "dilation has the wrong size"};
    for (std::size_t i = 0; i < eig.size(); ++i) worst = std::max(worst, std::abs(eig[i] - expect[i]));
  }
  return {worst <= 1e-8, fmt("100 matrices, max eigenvalue error %.3g", worst)};
}

// AC5: sandwich spectrum on the unit-ball run.
Outcome sandwich() {
  ExperimentSpec spec;
  spec.dims = {5, 5, 5};
  spec.T = 20000;
  spec.n_envs = 1;
  spec.n_trials = 20;
  spec.diagnostics_every = 500;
  spec.base_seed = 105;
  const ExperimentResult r = run_experiment(spec);
  bool ok = true;
  std::string detail;
  for (Algo a : spec.algos) {
    std::size_t good = 0, total = 0;
    double lo = INFINITY, hi = 0.0;
    for (const auto& t : r.trials) {
      if (t.regret.algo != a) continue;
      ++total;
      bool trial_ok = true;
      for (const auto& s : t.diagnostics.samples) {
        if (s.round < 5000) continue;
        lo = std::min(lo, s.sandwich_min);
        hi = std::max(hi, s.sandwich_max);
        trial_ok = trial_ok && s.sandwich_min >= 0.5 && s.sandwich_max <= 2.0;
      }
      if (trial_ok) ++good;
    }
    ok = ok && total == 20 && good >= 19;
    detail += fmt("%s %zu/%zu trials [%.3f, %.3f]; ", std::string(to_string(a)).c_str(), good,
                  total, lo, hi);
  }
  return {ok, detail};
}

// AC6: growth of lambda_min(V_t) and the sigma_max(B) / sqrt(tau) bound.
Outcome assumption_diagnostics() {
  ExperimentSpec spec;
  spec.dims = {10, 10, 25};
  spec.T = 5000;
  spec.n_envs = 1;
  spec.n_trials = 20;
  spec.diagnostics_every = 100;
  spec.base_seed = 106;
  spec.algos = {Algo::HyLinUCB, Algo::LinUCB};
  const ExperimentResult r = run_experiment(spec);
  const double rho = unit_ball_rho(spec.dims);
  bool ok = true;
  double lo = INFINITY, hi = -INFINITY, worst_b = 0.0, bound = 0.0;
  for (const auto& t : r.trials) {
    const AssumptionReport a = validate_assumption(t.diagnostics, rho, spec.dims, spec.delta);
    lo = std::min(lo, a.slope_V);
    hi = std::max(hi, a.slope_V);
    worst_b = std::max(worst_b, a.max_sigma_over_sqrt_tau);
    bound = a.sigma_bound;
    ok = ok && a.slope_V >= 0.7 * rho && a.slope_V <= 1.3 * rho && a.B_bound_ok;
  }
  return {ok, fmt("%zu trials, slope range [%.4f, %.4f] vs [%.4f, %.4f], max sigma/sqrt(tau) %.3f <= %.3f",
                  r.trials.size(), lo, hi, 0.7 * rho, 1.3 * rho, worst_b, bound)};
}

double mean_regret_at(const ExperimentResult& r, Algo a, std::size_t round) {
  RunningStats s;
  for (const auto& t : r.trials)
    if (t.regret.algo == a) s.add(t.regret.cum_regret.at(round - 1));
  return s.mean();
}

// AC7: Reg(20000) / Reg(10000) <= 1.7 for each algorithm.
Outcome sublinearity() {
  ExperimentSpec spec;
  spec.dims = {5, 5, 10};
  spec.T = 20000;
  spec.n_envs = 2;
  spec.n_trials = 5;
  spec.base_seed = 107;
  const ExperimentResult r = run_experiment(spec);
  bool ok = true;
  std::string detail;
  for (Algo a : spec.algos) {
    const double ratio = mean_regret_at(r, a, 20000) / mean_regret_at(r, a, 10000);
    ok = ok && ratio <= 1.7;
    detail += fmt("%s %.3f; ", std::string(to_string(a)).c_str(), ratio);
  }
  return {ok, detail};
}

// Counts environments where mean final regret follows first <= second <= third.
std::size_t ordered_envs(const ExperimentResult& r, std::size_t n_envs, Algo first, Algo second,
                         Algo third, std::size_t& first_second) {
  std::size_t count = 0;
  first_second = 0;
  for (std::size_t e = 0; e < n_envs; ++e) {
    auto mean = [&](Algo a) {
      RunningStats s;
      for (const auto& t : r.trials)
        if (t.regret.env_id == e && t.regret.algo == a) s.add(t.regret.final_regret());
      return s.mean();
    };
    const double a = mean(first), b = mean(second), c = mean(third);
    if (a <= b) ++first_second;
    if (a <= b && b <= c) ++count;
  }
  return count;
}

// AC8: regret orderings of the two setting analogues.
Outcome setting_ordering() {
  ExperimentSpec spec;
  spec.T = 20000;
  spec.n_envs = 5;
  spec.n_trials = 3;
  spec.base_seed = 108;
  spec.dims = {20, 2, 10};
  const ExperimentResult s1 = run_experiment(spec);
  spec.dims = {2, 20, 10};
  const ExperimentResult s2 = run_experiment(spec);
  std::size_t s1_pair = 0, s2_pair = 0;
  const std::size_t s1_ok = ordered_envs(s1, 5, Algo::HyLinUCB, Algo::LinUCB, Algo::DisLinUCB, s1_pair);
  const std::size_t s2_ok = ordered_envs(s2, 5, Algo::DisLinUCB, Algo::HyLinUCB, Algo::LinUCB, s2_pair);
  auto means = [](const ExperimentResult& r) {
    std::string s;
    for (const auto& row : summarize(r.trials))
      s += fmt("%s=%.1f ", std::string(to_string(row.algo)).c_str(), row.mean_final_regret);
    return s;
  };
  return {s1_ok >= 4 && s2_ok >= 4,
          fmt("setting-1 analogue Hy<=Lin<=Dis in %zu/5 envs (Hy<=Lin %zu/5; %s); "
              "setting-2 analogue Dis<=Hy<=Lin in %zu/5 envs (%s)",
              s1_ok, s1_pair, means(s1).c_str(), s2_ok, means(s2).c_str())};
}

// AC9: least squares recovery on a noiseless replay log.
Outcome parameter_recovery() {
  const SyntheticLog log = generate_replay_log({3, 3, 5, 5000, 109, 0.5});
  std::vector<Observation> data;
  std::vector<std::size_t> displays(5, 0);
  for (const auto& r : log.records) {
    ArmFeatures f = build_features(r.user, r.arms[r.displayed]);
    const double y = mean_reward(log.params, r.displayed, f.x, f.z);
    data.push_back({r.displayed, std::move(f.x), std::move(f.z), y});
    ++displays[r.displayed];
  }
  const LearnedModel m = hybrid_least_squares(data, 5, {1e-8, false});
  double theta_err = 0.0;
  for (std::size_t k = 0; k < log.params.theta.size(); ++k)
    theta_err = std::max(theta_err, std::abs(m.params.theta[k] - log.params.theta[k]));
  double beta_err = 0.0;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    if (displays[i] < 50) continue;
    ++checked;
    for (std::size_t k = 0; k < 3; ++k)
      beta_err = std::max(beta_err, std::abs(m.params.betas[i][k] - log.params.betas[i][k]));
  }
  return {theta_err <= 1e-6 && beta_err <= 1e-5,
          fmt("theta error %.3g, beta error %.3g over %zu arms", theta_err, beta_err, checked)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// AC10: repeated CLI runs give byte-identical CSVs.
Outcome determinism() {
#ifdef HYBANDIT_CLI_PATH
  const fs::path root = fs::temp_directory_path() / "hybandit_acceptance";
  fs::remove_all(root);
  const std::string base = std::string("'") + HYBANDIT_CLI_PATH +
                           "' run --setting 3 --k-grid 10,25 --scale 0.02 --seed 110 --threads 2 "
                           "--diagnostics-every 50 --quiet --out-dir ";
  for (const char* rep : {"a", "b"}) {
    const std::string cmd = base + "'" + (root / rep).string() + "' > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "CLI run failed"};
  }
  std::size_t files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    if (e.path().extension() != ".csv") continue;
    ++files;
    if (slurp(e.path()) != slurp(root / "b" / e.path().filename())) ++differ;
  }
  return {files >= 4 && differ == 0, fmt("%zu CSV files compared, %zu differ", files, differ)};
#else
  return {false, "CLI not built"};
#endif
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"AC1 oracle equivalence", oracle_equivalence},
      {"AC2 confidence coverage", confidence_coverage},
      {"AC3 elliptic potential", elliptic_potential},
      {"AC4 hermitian dilation", dilation},
      {"AC5 sandwich spectrum", sandwich},
      {"AC6 assumption diagnostics", assumption_diagnostics},
      {"AC7 regret sublinearity", sublinearity},
      {"AC8 setting ordering", setting_ordering},
      {"AC9 parameter recovery", parameter_recovery},
      {"AC10 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
