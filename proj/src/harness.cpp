#include "hybandit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace hybandit {

// ---------------------------------------------------------------------------
// Theory constants

double unit_ball_rho(const Dims& dims) {
  return 1.0 / (static_cast<double>(std::max(dims.d1, dims.d2)) + 2.0);
}

TheoryConstants theory_constants(double rho, const Dims& dims, std::size_t T,
                                 double delta, double S) {
  if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in (0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  validate(dims);

  const double d = static_cast<double>(dims.d1 + dims.d2);
  const double K = static_cast<double>(dims.K);
  const double Td = static_cast<double>(T);

  TheoryConstants c;
  c.rho = rho;
  c.T_m = (16.0 / (rho * rho) + 8.0 / (3.0 * rho)) * std::log(2.0 * d * K * Td / delta);
  c.T_o = std::max(128.0 / (rho * rho), 4.0 * c.T_m) * K * K * std::log(d * K / delta);
  c.horizon_exceeds_T_o = Td >= c.T_o;
  c.gamma_linucb = exploration_coefficient(Algo::LinUCB, S, dims, Td, delta,
                                           default_lambda(Algo::LinUCB, dims.K));
  c.gamma_hylinucb = exploration_coefficient(Algo::HyLinUCB, S, dims, Td, delta,
                                             default_lambda(Algo::HyLinUCB, dims.K));
  c.gamma_dislinucb = exploration_coefficient(Algo::DisLinUCB, S, dims, Td, delta,
                                              default_lambda(Algo::DisLinUCB, dims.K));
  return c;
}

// ---------------------------------------------------------------------------
// Elliptic potential

EllipticPotential::EllipticPotential(std::size_t dim, double lambda)
    : v_(dim, lambda), lambda_(lambda) {
  if (!(lambda >= 1.0))
    throw std::invalid_argument("elliptic potential bound requires lambda >= 1");
}

double EllipticPotential::bound() const {
  const double d = static_cast<double>(v_.dim());
  return 2.0 * d * std::log1p(static_cast<double>(t_) / (lambda_ * d));
}

void EllipticPotential::add(std::span<const double> x) {
  if (norm2(x) > 1.0 + 1e-12)
    throw std::invalid_argument("elliptic potential requires ||x|| <= 1");
  lhs_ += v_.quad_form_inv(x);
  v_.rank_one_update(x);
  ++t_;
  record();
}

void EllipticPotential::record() {
  const double slack = bound() - lhs_;
  worst_slack_ = std::min(worst_slack_, slack);
  if (slack < 0.0) ++violations_;
}

EllipticReport check_elliptic_potential(std::span<const Vector> xs, double lambda) {
  EllipticReport r;
  if (xs.empty()) return r;
  EllipticPotential ep(xs.front().size(), lambda);
  for (const auto& x : xs) {
    if (x.size() != xs.front().size())
      throw std::invalid_argument("elliptic potential: ragged vectors");
    ep.add(x);
  }
  r.violations = ep.violations();
  r.holds = r.violations == 0;
  r.worst_slack = ep.worst_slack();
  r.final_lhs = ep.lhs();
  r.final_bound = ep.bound();
  return r;
}

// ---------------------------------------------------------------------------
// Confidence and sandwich checks

std::optional<ConfidenceCheck> check_confidence(const Policy& policy,
                                                const HybridParams& params,
                                                double gamma) {
  const Dims dims = policy.config().dims;
  if (params.dims() != dims)
    throw std::invalid_argument("check_confidence: parameter dims mismatch");

  double residual = 0.0;
  if (const auto* shared = dynamic_cast<const SharedPolicy*>(&policy)) {
    Vector delta = shared->phi_hat();
    const FlatParams star = flatten(params);
    for (std::size_t k = 0; k < delta.size(); ++k) delta[k] -= star.phi[k];
    residual = std::sqrt(std::max(0.0, shared->design().quad_form(delta)));
  } else if (const auto* dis = dynamic_cast<const DisjointPolicy*>(&policy)) {
    for (std::size_t i = 0; i < dims.K; ++i) {
      const auto& m = dis->arm_model(i);
      Vector delta = m.phi;
      for (std::size_t k = 0; k < dims.d1; ++k) delta[k] -= params.theta[k];
      for (std::size_t k = 0; k < dims.d2; ++k) delta[dims.d1 + k] -= params.betas[i][k];
      const double q = dot(delta, matvec(m.design.entries(), delta));
      residual = std::max(residual, std::sqrt(std::max(0.0, q)));
    }
  } else {
    return std::nullopt;
  }
  return ConfidenceCheck{residual, gamma, residual <= gamma};
}

SandwichCheck check_sandwich(const BlockDesign& design, std::size_t dense_limit) {
  const auto [lo, hi] = design.dim() <= dense_limit ? sandwich_spectrum(design)
                                                    : sandwich_spectrum_reduced(design);
  return {lo, hi, lo >= 0.5 && hi <= 2.0};
}

// ---------------------------------------------------------------------------
// Trials

double DiagnosticsSample::min_lambda_min_W() const {
  if (lambda_min_W.empty()) return 0.0;
  return *std::min_element(lambda_min_W.begin(), lambda_min_W.end());
}

double DiagnosticsSample::max_sigma_over_sqrt_tau() const {
  double m = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i)
    if (tau[i] > 0)
      m = std::max(m, sigma_max_B[i] / std::sqrt(static_cast<double>(tau[i])));
  return m;
}

namespace {

DiagnosticsSample sample_diagnostics(std::size_t round, const BlockDesign& design,
                                     const Policy& policy, const HybridParams& params,
                                     const EllipticPotential* ep,
                                     const TrialOptions& opts) {
  DiagnosticsSample s;
  s.round = round;
  s.lambda_min_V = sym_eigenvalues(design.V().entries()).front();
  const std::size_t K = design.num_arms();
  s.lambda_min_W.resize(K);
  s.sigma_max_B.resize(K);
  s.tau = design.pull_counts();
  for (std::size_t i = 0; i < K; ++i) {
    s.lambda_min_W[i] = sym_eigenvalues(design.W(i).entries()).front();
    s.sigma_max_B[i] = s.tau[i] > 0 ? max_singular_value(design.B(i)) : 0.0;
  }
  const SandwichCheck sw = check_sandwich(design, opts.dense_sandwich_limit);
  s.sandwich_min = sw.min;
  s.sandwich_max = sw.max;
  if (const auto c = check_confidence(policy, params, policy.config().gamma)) {
    s.conf_residual = c->residual;
    s.conf_gamma = c->gamma;
  }
  if (ep != nullptr) {
    s.elliptic_lhs = ep->lhs();
    s.elliptic_bound = ep->bound();
  }
  return s;
}

}  // namespace

TrialResult run_trial(const PolicyConfig& config, const Environment& env,
                      std::size_t env_id, std::size_t trial_id,
                      std::uint64_t trial_seed, const TrialOptions& opts) {
  const Dims dims = env.dims();
  if (config.dims != dims)
    throw std::invalid_argument("run_trial: policy and environment dims disagree");
  const HybridParams& params = env.params();
  const std::size_t T = env.horizon();

  auto policy = make_policy(config, &params);
  const auto* shared = dynamic_cast<const SharedPolicy*>(policy.get());

  std::unique_ptr<BlockDesign> tracker;
  if (opts.diagnostics_every > 0 && shared == nullptr)
    tracker = std::make_unique<BlockDesign>(dims.d1, dims.d2, dims.K, config.lambda);
  std::unique_ptr<EllipticPotential> ep;
  if (opts.elliptic_every_round && config.lambda >= 1.0)
    ep = std::make_unique<EllipticPotential>(dims.d1, config.lambda);

  TrialResult out;
  out.dims = dims;
  out.T = T;
  out.regret.algo = config.algo;
  out.regret.env_id = env_id;
  out.regret.trial_id = trial_id;
  out.regret.seed = trial_seed;
  out.regret.cum_regret.reserve(T);
  out.regret.chosen.reserve(T);
  DiagnosticsTrace& diag = out.diagnostics;
  diag.elliptic_checked = ep != nullptr;

  auto confidence_round = [&] {
    const auto c = check_confidence(*policy, params, config.gamma);
    if (!c) return;
    diag.confidence_checked = true;
    if (!c->pass) ++diag.confidence_violations;
    if (c->gamma > 0.0)
      diag.confidence_max_ratio = std::max(diag.confidence_max_ratio, c->residual / c->gamma);
  };
  if (opts.confidence_every_round) confidence_round();

  double cum = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const ContextRound round = env.context(t);
    const std::size_t arm = policy->select_arm(round);
    const ArmFeatures& f = round.arms[arm];
    cum += instantaneous_regret(params, round, arm);
    out.regret.cum_regret.push_back(cum);
    out.regret.chosen.push_back(static_cast<std::uint32_t>(arm));

    CounterRng noise(trial_seed, 0, t, Purpose::Noise);
    const double reward = draw_reward(params, arm, f.x, f.z, env.noise_std(), noise);

    if (ep) ep->add(f.x);
    policy->update(arm, f, reward);
    if (tracker) tracker->update(embed(arm, f.x, f.z, dims));

    if (opts.confidence_every_round) confidence_round();
    if (opts.diagnostics_every > 0 && (t + 1) % opts.diagnostics_every == 0) {
      const BlockDesign& design = shared != nullptr ? shared->design() : *tracker;
      diag.samples.push_back(
          sample_diagnostics(t + 1, design, *policy, params, ep.get(), opts));
    }
  }
  if (ep) {
    diag.elliptic_violations = ep->violations();
    diag.elliptic_worst_slack = ep->worst_slack();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assumption diagnostics

double fitted_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return NAN;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : NAN;
}

AssumptionReport validate_assumption(const DiagnosticsTrace& diag,
                                     double rho_expected, const Dims& dims,
                                     double delta, double burn_in) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  AssumptionReport r;
  Vector ts, vs;
  for (const auto& s : diag.samples) {
    if (static_cast<double>(s.round) < burn_in) continue;
    ts.push_back(static_cast<double>(s.round));
    vs.push_back(s.lambda_min_V);
  }
  if (ts.size() < 2)
    throw std::invalid_argument("validate_assumption: insufficient samples (" +
                                std::to_string(ts.size()) + " past burn-in)");
  r.samples_used = ts.size();
  r.slope_V = fitted_slope(ts, vs);
  r.V_growth_ok = r.slope_V >= rho_expected / 2.0;

  r.slope_W.assign(dims.K, NAN);
  r.min_slope_W = NAN;
  for (std::size_t i = 0; i < dims.K; ++i) {
    Vector taus, ws;
    for (const auto& s : diag.samples) {
      if (i >= s.tau.size() || s.tau[i] == 0) continue;
      if (static_cast<double>(s.tau[i]) < burn_in) continue;
      taus.push_back(static_cast<double>(s.tau[i]));
      ws.push_back(s.lambda_min_W[i]);
    }
    r.slope_W[i] = fitted_slope(taus, ws);
    if (!std::isnan(r.slope_W[i]) && !(r.slope_W[i] >= r.min_slope_W))
      r.min_slope_W = r.slope_W[i];
  }
  r.W_growth_ok = !std::isnan(r.min_slope_W) && r.min_slope_W >= rho_expected / 2.0;

  r.sigma_bound = std::sqrt(
      8.0 * std::log(static_cast<double>(dims.K * (dims.d1 + dims.d2)) / delta));
  for (const auto& s : diag.samples)
    r.max_sigma_over_sqrt_tau = std::max(r.max_sigma_over_sqrt_tau, s.max_sigma_over_sqrt_tau());
  r.B_bound_ok = r.max_sigma_over_sqrt_tau <= r.sigma_bound;
  return r;
}

// ---------------------------------------------------------------------------
// Aggregation

void RunningStats::add(double x) noexcept {
  ++n_;
  const double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
}

double RunningStats::stddev() const noexcept {
  return n_ > 1 ? std::sqrt(std::max(0.0, m2_ / static_cast<double>(n_ - 1))) : 0.0;
}

namespace {

using GroupKey = std::tuple<int, std::size_t, std::size_t, std::size_t, std::size_t>;

GroupKey group_key(const TrialResult& t) {
  return {static_cast<int>(t.regret.algo), t.dims.d1, t.dims.d2, t.dims.K, t.T};
}

/// Trial indices grouped by (algo, dims, T) in first-seen order.
std::vector<std::vector<std::size_t>> group_trials(const std::vector<TrialResult>& trials) {
  std::map<GroupKey, std::size_t> index;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto [it, fresh] = index.emplace(group_key(trials[i]), groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<TrialResult>& trials) {
  std::vector<SummaryRow> rows;
  for (const auto& g : group_trials(trials)) {
    RunningStats st;
    for (std::size_t i : g) st.add(trials[i].regret.final_regret());
    const TrialResult& first = trials[g.front()];
    rows.push_back({first.regret.algo, first.dims, first.T, st.mean(), st.stddev(), st.count()});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Experiments

std::string_view to_string(Setting s) noexcept {
  switch (s) {
    case Setting::Setting1: return "setting1";
    case Setting::Setting2: return "setting2";
    case Setting::Setting3: return "setting3";
    case Setting::Replay: return "replay";
    case Setting::Custom: return "custom";
  }
  return "?";
}

std::size_t scaled_count(std::size_t n, double scale) {
  const double v = std::floor(static_cast<double>(n) * scale);
  return std::max<std::size_t>(1, static_cast<std::size_t>(v));
}

std::vector<Shape> resolve_shapes(const ExperimentSpec& spec) {
  if (!(spec.scale > 0.0)) throw std::invalid_argument("scale must be positive");
  auto scaled_T = [&](std::size_t T) {
    return std::max<std::size_t>(2, static_cast<std::size_t>(
                                        std::llround(static_cast<double>(T) * spec.scale)));
  };
  switch (spec.setting) {
    case Setting::Setting1: return {{{40, 5, 25}, scaled_T(80000)}};
    case Setting::Setting2: return {{{5, 40, 25}, scaled_T(80000)}};
    case Setting::Setting3: {
      if (spec.k_grid.empty()) throw std::invalid_argument("setting 3 needs a nonempty K grid");
      std::vector<Shape> out;
      for (std::size_t K : spec.k_grid) {
        if (K == 0) throw std::invalid_argument("K grid entries must be positive");
        out.push_back({{5, 5, K}, scaled_T(30000)});
      }
      return out;
    }
    case Setting::Custom:
    case Setting::Replay:
      validate(spec.dims);
      return {{spec.dims, scaled_T(spec.T)}};
  }
  throw std::invalid_argument("unknown setting");
}

namespace {

struct Job {
  const Environment* env = nullptr;
  PolicyConfig config;
  std::size_t env_id = 0;
  std::size_t trial_id = 0;
  std::uint64_t trial_seed = 0;
};

void write_outputs(const std::filesystem::path& dir, const ExperimentSpec& spec,
                   const std::vector<TrialResult>& trials, bool relative) {
  std::filesystem::create_directories(dir);
  write_regret_csv(dir / "regret.csv", trials, spec.regret_stride);
  write_mean_curve_csv(dir / "regret_mean.csv", trials, spec.regret_stride);
  write_summary_csv(dir / "summary.csv", summarize(trials));
  if (spec.diagnostics_every > 0) write_diagnostics_csv(dir / "diagnostics.csv", trials);
  if (relative) write_relative_regret_csv(dir / "relative_regret.csv", trials, spec.regret_stride);
}

ExperimentResult run_jobs(const ExperimentSpec& spec, const std::vector<Job>& jobs,
                          const std::optional<std::filesystem::path>& out_dir,
                          const ProgressFn& progress, bool relative) {
  TrialOptions opts = spec.trial;
  opts.diagnostics_every = spec.diagnostics_every;

  std::vector<std::optional<TrialResult>> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex mu;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        const Job& j = jobs[i];
        results[i] = run_trial(j.config, *j.env, j.env_id, j.trial_id, j.trial_seed, opts);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
      const std::size_t n = done.fetch_add(1) + 1;
      if (progress) {
        std::lock_guard lock(mu);
        progress(n, jobs.size());
      }
    }
  };

  const unsigned n_threads =
      std::max(1u, std::min<unsigned>(spec.threads, static_cast<unsigned>(jobs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult out;
  for (auto& r : results)
    if (r) out.trials.push_back(std::move(*r));
  out.summary = summarize(out.trials);
  if (out_dir) write_outputs(*out_dir, spec, out.trials, relative);
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const std::optional<std::filesystem::path>& out_dir,
                                const ProgressFn& progress) {
  if (spec.algos.empty()) throw std::invalid_argument("no algorithms selected");
  if (spec.setting == Setting::Replay)
    throw std::invalid_argument("replay experiments need an environment; use run_on_environment");
  const std::size_t n_envs = scaled_count(spec.n_envs, spec.scale);
  const std::size_t n_trials = scaled_count(spec.n_trials, spec.scale);

  std::vector<std::unique_ptr<SyntheticEnvironment>> envs;
  std::vector<Job> jobs;
  for (const Shape& shape : resolve_shapes(spec)) {
    const std::uint64_t shape_seed = derive_seed(spec.base_seed, shape.dims.K, Purpose::Environment);
    for (std::size_t e = 0; e < n_envs; ++e) {
      SyntheticEnvConfig cfg;
      cfg.dims = shape.dims;
      cfg.T = shape.T;
      cfg.noise_std = spec.noise_std;
      cfg.S = spec.S;
      cfg.env_seed = derive_seed(shape_seed, e, Purpose::Environment);
      cfg.n_trials = n_trials;
      envs.push_back(std::make_unique<SyntheticEnvironment>(cfg));
      for (Algo a : spec.algos) {
        const PolicyConfig pc =
            make_policy_config(a, shape.dims, spec.S, shape.T, spec.delta, spec.overrides);
        for (std::size_t k = 0; k < n_trials; ++k)
          jobs.push_back({envs.back().get(), pc, e, k,
                          derive_seed(cfg.env_seed, k, Purpose::Trial)});
      }
    }
  }
  return run_jobs(spec, jobs, out_dir, progress, false);
}

ExperimentResult run_on_environment(const ExperimentSpec& spec, const Environment& env,
                                    const std::optional<std::filesystem::path>& out_dir,
                                    const ProgressFn& progress) {
  if (spec.algos.empty()) throw std::invalid_argument("no algorithms selected");
  if (env.horizon() < 2) throw std::invalid_argument("environment horizon must be at least 2");
  const std::size_t n_trials = scaled_count(spec.n_trials, spec.scale);
  std::vector<Job> jobs;
  for (Algo a : spec.algos) {
    const PolicyConfig pc =
        make_policy_config(a, env.dims(), spec.S, env.horizon(), spec.delta, spec.overrides);
    for (std::size_t k = 0; k < n_trials; ++k)
      jobs.push_back({&env, pc, 0, k, derive_seed(spec.base_seed, k, Purpose::Trial)});
  }
  return run_jobs(spec, jobs, out_dir, progress, true);
}

// ---------------------------------------------------------------------------
// CSV output

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

bool keep_round(std::size_t round, std::size_t T, std::size_t stride) {
  return stride <= 1 || round % stride == 0 || round == T;
}

struct Curve {
  Algo algo;
  Dims dims;
  std::size_t T;
  Vector mean;
  Vector stddev;
};

std::vector<Curve> mean_curves(const std::vector<TrialResult>& trials) {
  std::vector<Curve> out;
  for (const auto& g : group_trials(trials)) {
    const TrialResult& first = trials[g.front()];
    const std::size_t T = first.regret.cum_regret.size();
    Curve c{first.regret.algo, first.dims, first.T, Vector(T), Vector(T)};
    for (std::size_t t = 0; t < T; ++t) {
      RunningStats st;
      for (std::size_t i : g) st.add(trials[i].regret.cum_regret[t]);
      c.mean[t] = st.mean();
      c.stddev[t] = st.stddev();
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

void write_regret_csv(const std::filesystem::path& path,
                      const std::vector<TrialResult>& trials, std::size_t stride) {
  auto out = open_csv(path);
  out << "algo,env_id,trial_id,round,cum_regret,chosen_arm\n";
  for (const auto& tr : trials) {
    const auto& r = tr.regret;
    const std::string algo(to_string(r.algo));
    for (std::size_t t = 0; t < r.cum_regret.size(); ++t) {
      const std::size_t round = t + 1;
      if (!keep_round(round, r.cum_regret.size(), stride)) continue;
      out << algo << ',' << r.env_id << ',' << r.trial_id << ',' << round << ','
          << format_double(r.cum_regret[t]) << ',' << (r.chosen[t] + 1) << '\n';
    }
  }
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
  auto out = open_csv(path);
  out << "algo,K,d1,d2,T,mean_final_regret,std_final_regret,n_trials\n";
  for (const auto& r : rows)
    out << to_string(r.algo) << ',' << r.dims.K << ',' << r.dims.d1 << ',' << r.dims.d2 << ','
        << r.T << ',' << format_double(r.mean_final_regret) << ','
        << format_double(r.std_final_regret) << ',' << r.n_trials << '\n';
}

void write_diagnostics_csv(const std::filesystem::path& path,
                           const std::vector<TrialResult>& trials) {
  auto out = open_csv(path);
  out << "algo,env_id,trial_id,round,lambda_min_V,min_over_arms_lambda_min_W,"
         "max_over_arms_sigma_max_B_over_sqrt_tau,sandwich_min,sandwich_max,"
         "conf_residual,conf_gamma\n";
  for (const auto& tr : trials) {
    const std::string algo(to_string(tr.regret.algo));
    for (const auto& s : tr.diagnostics.samples)
      out << algo << ',' << tr.regret.env_id << ',' << tr.regret.trial_id << ',' << s.round
          << ',' << format_double(s.lambda_min_V) << ',' << format_double(s.min_lambda_min_W())
          << ',' << format_double(s.max_sigma_over_sqrt_tau()) << ','
          << format_double(s.sandwich_min) << ',' << format_double(s.sandwich_max) << ','
          << format_double(s.conf_residual) << ',' << format_double(s.conf_gamma) << '\n';
  }
}

void write_mean_curve_csv(const std::filesystem::path& path,
                          const std::vector<TrialResult>& trials, std::size_t stride) {
  auto out = open_csv(path);
  out << "algo,K,round,mean_cum_regret,std_cum_regret\n";
  for (const auto& c : mean_curves(trials)) {
    const std::string algo(to_string(c.algo));
    for (std::size_t t = 0; t < c.mean.size(); ++t) {
      const std::size_t round = t + 1;
      if (!keep_round(round, c.mean.size(), stride)) continue;
      out << algo << ',' << c.dims.K << ',' << round << ',' << format_double(c.mean[t]) << ','
          << format_double(c.stddev[t]) << '\n';
    }
  }
}

void write_relative_regret_csv(const std::filesystem::path& path,
                               const std::vector<TrialResult>& trials, std::size_t stride) {
  const auto curves = mean_curves(trials);
  auto out = open_csv(path);
  out << "algo,round,mean_cum_regret,relative_regret\n";
  if (curves.empty()) return;
  std::size_t T = curves.front().mean.size();
  for (const auto& c : curves) T = std::min(T, c.mean.size());
  Vector best(T, INFINITY);
  for (const auto& c : curves)
    for (std::size_t t = 0; t < T; ++t) best[t] = std::min(best[t], c.mean[t]);
  for (const auto& c : curves) {
    const std::string algo(to_string(c.algo));
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t round = t + 1;
      if (!keep_round(round, T, stride)) continue;
      out << algo << ',' << round << ',' << format_double(c.mean[t]) << ','
          << format_double(c.mean[t] - best[t]) << '\n';
    }
  }
}

}  // namespace hybandit
