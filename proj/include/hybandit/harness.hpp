#pragma once

// Experiment orchestration, regret accounting and theory diagnostics.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hybandit/algorithms.hpp"
#include "hybandit/environments.hpp"
#include "hybandit/linalg.hpp"
#include "hybandit/model.hpp"

namespace hybandit {

// ---------------------------------------------------------------------------
// Theory constants

struct TheoryConstants {
  double rho = 0.0;
  double T_m = 0.0;
  double T_o = 0.0;
  bool horizon_exceeds_T_o = false;
  double gamma_linucb = 0.0;
  double gamma_hylinucb = 0.0;
  double gamma_dislinucb = 0.0;
};

/// T_m = (16/rho^2 + 8/(3 rho)) log(2 (d1 + d2) K T / delta)
/// T_o = max(128/rho^2, 4 T_m) K^2 log((d1 + d2) K / delta)
/// gammas use each algorithm's default lambda.
TheoryConstants theory_constants(double rho, const Dims& dims, std::size_t T,
                                 double delta, double S = 1.0);

/// 1 / (max(d1, d2) + 2): the diversity constant of unit-ball features.
double unit_ball_rho(const Dims& dims);

// ---------------------------------------------------------------------------
// Incremental checks

/// Running sum_s ||x_s||^2_{V_{s-1}^{-1}} against 2 d log(1 + t/(lambda d)).
class EllipticPotential {
 public:
  EllipticPotential(std::size_t dim, double lambda);

  /// Throws std::invalid_argument if ||x|| > 1.
  void add(std::span<const double> x);

  std::size_t steps() const noexcept { return t_; }
  double lhs() const noexcept { return lhs_; }
  double bound() const;
  double worst_slack() const noexcept { return worst_slack_; }
  std::size_t violations() const noexcept { return violations_; }
  const SymPosDef& design() const noexcept { return v_; }

 private:
  void record();

  SymPosDef v_;
  double lambda_;
  std::size_t t_ = 0;
  double lhs_ = 0.0;
  double worst_slack_ = INFINITY;
  std::size_t violations_ = 0;
};

struct EllipticReport {
  bool holds = true;
  double worst_slack = INFINITY;
  double final_lhs = 0.0;
  double final_bound = 0.0;
  std::size_t violations = 0;
};

/// Checks the bound after every step of the sequence. Requires lambda >= 1
/// and ||x_s|| <= 1.
EllipticReport check_elliptic_potential(std::span<const Vector> xs,
                                        double lambda);

struct ConfidenceCheck {
  double residual = 0.0;
  double gamma = 0.0;
  bool pass = true;
};

/// ||phi_hat - phi*||_M for shared policies; for DisLinUCB the largest
/// per-arm ||phi_i - (theta*, beta_i*)||_{M_i}. nullopt for the oracle.
std::optional<ConfidenceCheck> check_confidence(const Policy& policy,
                                                const HybridParams& params,
                                                double gamma);

struct SandwichCheck {
  double min = 1.0;
  double max = 1.0;
  bool pass = true;
};

/// Passes iff the spectrum of U^{-1/2} M U^{-1/2} lies in [1/2, 2].
/// Uses the dense Jacobi route when dim() <= dense_limit and the reduced
/// sigma_max(Z) route otherwise.
SandwichCheck check_sandwich(const BlockDesign& design,
                             std::size_t dense_limit = 64);

// ---------------------------------------------------------------------------
// Traces

struct RegretTrace {
  Algo algo = Algo::LinUCB;
  std::size_t env_id = 0;
  std::size_t trial_id = 0;
  std::uint64_t seed = 0;
  std::vector<double> cum_regret;
  std::vector<std::uint32_t> chosen;

  double final_regret() const { return cum_regret.empty() ? 0.0 : cum_regret.back(); }
};

struct DiagnosticsSample {
  std::size_t round = 0;  // number of completed rounds
  double lambda_min_V = 0.0;
  Vector lambda_min_W;  // per arm
  Vector sigma_max_B;   // per arm
  std::vector<std::size_t> tau;
  double sandwich_min = 1.0;
  double sandwich_max = 1.0;
  double conf_residual = 0.0;
  double conf_gamma = 0.0;
  double elliptic_lhs = 0.0;
  double elliptic_bound = 0.0;

  double min_lambda_min_W() const;
  /// max over pulled arms of sigma_max(B_i) / sqrt(tau_i).
  double max_sigma_over_sqrt_tau() const;
};

struct DiagnosticsTrace {
  std::vector<DiagnosticsSample> samples;
  bool confidence_checked = false;
  std::size_t confidence_violations = 0;  // rounds with residual > gamma
  double confidence_max_ratio = 0.0;      // max residual / gamma
  bool elliptic_checked = false;
  std::size_t elliptic_violations = 0;
  double elliptic_worst_slack = INFINITY;
};

struct TrialOptions {
  /// Sample diagnostics every this many rounds; 0 disables sampling.
  std::size_t diagnostics_every = 0;
  /// Check the confidence ellipsoid after every round.
  bool confidence_every_round = false;
  /// Track the elliptic potential of the pulled shared features every round.
  bool elliptic_every_round = false;
  /// Dimension up to which the sandwich spectrum is computed densely.
  std::size_t dense_sandwich_limit = 64;
};

struct TrialResult {
  Dims dims;
  std::size_t T = 0;
  RegretTrace regret;
  DiagnosticsTrace diagnostics;
};

/// Select -> reward -> update for env.horizon() rounds. Reward noise for
/// round t comes from the (trial_seed, t, Noise) stream, so every policy sees
/// the same noise sequence for a given trial seed.
TrialResult run_trial(const PolicyConfig& config, const Environment& env,
                      std::size_t env_id, std::size_t trial_id,
                      std::uint64_t trial_seed, const TrialOptions& opts = {});

// ---------------------------------------------------------------------------
// Assumption diagnostics

struct AssumptionReport {
  std::size_t samples_used = 0;
  double slope_V = 0.0;
  Vector slope_W;  // per arm; NaN where the arm has too few distinct tau
  double min_slope_W = 0.0;
  double max_sigma_over_sqrt_tau = 0.0;
  double sigma_bound = 0.0;  // sqrt(8 log(K (d1 + d2) / delta))
  bool V_growth_ok = false;
  bool W_growth_ok = false;
  bool B_bound_ok = false;
};

/// Least-squares slopes of lambda_min(V_t) vs t (samples with t >= burn_in)
/// and lambda_min(W_i) vs tau_i (samples with tau_i >= burn_in); growth is
/// flagged ok when the slope is >= rho_expected / 2. Throws if fewer than two
/// samples qualify.
AssumptionReport validate_assumption(const DiagnosticsTrace& diag,
                                     double rho_expected, const Dims& dims,
                                     double delta, double burn_in = 0.0);

/// Least-squares slope of y on x.
double fitted_slope(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Experiments

enum class Setting { Setting1, Setting2, Setting3, Replay, Custom };

std::string_view to_string(Setting s) noexcept;

struct ExperimentSpec {
  Setting setting = Setting::Custom;
  std::vector<Algo> algos{Algo::LinUCB, Algo::DisLinUCB, Algo::HyLinUCB};
  std::size_t n_envs = 5;
  std::size_t n_trials = 5;
  std::vector<std::size_t> k_grid{10, 25, 50, 100, 200, 400};
  std::size_t diagnostics_every = 0;
  std::uint64_t base_seed = 0;

  // Shape for Custom runs; the presets override these.
  Dims dims{5, 5, 10};
  std::size_t T = 1000;
  double noise_std = 0.1;
  double S = 1.0;
  double delta = 0.1;
  double scale = 1.0;

  PolicyOverrides overrides;
  TrialOptions trial;
  std::size_t regret_stride = 1;
  unsigned threads = 1;
};

struct Shape {
  Dims dims;
  std::size_t T = 0;
};

/// The (dims, T) combinations a spec expands to, after scaling.
std::vector<Shape> resolve_shapes(const ExperimentSpec& spec);
std::size_t scaled_count(std::size_t n, double scale);

struct SummaryRow {
  Algo algo = Algo::LinUCB;
  Dims dims;
  std::size_t T = 0;
  double mean_final_regret = 0.0;
  double std_final_regret = 0.0;
  std::size_t n_trials = 0;
};

struct ExperimentResult {
  std::vector<TrialResult> trials;
  std::vector<SummaryRow> summary;
};

/// One-pass mean and sample standard deviation.
class RunningStats {
 public:
  void add(double x) noexcept;
  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double stddev() const noexcept;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Per (algo, dims, T) mean and spread of final regret, in first-seen order.
std::vector<SummaryRow> summarize(const std::vector<TrialResult>& trials);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Runs n_envs x n_trials x |algos| trials per shape on spec.threads workers.
/// Results are ordered by (shape, env, algo, trial) regardless of threading.
/// When out_dir is set, CSVs are written there, including partial results if
/// a trial fails (the failure is rethrown afterwards).
ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const std::optional<std::filesystem::path>& out_dir = {},
                                const ProgressFn& progress = {});

/// Same loop over a fixed environment (replay): n_trials x |algos| trials.
ExperimentResult run_on_environment(const ExperimentSpec& spec,
                                    const Environment& env,
                                    const std::optional<std::filesystem::path>& out_dir = {},
                                    const ProgressFn& progress = {});

// ---------------------------------------------------------------------------
// CSV output. Floats are written with 17 significant digits.

std::string format_double(double v);

void write_regret_csv(const std::filesystem::path& path,
                      const std::vector<TrialResult>& trials,
                      std::size_t stride = 1);
void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<SummaryRow>& rows);
void write_diagnostics_csv(const std::filesystem::path& path,
                           const std::vector<TrialResult>& trials);
/// algo,K,round,mean_cum_regret,std_cum_regret
void write_mean_curve_csv(const std::filesystem::path& path,
                          const std::vector<TrialResult>& trials,
                          std::size_t stride = 1);
/// algo,round,mean_cum_regret,relative_regret where relative_regret is the
/// algorithm's mean cumulative regret minus the best algorithm's at that round.
void write_relative_regret_csv(const std::filesystem::path& path,
                               const std::vector<TrialResult>& trials,
                               std::size_t stride = 1);

}  // namespace hybandit
