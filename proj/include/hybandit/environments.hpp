#pragma once

// Synthetic and semi-synthetic environments.
//
// A synthetic environment is a pure function of its seed: parameters come
// from the (seed, Params) stream and round t's context from the
// (seed, t, Context) stream, so contexts are regenerated on demand rather
// than stored.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hybandit/linalg.hpp"
#include "hybandit/model.hpp"
#include "hybandit/rng.hpp"

namespace hybandit {

/// Uniform on the closed ball of the given radius: isotropic Gaussian
/// direction scaled by radius * U^{1/d}.
Vector sample_unit_ball(std::size_t d, CounterRng& rng, double radius = 1.0);

class Environment {
 public:
  virtual ~Environment() = default;

  virtual Dims dims() const = 0;
  virtual std::size_t horizon() const = 0;
  /// Ground truth used for rewards and regret.
  virtual const HybridParams& params() const = 0;
  virtual double noise_std() const = 0;
  /// Context for round t, 0 <= t < horizon().
  virtual ContextRound context(std::size_t t) const = 0;
};

struct SyntheticEnvConfig {
  Dims dims;
  std::size_t T = 1000;
  double noise_std = 0.1;
  double S = 1.0;
  std::uint64_t env_seed = 0;
  std::size_t n_trials = 1;

  void validate() const;
};

class SyntheticEnvironment final : public Environment {
 public:
  explicit SyntheticEnvironment(SyntheticEnvConfig cfg);

  Dims dims() const override { return cfg_.dims; }
  std::size_t horizon() const override { return cfg_.T; }
  const HybridParams& params() const override { return params_; }
  double noise_std() const override { return cfg_.noise_std; }
  ContextRound context(std::size_t t) const override;

  const SyntheticEnvConfig& config() const noexcept { return cfg_; }

 private:
  SyntheticEnvConfig cfg_;
  HybridParams params_;
};

SyntheticEnvironment generate_environment(const SyntheticEnvConfig& cfg);

/// mean_reward + N(0, noise_std^2).
double draw_reward(const HybridParams& p, std::size_t arm, const Vector& x,
                   const Vector& z, double noise_std, CounterRng& rng);

/// x = row-major vec(u v^T), z = v.
ArmFeatures build_features(std::span<const double> user,
                           std::span<const double> arm);

struct Observation {
  std::size_t arm = 0;
  Vector x;
  Vector z;
  double y = 0.0;
};

struct LearnedModel {
  HybridParams params;
  /// Mean squared residual of the fitted model on its training data.
  double fit_residual = 0.0;
};

struct LeastSquaresOptions {
  double ridge = 1e-6;
  /// ridge == 0 is rejected unless this is set; a singular system then
  /// raises SingularMatrixError.
  bool allow_zero_ridge = false;
};

/// argmin over (theta, beta) of sum (<x, theta> + <z, beta_arm> - y)^2
/// + ridge * ||phi||^2, solved through the hybrid block structure.
LearnedModel hybrid_least_squares(std::span<const Observation> data,
                                  std::size_t num_arms,
                                  const LeastSquaresOptions& opts = {});

// ---------------------------------------------------------------------------
// Replay logs

struct ReplayRecord {
  Vector user;
  std::vector<Vector> arms;
  std::size_t displayed = 0;  // 0-based; 1-based on disk
  int click = 0;
};

class ReplayLogError : public std::runtime_error {
 public:
  ReplayLogError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Line-delimited JSON, one {"user", "arms", "displayed", "click"} object
/// per line. Blank lines are skipped. The first record fixes K and the
/// feature dimensions; later records must agree.
std::vector<ReplayRecord> parse_replay_log(const std::filesystem::path& path);
void write_replay_log(const std::filesystem::path& path,
                      std::span<const ReplayRecord> records);

struct SyntheticLogConfig {
  std::size_t user_dim = 3;
  std::size_t arm_dim = 3;
  std::size_t K = 5;
  std::size_t n_records = 1000;
  std::uint64_t seed = 0;
  /// Norm bound for the generating parameters. With radius <= 0.5 and
  /// unit-ball features the click probability 0.5 + 0.5 * mean lies in [0, 1].
  double param_radius = 0.5;
};

struct SyntheticLog {
  std::vector<ReplayRecord> records;
  HybridParams params;  // theta has user_dim * arm_dim entries
};

/// Users and articles uniform on unit balls, displayed arm uniform, clicks
/// Bernoulli(0.5 + 0.5 * mean reward of the displayed arm).
SyntheticLog generate_replay_log(const SyntheticLogConfig& cfg);

/// Feature rescaling applied so that every ||x|| and ||z|| is <= 1.
struct FeatureScaling {
  double x_divisor = 1.0;
  double z_divisor = 1.0;
};

class ReplayEnvironment final : public Environment {
 public:
  ReplayEnvironment(LearnedModel model, std::vector<ContextRound> contexts,
                    double noise_std, FeatureScaling scaling);

  Dims dims() const override { return model_.params.dims(); }
  std::size_t horizon() const override { return contexts_.size(); }
  const HybridParams& params() const override { return model_.params; }
  double noise_std() const override { return noise_std_; }
  ContextRound context(std::size_t t) const override { return contexts_.at(t); }

  const LearnedModel& model() const noexcept { return model_; }
  const FeatureScaling& scaling() const noexcept { return scaling_; }

 private:
  LearnedModel model_;
  std::vector<ContextRound> contexts_;
  double noise_std_;
  FeatureScaling scaling_;
};

/// Fits the hybrid model on the first train_n records (displayed arm,
/// target = click) and replays the remaining records' contexts with
/// rewards simulated from the fit.
ReplayEnvironment semi_synthetic_environment(
    std::span<const ReplayRecord> log, std::size_t train_n, double noise_std,
    const LeastSquaresOptions& opts = {});

// ---------------------------------------------------------------------------
// Environment dump

/// {d1, d2, K, T, S, noise_std, env_seed, theta, betas} as pretty JSON.
std::string environment_dump(const SyntheticEnvironment& env);

}  // namespace hybandit
