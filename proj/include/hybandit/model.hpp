#pragma once

// Hybrid reward model: r = <x, theta*> + <z, beta_i*> + noise.

#include <cstddef>
#include <vector>

#include "hybandit/linalg.hpp"

namespace hybandit {

/// Problem shape: shared dimension d1, arm-specific dimension d2, K arms.
struct Dims {
  std::size_t d1 = 0;
  std::size_t d2 = 0;
  std::size_t K = 0;

  std::size_t hybrid_dim() const noexcept { return d1 + d2 * K; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

void validate(const Dims& dims);

struct HybridParams {
  Vector theta;
  std::vector<Vector> betas;
  double S = 1.0;

  Dims dims() const noexcept {
    return {theta.size(), betas.empty() ? 0 : betas.front().size(),
            betas.size()};
  }
  /// Throws std::invalid_argument if shapes are ragged or a norm exceeds S.
  void validate() const;
};

/// phi* = (theta*, beta_1*, ..., beta_K*).
struct FlatParams {
  Vector phi;
};

struct ArmFeatures {
  Vector x;
  Vector z;
};

/// The K feature tuples offered in one round.
struct ContextRound {
  std::vector<ArmFeatures> arms;

  std::size_t num_arms() const noexcept { return arms.size(); }
};

/// Throws std::invalid_argument if shapes mismatch dims or a feature norm
/// exceeds 1 (with a small slack for rounding).
void validate(const ContextRound& round, const Dims& dims);

/// P(arm, x, z). Arms are 0-based.
SparseHybridVector embed(std::size_t arm, const Vector& x, const Vector& z,
                         const Dims& dims);

FlatParams flatten(const HybridParams& p);
HybridParams unflatten(const FlatParams& f, const Dims& dims, double S = 1.0);

double mean_reward(const HybridParams& p, std::size_t arm, const Vector& x,
                   const Vector& z);

/// Largest mean reward offered in the round.
double best_mean_reward(const HybridParams& p, const ContextRound& round);

/// max_j mean(j) - mean(chosen); always >= 0.
double instantaneous_regret(const HybridParams& p, const ContextRound& round,
                            std::size_t chosen);

}  // namespace hybandit
