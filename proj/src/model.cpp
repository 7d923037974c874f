#include "hybandit/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hybandit {

namespace {
constexpr double kNormSlack = 1e-12;
}

void validate(const Dims& dims) {
  if (dims.d1 == 0 || dims.d2 == 0 || dims.K == 0)
    throw std::invalid_argument("dimensions d1, d2 and K must be positive");
}

void HybridParams::validate() const {
  if (theta.empty() || betas.empty())
    throw std::invalid_argument("HybridParams: theta and betas must be nonempty");
  if (!(S > 0.0)) throw std::invalid_argument("HybridParams: S must be positive");
  const double limit = S * (1.0 + kNormSlack);
  if (norm2(theta) > limit)
    throw std::invalid_argument("HybridParams: ||theta|| exceeds S");
  const std::size_t d2 = betas.front().size();
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (betas[i].size() != d2 || d2 == 0)
      throw std::invalid_argument("HybridParams: ragged beta vectors");
    if (norm2(betas[i]) > limit)
      throw std::invalid_argument("HybridParams: ||beta_" + std::to_string(i) +
                                  "|| exceeds S");
  }
}

void validate(const ContextRound& round, const Dims& dims) {
  if (round.num_arms() != dims.K)
    throw std::invalid_argument("context round has " +
                                std::to_string(round.num_arms()) +
                                " arms, expected " + std::to_string(dims.K));
  for (const auto& a : round.arms) {
    if (a.x.size() != dims.d1 || a.z.size() != dims.d2)
      throw std::invalid_argument("context round feature dimensions mismatch");
    if (norm2(a.x) > 1.0 + kNormSlack || norm2(a.z) > 1.0 + kNormSlack)
      throw std::invalid_argument("context round feature norm exceeds 1");
  }
}

SparseHybridVector embed(std::size_t arm, const Vector& x, const Vector& z,
                         const Dims& dims) {
  if (arm >= dims.K)
    throw std::out_of_range("embed: arm " + std::to_string(arm) +
                            " out of range for K=" + std::to_string(dims.K));
  if (x.size() != dims.d1 || z.size() != dims.d2)
    throw std::invalid_argument("embed: feature dimensions mismatch");
  return {arm, x, z};
}

FlatParams flatten(const HybridParams& p) {
  FlatParams f;
  f.phi.reserve(p.theta.size() + p.betas.size() * p.dims().d2);
  f.phi.insert(f.phi.end(), p.theta.begin(), p.theta.end());
  for (const auto& b : p.betas) f.phi.insert(f.phi.end(), b.begin(), b.end());
  return f;
}

HybridParams unflatten(const FlatParams& f, const Dims& dims, double S) {
  if (f.phi.size() != dims.hybrid_dim())
    throw std::invalid_argument("unflatten: length does not match d1 + d2 K");
  HybridParams p;
  p.S = S;
  const auto first = f.phi.begin();
  p.theta.assign(first, first + static_cast<std::ptrdiff_t>(dims.d1));
  for (std::size_t i = 0; i < dims.K; ++i) {
    const auto off = static_cast<std::ptrdiff_t>(dims.d1 + i * dims.d2);
    p.betas.emplace_back(first + off,
                         first + off + static_cast<std::ptrdiff_t>(dims.d2));
  }
  return p;
}

double mean_reward(const HybridParams& p, std::size_t arm, const Vector& x,
                   const Vector& z) {
  return dot(x, p.theta) + dot(z, p.betas.at(arm));
}

double best_mean_reward(const HybridParams& p, const ContextRound& round) {
  double best = -INFINITY;
  for (std::size_t j = 0; j < round.num_arms(); ++j)
    best = std::max(best, mean_reward(p, j, round.arms[j].x, round.arms[j].z));
  return best;
}

double instantaneous_regret(const HybridParams& p, const ContextRound& round,
                            std::size_t chosen) {
  if (chosen >= round.num_arms())
    throw std::out_of_range("instantaneous_regret: chosen arm out of range");
  const auto& a = round.arms[chosen];
  return std::max(0.0, best_mean_reward(p, round) -
                           mean_reward(p, chosen, a.x, a.z));
}

}  // namespace hybandit
