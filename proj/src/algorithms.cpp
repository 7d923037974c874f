#include "hybandit/algorithms.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hybandit {

std::string_view to_string(Algo a) noexcept {
  switch (a) {
    case Algo::LinUCB: return "LinUCB";
    case Algo::DisLinUCB: return "DisLinUCB";
    case Algo::HyLinUCB: return "HyLinUCB";
    case Algo::Oracle: return "Oracle";
  }
  return "?";
}

Algo parse_algo(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "linucb") return Algo::LinUCB;
  if (lower == "dislinucb") return Algo::DisLinUCB;
  if (lower == "hylinucb") return Algo::HyLinUCB;
  if (lower == "oracle") return Algo::Oracle;
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

double exploration_coefficient(Algo algo, double S, const Dims& dims,
                               double T, double delta, double lambda,
                               GammaForm form) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("delta must lie in (0, 1)");
  if (!(T >= 2.0)) throw std::invalid_argument("horizon T must be at least 2");
  if (!(S > 0.0) || !(lambda > 0.0))
    throw std::invalid_argument("S and lambda must be positive");
  validate(dims);

  const double d1 = static_cast<double>(dims.d1);
  const double d2 = static_cast<double>(dims.d2);
  const double K = static_cast<double>(dims.K);
  const double log_t = std::log(T / delta);

  switch (algo) {
    case Algo::LinUCB: {
      const double width = std::sqrt(2.0 * (d1 + d2 * K) * log_t);
      if (form == GammaForm::MainText) return S * std::sqrt(K) + width;
      return 2.0 * S * std::sqrt(lambda * K) + width;
    }
    case Algo::HyLinUCB: {
      const double width = std::sqrt(2.0 * (d1 + d2) * log_t);
      if (form == GammaForm::Appendix)
        return 2.0 * (S * std::sqrt(2.0 * lambda) + width);
      return 2.0 * (S * std::sqrt(K) + width);
    }
    case Algo::DisLinUCB:
      return 2.0 * std::sqrt(S) + std::sqrt(2.0 * (d1 + d2) * std::log(K * T / delta));
    case Algo::Oracle:
      break;
  }
  throw std::invalid_argument("the oracle policy has no exploration coefficient");
}

double default_lambda(Algo algo, std::size_t K) {
  return algo == Algo::HyLinUCB ? static_cast<double>(K) : 1.0;
}

PolicyConfig make_policy_config(Algo algo, const Dims& dims, double S,
                                std::size_t T, double delta,
                                const PolicyOverrides& overrides) {
  validate(dims);
  PolicyConfig c;
  c.algo = algo;
  c.dims = dims;
  c.S = S;
  c.T = T;
  c.delta = delta;
  c.lambda = overrides.lambda.value_or(default_lambda(algo, dims.K));
  if (!(c.lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (overrides.gamma) {
    if (!(*overrides.gamma >= 0.0))
      throw std::invalid_argument("gamma must be nonnegative");
    c.gamma = *overrides.gamma;
  } else if (algo != Algo::Oracle) {
    c.gamma = exploration_coefficient(algo, S, dims, static_cast<double>(T),
                                      delta, c.lambda, overrides.gamma_form);
  }
  c.overridden = overrides.lambda.has_value() || overrides.gamma.has_value() ||
                 overrides.gamma_form != GammaForm::Default;
  return c;
}

// ---------------------------------------------------------------------------

std::size_t Policy::select_arm(const ContextRound& round) const {
  if (round.num_arms() == 0)
    throw std::invalid_argument("select_arm: empty context round");
  std::size_t best = 0;
  double best_score = ucb_score(0, round.arms[0]);
  for (std::size_t i = 1; i < round.num_arms(); ++i) {
    const double s = ucb_score(i, round.arms[i]);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

void Policy::check_reward(double reward) {
  if (!std::isfinite(reward))
    throw std::invalid_argument("reward must be finite");
}

// ---------------------------------------------------------------------------

SharedPolicy::SharedPolicy(PolicyConfig config)
    : Policy(std::move(config)),
      design_(this->config().dims.d1, this->config().dims.d2,
              this->config().dims.K, this->config().lambda),
      u_acc_(this->config().dims.hybrid_dim(), 0.0),
      phi_hat_(this->config().dims.hybrid_dim(), 0.0) {}

double SharedPolicy::estimated_mean(std::size_t arm, const ArmFeatures& f) const {
  const Dims& d = config().dims;
  if (arm >= d.K) throw std::out_of_range("arm out of range");
  const std::span<const double> phi(phi_hat_);
  return dot(f.x, phi.first(d.d1)) + dot(f.z, phi.subspan(d.d1 + arm * d.d2, d.d2));
}

double SharedPolicy::ucb_score(std::size_t arm, const ArmFeatures& f) const {
  const double width =
      std::sqrt(design_.quad_form_inv(embed(arm, f.x, f.z, config().dims)));
  return estimated_mean(arm, f) + config().gamma * width;
}

void SharedPolicy::update(std::size_t arm, const ArmFeatures& f, double reward) {
  check_reward(reward);
  const Dims& d = config().dims;
  design_.update(embed(arm, f.x, f.z, d));
  for (std::size_t k = 0; k < d.d1; ++k) u_acc_[k] += reward * f.x[k];
  double* slot = u_acc_.data() + d.d1 + arm * d.d2;
  for (std::size_t k = 0; k < d.d2; ++k) slot[k] += reward * f.z[k];
  phi_hat_ = design_.solve(u_acc_);
}

// ---------------------------------------------------------------------------

DisjointPolicy::DisjointPolicy(PolicyConfig config) : Policy(std::move(config)) {
  const Dims& d = this->config().dims;
  const std::size_t n = d.d1 + d.d2;
  arms_.reserve(d.K);
  for (std::size_t i = 0; i < d.K; ++i)
    arms_.push_back({SymPosDef(n, this->config().lambda), Vector(n, 0.0),
                     Vector(n, 0.0), 0});
}

Vector DisjointPolicy::concat(const ArmFeatures& f) const {
  const Dims& d = config().dims;
  if (f.x.size() != d.d1 || f.z.size() != d.d2)
    throw std::invalid_argument("feature dimensions mismatch");
  Vector v(f.x);
  v.insert(v.end(), f.z.begin(), f.z.end());
  return v;
}

double DisjointPolicy::estimated_mean(std::size_t arm, const ArmFeatures& f) const {
  return dot(concat(f), arms_.at(arm).phi);
}

double DisjointPolicy::ucb_score(std::size_t arm, const ArmFeatures& f) const {
  const ArmModel& m = arms_.at(arm);
  const Vector v = concat(f);
  return dot(v, m.phi) + config().gamma * std::sqrt(m.design.quad_form_inv(v));
}

void DisjointPolicy::update(std::size_t arm, const ArmFeatures& f, double reward) {
  check_reward(reward);
  ArmModel& m = arms_.at(arm);
  const Vector v = concat(f);
  m.design.rank_one_update(v);
  for (std::size_t k = 0; k < v.size(); ++k) m.u[k] += reward * v[k];
  m.phi = m.design.solve(m.u);
  ++m.pulls;
}

// ---------------------------------------------------------------------------

OraclePolicy::OraclePolicy(PolicyConfig config, HybridParams params)
    : Policy(std::move(config)), params_(std::move(params)) {
  if (params_.dims() != this->config().dims)
    throw std::invalid_argument("oracle parameters do not match policy dims");
}

double OraclePolicy::ucb_score(std::size_t arm, const ArmFeatures& f) const {
  return mean_reward(params_, arm, f.x, f.z);
}

double OraclePolicy::estimated_mean(std::size_t arm, const ArmFeatures& f) const {
  return mean_reward(params_, arm, f.x, f.z);
}

void OraclePolicy::update(std::size_t, const ArmFeatures&, double reward) {
  check_reward(reward);
}

std::unique_ptr<Policy> make_policy(const PolicyConfig& config,
                                    const HybridParams* params) {
  switch (config.algo) {
    case Algo::LinUCB:
    case Algo::HyLinUCB:
      return std::make_unique<SharedPolicy>(config);
    case Algo::DisLinUCB:
      return std::make_unique<DisjointPolicy>(config);
    case Algo::Oracle:
      if (params == nullptr)
        throw std::invalid_argument("the oracle policy needs the true parameters");
      return std::make_unique<OraclePolicy>(config, *params);
  }
  throw std::invalid_argument("unknown algorithm");
}

}  // namespace hybandit
