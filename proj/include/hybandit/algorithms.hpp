#pragma once

// UCB policies for the hybrid reward model.
//
// LinUCB and HyLinUCB run ridge regression in the embedded (d1 + d2 K)
// dimensional space through BlockDesign; they differ only in lambda and
// gamma. DisLinUCB keeps an independent (d1 + d2) dimensional model per arm.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hybandit/linalg.hpp"
#include "hybandit/model.hpp"

namespace hybandit {

enum class Algo { LinUCB, DisLinUCB, HyLinUCB, Oracle };

std::string_view to_string(Algo a) noexcept;
/// Case-insensitive; accepts "linucb", "dislinucb", "hylinucb", "oracle".
Algo parse_algo(std::string_view name);

/// Which closed form of gamma to use.
///  - Default: LinUCB uses 2 S sqrt(lambda K) + sqrt(2 (d1 + d2 K) log(T/delta)),
///    HyLinUCB uses 2 (S sqrt(K) + sqrt(2 (d1 + d2) log(T/delta))).
///  - MainText: LinUCB uses S sqrt(K) + sqrt(2 (d1 + d2 K) log(T/delta)).
///  - Appendix: HyLinUCB uses 2 (S sqrt(2 lambda) + sqrt(2 (d1 + d2) log(T/delta))).
/// DisLinUCB has a single form: 2 sqrt(S) + sqrt(2 (d1 + d2) log(K T/delta)).
enum class GammaForm { Default, MainText, Appendix };

double exploration_coefficient(Algo algo, double S, const Dims& dims,
                               double T, double delta, double lambda,
                               GammaForm form = GammaForm::Default);

double default_lambda(Algo algo, std::size_t K);

struct PolicyOverrides {
  std::optional<double> lambda;
  std::optional<double> gamma;
  GammaForm gamma_form = GammaForm::Default;
};

struct PolicyConfig {
  Algo algo = Algo::LinUCB;
  Dims dims;
  double S = 1.0;
  std::size_t T = 2;
  double delta = 0.1;
  double lambda = 1.0;
  double gamma = 0.0;
  /// Set when lambda or gamma did not come from the closed forms above.
  bool overridden = false;
};

PolicyConfig make_policy_config(Algo algo, const Dims& dims, double S,
                                std::size_t T, double delta,
                                const PolicyOverrides& overrides = {});

class Policy {
 public:
  explicit Policy(PolicyConfig config) : config_(std::move(config)) {}
  virtual ~Policy() = default;

  const PolicyConfig& config() const noexcept { return config_; }

  virtual double ucb_score(std::size_t arm, const ArmFeatures& f) const = 0;
  /// Current point estimate of the arm's mean reward.
  virtual double estimated_mean(std::size_t arm, const ArmFeatures& f) const = 0;
  /// Throws std::invalid_argument on non-finite rewards.
  virtual void update(std::size_t arm, const ArmFeatures& f, double reward) = 0;

  /// argmax of ucb_score; ties go to the lowest arm index.
  std::size_t select_arm(const ContextRound& round) const;

 protected:
  static void check_reward(double reward);

 private:
  PolicyConfig config_;
};

/// LinUCB and HyLinUCB.
class SharedPolicy final : public Policy {
 public:
  explicit SharedPolicy(PolicyConfig config);

  double ucb_score(std::size_t arm, const ArmFeatures& f) const override;
  double estimated_mean(std::size_t arm, const ArmFeatures& f) const override;
  void update(std::size_t arm, const ArmFeatures& f, double reward) override;

  const BlockDesign& design() const noexcept { return design_; }
  /// sum_s r_s x~_s in the hybrid layout.
  const Vector& reward_accumulator() const noexcept { return u_acc_; }
  /// M^{-1} u, refreshed after every update.
  const Vector& phi_hat() const noexcept { return phi_hat_; }

 private:
  BlockDesign design_;
  Vector u_acc_;
  Vector phi_hat_;
};

class DisjointPolicy final : public Policy {
 public:
  struct ArmModel {
    SymPosDef design;
    Vector u;
    Vector phi;
    std::size_t pulls = 0;
  };

  explicit DisjointPolicy(PolicyConfig config);

  double ucb_score(std::size_t arm, const ArmFeatures& f) const override;
  double estimated_mean(std::size_t arm, const ArmFeatures& f) const override;
  void update(std::size_t arm, const ArmFeatures& f, double reward) override;

  const ArmModel& arm_model(std::size_t arm) const { return arms_.at(arm); }

 private:
  Vector concat(const ArmFeatures& f) const;
  std::vector<ArmModel> arms_;
};

/// Always plays an arm of maximal true mean reward.
class OraclePolicy final : public Policy {
 public:
  OraclePolicy(PolicyConfig config, HybridParams params);

  double ucb_score(std::size_t arm, const ArmFeatures& f) const override;
  double estimated_mean(std::size_t arm, const ArmFeatures& f) const override;
  void update(std::size_t, const ArmFeatures&, double reward) override;

  const HybridParams& params() const noexcept { return params_; }

 private:
  HybridParams params_;
};

/// params is required for Algo::Oracle and ignored otherwise.
std::unique_ptr<Policy> make_policy(const PolicyConfig& config,
                                    const HybridParams* params = nullptr);

}  // namespace hybandit
