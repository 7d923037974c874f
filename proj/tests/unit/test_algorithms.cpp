#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "hybandit/algorithms.hpp"

using namespace hybandit;

namespace {

// T = 2 with delta = 2 / e makes log(T / delta) exactly 1.
constexpr double kT = 2.0;
const double kDeltaUnitLog = 2.0 / std::exp(1.0);

}  // namespace

TEST_SUITE("algorithms") {
  TEST_CASE("exploration_coefficient closed forms") {
    const Dims d{3, 2, 4};
    CHECK(exploration_coefficient(Algo::LinUCB, 1.0, d, kT, kDeltaUnitLog, 1.0) ==
          doctest::Approx(2.0 * 2.0 + std::sqrt(22.0)));
    CHECK(exploration_coefficient(Algo::LinUCB, 1.0, d, kT, kDeltaUnitLog, 1.0) ==
          doctest::Approx(8.6904).epsilon(1e-4));
    CHECK(exploration_coefficient(Algo::HyLinUCB, 1.0, d, kT, kDeltaUnitLog, 4.0) ==
          doctest::Approx(2.0 * (2.0 + std::sqrt(10.0))));
    CHECK(exploration_coefficient(Algo::HyLinUCB, 1.0, d, kT, kDeltaUnitLog, 4.0) ==
          doctest::Approx(10.3246).epsilon(1e-4));
    // log(K T / delta) = 1 with K = 1.
    const Dims d1{3, 2, 1};
    CHECK(exploration_coefficient(Algo::DisLinUCB, 1.0, d1, kT, kDeltaUnitLog, 1.0) ==
          doctest::Approx(2.0 + std::sqrt(10.0)));
    CHECK(exploration_coefficient(Algo::DisLinUCB, 1.0, d1, kT, kDeltaUnitLog, 1.0) ==
          doctest::Approx(5.1623).epsilon(1e-4));
  }

  TEST_CASE("exploration_coefficient alternative forms") {
    const Dims d{3, 2, 4};
    CHECK(exploration_coefficient(Algo::LinUCB, 1.0, d, kT, kDeltaUnitLog, 1.0, GammaForm::MainText) ==
          doctest::Approx(2.0 + std::sqrt(22.0)));
    CHECK(exploration_coefficient(Algo::HyLinUCB, 1.0, d, kT, kDeltaUnitLog, 4.0, GammaForm::Appendix) ==
          doctest::Approx(2.0 * (std::sqrt(8.0) + std::sqrt(10.0))));
    // LinUCB scales its S term with sqrt(lambda).
    CHECK(exploration_coefficient(Algo::LinUCB, 1.0, d, kT, kDeltaUnitLog, 4.0) ==
          doctest::Approx(2.0 * 4.0 + std::sqrt(22.0)));
  }

  TEST_CASE("exploration_coefficient rejects invalid arguments") {
    const Dims d{3, 2, 4};
    CHECK_THROWS_AS(exploration_coefficient(Algo::LinUCB, 1.0, d, 100, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(exploration_coefficient(Algo::LinUCB, 1.0, d, 100, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(exploration_coefficient(Algo::LinUCB, 1.0, d, 1, 0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(exploration_coefficient(Algo::LinUCB, 0.0, d, 100, 0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(exploration_coefficient(Algo::Oracle, 1.0, d, 100, 0.1, 1.0), std::invalid_argument);
  }

  TEST_CASE("default_lambda") {
    CHECK(default_lambda(Algo::LinUCB, 25) == 1.0);
    CHECK(default_lambda(Algo::HyLinUCB, 25) == 25.0);
    CHECK(default_lambda(Algo::DisLinUCB, 400) == 1.0);
  }

  TEST_CASE("parse_algo") {
    CHECK(parse_algo("HyLinUCB") == Algo::HyLinUCB);
    CHECK(parse_algo("linucb") == Algo::LinUCB);
    CHECK(parse_algo("DISLINUCB") == Algo::DisLinUCB);
    CHECK(parse_algo("oracle") == Algo::Oracle);
    CHECK_THROWS_AS(parse_algo("hyran"), std::invalid_argument);
    CHECK(to_string(Algo::DisLinUCB) == "DisLinUCB");
  }

  TEST_CASE("make_policy_config records overrides") {
    const Dims d{3, 2, 4};
    const PolicyConfig c = make_policy_config(Algo::HyLinUCB, d, 1.0, 1000, 0.1);
    CHECK(c.lambda == 4.0);
    CHECK(c.gamma == doctest::Approx(exploration_coefficient(Algo::HyLinUCB, 1.0, d, 1000, 0.1, 4.0)));
    CHECK_FALSE(c.overridden);
    const PolicyConfig o = make_policy_config(Algo::LinUCB, d, 1.0, 1000, 0.1, {2.0, 0.5, GammaForm::Default});
    CHECK(o.lambda == 2.0);
    CHECK(o.gamma == 0.5);
    CHECK(o.overridden);
    CHECK_THROWS_AS(make_policy_config(Algo::LinUCB, d, 1.0, 1000, 0.1, {-1.0, {}, GammaForm::Default}),
                    std::invalid_argument);
  }

  TEST_CASE("fresh shared policy scores gamma ||x~|| / sqrt(lambda)") {
    const Dims d{2, 2, 3};
    PolicyConfig c = make_policy_config(Algo::HyLinUCB, d, 1.0, 100, 0.1);
    SharedPolicy p(c);
    const ArmFeatures f{{0.6, 0.0}, {0.0, 0.8}};
    CHECK(p.ucb_score(1, f) == doctest::Approx(c.gamma * 1.0 / std::sqrt(c.lambda)));
    CHECK(p.estimated_mean(1, f) == 0.0);

    PolicyConfig g0 = make_policy_config(Algo::LinUCB, d, 1.0, 100, 0.1, {{}, 0.0, GammaForm::Default});
    SharedPolicy q(g0);
    q.update(0, f, 0.7);
    CHECK(q.ucb_score(0, f) == doctest::Approx(q.estimated_mean(0, f)));
  }

  TEST_CASE("select_arm on a fresh state follows the feature norm") {
    const Dims d{2, 1, 3};
    SharedPolicy p(make_policy_config(Algo::LinUCB, d, 1.0, 100, 0.1));
    ContextRound r{{{{0.9, 0.0}, {0.3}}, {{0.5, 0.0}, {0.3}}, {{0.1, 0.0}, {0.3}}}};
    CHECK(p.select_arm(r) == 0);
    ContextRound same{{{{0.5, 0.5}, {0.5}}, {{0.5, 0.5}, {0.5}}, {{0.5, 0.5}, {0.5}}}};
    CHECK(p.select_arm(same) == 0);
    DisjointPolicy q(make_policy_config(Algo::DisLinUCB, d, 1.0, 100, 0.1));
    CHECK(q.select_arm(same) == 0);
    CHECK_THROWS_AS(p.select_arm(ContextRound{}), std::invalid_argument);
  }

  TEST_CASE("update with x~ = 0 leaves phi_hat unchanged") {
    const Dims d{2, 2, 2};
    SharedPolicy p(make_policy_config(Algo::LinUCB, d, 1.0, 100, 0.1));
    p.update(0, {{0.3, 0.4}, {0.1, 0.0}}, 1.0);
    const Vector before = p.phi_hat();
    p.update(1, {{0.0, 0.0}, {0.0, 0.0}}, 5.0);
    CHECK(p.phi_hat() == before);
    CHECK(p.design().round() == 2);
  }

  TEST_CASE("single observation: phi_hat = r x~ / (lambda + ||x~||^2)") {
    const Dims d{2, 2, 3};
    const double lambda = 3.0, r = 0.8;
    SharedPolicy p(make_policy_config(Algo::HyLinUCB, d, 1.0, 100, 0.1));
    REQUIRE(p.config().lambda == lambda);
    const ArmFeatures f{{0.3, -0.4}, {0.5, 0.1}};
    p.update(2, f, r);
    const Vector x = embed(2, f.x, f.z, d).dense(3);
    const double n2 = dot(x, x);
    for (std::size_t k = 0; k < x.size(); ++k)
      CHECK(p.phi_hat()[k] == doctest::Approx(r * x[k] / (lambda + n2)).epsilon(1e-12));
  }

  TEST_CASE("non-finite rewards are rejected") {
    const Dims d{1, 1, 1};
    SharedPolicy p(make_policy_config(Algo::LinUCB, d, 1.0, 100, 0.1));
    CHECK_THROWS_AS(p.update(0, {{0.1}, {0.1}}, NAN), std::invalid_argument);
    DisjointPolicy q(make_policy_config(Algo::DisLinUCB, d, 1.0, 100, 0.1));
    CHECK_THROWS_AS(q.update(0, {{0.1}, {0.1}}, INFINITY), std::invalid_argument);
    CHECK_NOTHROW(q.update(0, {{0.1}, {0.1}}, 123.0));
  }

  TEST_CASE("shared policies match the dense reference over 300 updates") {
    oracle::Gen g(1);
    for (Algo algo : {Algo::LinUCB, Algo::HyLinUCB}) {
      const Dims d{3, 2, 4};
      const HybridParams star = g.params(d);
      const PolicyConfig c = make_policy_config(algo, d, 1.0, 300, 0.1);
      SharedPolicy p(c);
      oracle::DenseLinUCB ref(d, c.lambda, c.gamma);
      for (int t = 0; t < 300; ++t) {
        const ContextRound r = g.round(d);
        const std::size_t arm = g.index(d.K);
        const double y = mean_reward(star, arm, r.arms[arm].x, r.arms[arm].z) + 0.1 * g.normal();
        for (std::size_t i = 0; i < d.K; ++i)
          CHECK(p.ucb_score(i, r.arms[i]) == doctest::Approx(ref.score(i, r.arms[i])).epsilon(1e-8));
        CHECK(p.select_arm(r) == ref.select(r));
        p.update(arm, r.arms[arm], y);
        ref.update(arm, r.arms[arm], y);
      }
      const Eigen::VectorXd phi = ref.phi();
      for (std::size_t k = 0; k < p.phi_hat().size(); ++k)
        CHECK(std::abs(p.phi_hat()[k] - phi(k)) <= 1e-8);
    }
  }

  TEST_CASE("argmax is invariant to positive scaling of scores") {
    oracle::Gen g(2);
    const Dims d{2, 2, 5};
    const PolicyConfig c = make_policy_config(Algo::HyLinUCB, d, 1.0, 1000, 0.1);
    SharedPolicy p(c);
    for (int t = 0; t < 50; ++t) {
      const ContextRound r = g.round(d);
      p.update(g.index(d.K), r.arms[0], g.normal());
    }
    // Scaling u_acc and gamma by s scales both score terms by s.
    for (int rep = 0; rep < 30; ++rep) {
      const ContextRound r = g.round(d);
      std::size_t best = 0, best_scaled = 0;
      double bs = -INFINITY, bss = -INFINITY;
      for (std::size_t i = 0; i < d.K; ++i) {
        const double s = p.ucb_score(i, r.arms[i]);
        if (s > bs) bs = s, best = i;
        if (3.5 * s > bss) bss = 3.5 * s, best_scaled = i;
      }
      CHECK(best == best_scaled);
      CHECK(p.select_arm(r) == best);
    }
  }

  TEST_CASE("DisLinUCB matches a per-arm dense reference") {
    oracle::Gen g(3);
    const Dims d{3, 2, 4};
    const HybridParams star = g.params(d);
    const PolicyConfig c = make_policy_config(Algo::DisLinUCB, d, 1.0, 300, 0.1);
    DisjointPolicy p(c);
    oracle::DenseDisjoint ref(d, c.lambda, c.gamma);
    for (int t = 0; t < 300; ++t) {
      const ContextRound r = g.round(d);
      CHECK(p.select_arm(r) == ref.select(r));
      const std::size_t arm = p.select_arm(r);
      const double y = mean_reward(star, arm, r.arms[arm].x, r.arms[arm].z) + 0.1 * g.normal();
      p.update(arm, r.arms[arm], y);
      ref.update(arm, r.arms[arm], y);
    }
    for (std::size_t i = 0; i < d.K; ++i) {
      const Eigen::VectorXd phi = ref.phi(i);
      for (std::size_t k = 0; k < phi.size(); ++k) CHECK(std::abs(p.arm_model(i).phi[k] - phi(k)) <= 1e-8);
    }
  }

  TEST_CASE("DisLinUCB arm state depends only on that arm's pulls") {
    oracle::Gen g(4);
    const Dims d{2, 2, 3};
    const PolicyConfig c = make_policy_config(Algo::DisLinUCB, d, 1.0, 100, 0.1);
    DisjointPolicy a(c), b(c);
    std::vector<std::pair<ArmFeatures, double>> arm1;
    for (int t = 0; t < 40; ++t) {
      const ContextRound r = g.round(d);
      const std::size_t arm = g.index(3);
      const double y = g.normal();
      a.update(arm, r.arms[arm], y);
      if (arm == 1) arm1.push_back({r.arms[arm], y});
    }
    for (const auto& [f, y] : arm1) b.update(1, f, y);
    CHECK(a.arm_model(1).phi == b.arm_model(1).phi);
    CHECK(a.arm_model(1).design.entries() == b.arm_model(1).design.entries());
    CHECK(a.arm_model(1).pulls == arm1.size());
  }

  TEST_CASE("oracle policy picks a maximizer") {
    oracle::Gen g(5);
    const Dims d{3, 3, 6};
    const HybridParams star = g.params(d);
    const auto p = make_policy(make_policy_config(Algo::Oracle, d, 1.0, 100, 0.1), &star);
    for (int t = 0; t < 200; ++t) {
      const ContextRound r = g.round(d);
      CHECK(instantaneous_regret(star, r, p->select_arm(r)) == 0.0);
    }
    CHECK_THROWS_AS(make_policy(make_policy_config(Algo::Oracle, d, 1.0, 100, 0.1)), std::invalid_argument);
    CHECK_THROWS_AS(OraclePolicy(make_policy_config(Algo::Oracle, Dims{1, 1, 1}, 1.0, 100, 0.1), star),
                    std::invalid_argument);
  }
}
