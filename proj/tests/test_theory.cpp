#include <doctest.h>

#include <cmath>
#include <random>

#include "advicl/errors.hpp"
#include "advicl/theory.hpp"
#include "oracles.hpp"

using namespace advicl;
using namespace advicl::theory;

namespace {
const double kTwoLnHalf = -2.0 * std::log(2.0);
}

TEST_SUITE("theory_sim") {
  TEST_CASE("distribution validation") {
    CHECK_THROWS_AS(FiniteDistribution({0.5, 0.6}), InvalidArgument);
    CHECK_THROWS_AS(FiniteDistribution({-0.1, 1.1}), InvalidArgument);
    CHECK_THROWS_AS(FiniteDistribution({}), InvalidArgument);
    const auto d = FiniteDistribution::from_weights({1, 3});
    CHECK(d[1] == 0.75);
  }

  TEST_CASE("optimal discriminator closed form") {
    const FiniteDistribution p({0.8, 0.2});
    for (double v : optimal_discriminator(p, p)) CHECK(v == 0.5);
    CHECK(optimal_discriminator(p, FiniteDistribution({0.2, 0.8}))[0] == doctest::Approx(0.8).epsilon(1e-15));
    const auto d = optimal_discriminator(FiniteDistribution({0.0, 1.0}), FiniteDistribution({0.5, 0.5}));
    CHECK(d[0] == 0.0);
    const auto both_zero = optimal_discriminator(FiniteDistribution({0.0, 1.0}), FiniteDistribution({0.0, 1.0}));
    CHECK(both_zero[0] == 0.5);
  }

  TEST_CASE("ideal loss examples") {
    const FiniteDistribution a({0.8, 0.2});
    const FiniteDistribution b({0.2, 0.8});
    CHECK(std::abs(ideal_loss(a, a) - kTwoLnHalf) < 1e-15);
    CHECK(std::abs(ideal_loss(a, b) - (-1.0008048470763757)) < 1e-12);
    CHECK(ideal_loss(FiniteDistribution({1, 0}), FiniteDistribution({0, 1})) == 0.0);
  }

  TEST_CASE("jsd examples") {
    const FiniteDistribution a({0.8, 0.2});
    CHECK(jsd(a, a) == 0.0);
    CHECK(jsd(FiniteDistribution({1, 0}), FiniteDistribution({0, 1})) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(std::abs(jsd(a, FiniteDistribution({0.2, 0.8})) - 0.19274475702175753) < 1e-12);
  }

  TEST_CASE("closed forms agree with the oracle and the identity") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n = 0; n < 200; ++n) {
      const std::size_t k = 2 + rng() % 15;
      std::vector<double> wp(k), wq(k);
      for (std::size_t i = 0; i < k; ++i) {
        wp[i] = rng() % 5 == 0 ? 0.0 : u(rng);
        wq[i] = rng() % 5 == 0 ? 0.0 : u(rng);
      }
      wp[0] += 0.1;
      wq[k - 1] += 0.1;
      const auto p = FiniteDistribution::from_weights(wp);
      const auto q = FiniteDistribution::from_weights(wq);
      const std::vector<double> pv(p.probs().begin(), p.probs().end());
      const std::vector<double> qv(q.probs().begin(), q.probs().end());
      CHECK(ideal_loss(p, q) == doctest::Approx(oracle::ideal_loss(pv, qv)).epsilon(1e-12));
      CHECK(jsd(p, q) == doctest::Approx(oracle::jsd(pv, qv)).epsilon(1e-12));
      CHECK(std::abs(ideal_loss(p, q) - (kTwoLnHalf + 2.0 * jsd(p, q))) < 1e-10);
      CHECK(ideal_loss(p, q) >= kTwoLnHalf - 1e-15);
    }
  }

  TEST_CASE("fixed point stays put") {
    const FiniteDistribution p({0.1, 0.2, 0.7});
    const auto t = simulate_convergence(p, p, 50, 0.5);
    REQUIRE(t.steps.size() == 51);
    for (const auto& s : t.steps) {
      CHECK(std::abs(s.loss - kTwoLnHalf) < 1e-12);
      CHECK(s.jsd < 1e-15);
    }
  }

  TEST_CASE("convergence from (0.3, 0.7) to (0.7, 0.3)") {
    const auto t = simulate_convergence(FiniteDistribution({0.7, 0.3}), FiniteDistribution({0.3, 0.7}), 500, 0.5);
    REQUIRE(t.steps.size() == 501);
    CHECK(t.steps.back().jsd < 1e-3);
    CHECK(std::abs(t.steps.back().loss - kTwoLnHalf) < 1e-3);
    for (std::size_t i = 1; i < t.steps.size(); ++i) {
      CHECK(t.steps[i].loss <= t.steps[i - 1].loss + 1e-12);
      double sum = 0.0;
      for (double x : t.steps[i].p_g) {
        CHECK(x >= 0.0);
        sum += x;
      }
      CHECK(std::abs(sum - 1.0) < 1e-10);
    }
  }

  TEST_CASE("simulation arguments are validated") {
    const FiniteDistribution p({0.5, 0.5});
    CHECK_THROWS_AS(simulate_convergence(p, p, 0, 0.5), InvalidArgument);
    CHECK_THROWS_AS(simulate_convergence(p, p, 10, 0.0), InvalidArgument);
    CHECK_THROWS_AS(simulate_convergence(p, p, 10, 1.5), InvalidArgument);
    CHECK_THROWS_AS(simulate_convergence(p, FiniteDistribution({0.2, 0.3, 0.5}), 10, 0.5), DimensionMismatch);
  }
}
