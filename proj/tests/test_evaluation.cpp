#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "advicl/errors.hpp"
#include "advicl/evaluation.hpp"
#include "advicl/synthetic_backend.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace advicl;

TEST_SUITE("evaluation") {
  TEST_CASE("rouge-l examples") {
    CHECK(rouge_l("the cat sat", "the cat sat") == 1.0);
    CHECK(rouge_l("police kill the gunman", "police killed the gunman") == 0.75);
    CHECK(rouge_l("", "anything at all") == 0.0);
    CHECK(rouge_l("anything", "") == 0.0);
    CHECK(rouge_l("a b", "c d") == 0.0);
    CHECK(rouge_l("The CAT", "the cat") == 1.0);
  }

  TEST_CASE("rouge-l agrees with subset enumeration and is symmetric") {
    std::mt19937_64 rng(2024);
    const std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
    for (int n = 0; n < 300; ++n) {
      std::vector<std::string> x(rng() % 13), y(rng() % 13);
      for (auto& t : x) t = vocab[rng() % vocab.size()];
      for (auto& t : y) t = vocab[rng() % vocab.size()];
      const std::string xs = text::join(x, " ");
      const std::string ys = text::join(y, " ");
      const double want = oracle::rouge_f1(oracle::lcs_enumerate(x, y), x.size(), y.size());
      CHECK(rouge_l(xs, ys) == want);
      CHECK(rouge_l(ys, xs) == rouge_l(xs, ys));
      CHECK(rouge_l(xs, ys) <= 1.0);
      CHECK((rouge_l(xs, ys) == 1.0) == (!x.empty() && x == y));
    }
  }

  TEST_CASE("numeric answer extraction") {
    CHECK(extract_numeric_answer("…so the answer is 42.") == 42.0);
    CHECK(extract_numeric_answer("3 + 4 = 7") == 7.0);
    CHECK_FALSE(extract_numeric_answer("no digits here"));
    CHECK(extract_numeric_answer("The answer is $1,250.") == 1250.0);
    CHECK(extract_numeric_answer("so the answer is -3.5, not 8") == -3.5);
    CHECK(extract_numeric_answer("first 5 then the answer is 6 and 9") == 6.0);
  }

  TEST_CASE("scoring by metric") {
    CHECK(score_prediction(MetricKind::Accuracy, "  (A)  Yes ", "(a) yes") == 1.0);
    CHECK(score_prediction(MetricKind::Accuracy, "(B)", "(a)") == 0.0);
    CHECK(score_prediction(MetricKind::NumericExactMatch, "so the answer is 12", "#### 12") == 1.0);
    CHECK(score_prediction(MetricKind::NumericExactMatch, "no idea", "12") == 0.0);
    CHECK(normalize_answer("  A \t b\nC ") == "a b c");
    CHECK(parse_metric_kind("rouge-l") == MetricKind::RougeL);
    CHECK_THROWS_AS(parse_metric_kind("bleu"), InvalidArgument);
  }

  TEST_CASE("perfect generator scores 1 and reports are reproducible") {
    SyntheticConfig cfg;
    cfg.base_quality = 1.0;
    SyntheticBackend g(cfg);
    const auto task = advicl::testing::make_synthetic_task(1);
    const auto p = GenerationParams{}.with_seed(5);
    const auto r = evaluate_prompt(g, task.u0, task.test, MetricKind::RougeL, p);
    CHECK(r.mean_score == 1.0);
    CHECK(r.complete);
    CHECK(r.per_example.size() == task.test.size());

    SyntheticBackend noisy({});
    const auto a = evaluate_prompt(noisy, task.u0, task.test, MetricKind::RougeL, p);
    const auto b = evaluate_prompt(noisy, task.u0, task.test, MetricKind::RougeL, p, Execution::Serial);
    CHECK(a.mean_score == b.mean_score);
    CHECK(to_json(a) == to_json(b));
    double sum = 0.0;
    for (const auto& e : a.per_example) sum += e.score;
    CHECK(a.mean_score == doctest::Approx(sum / static_cast<double>(a.per_example.size())).epsilon(1e-15));
  }

  TEST_CASE("mean score is permutation invariant") {
    SyntheticBackend g({});
    auto task = advicl::testing::make_synthetic_task(3);
    const auto p = GenerationParams{}.with_seed(1);
    const double before = evaluate_prompt(g, task.u0, task.test, MetricKind::RougeL, p).mean_score;
    std::reverse(task.test.begin(), task.test.end());
    CHECK(evaluate_prompt(g, task.u0, task.test, MetricKind::RougeL, p).mean_score == doctest::Approx(before).epsilon(1e-14));
  }

  TEST_CASE("aborted evaluation hands over a partial report") {
    auto budget = std::make_shared<CallBudget>(3);
    auto g = with_budget(std::make_shared<SyntheticBackend>(SyntheticConfig{}), budget);
    const auto task = advicl::testing::make_synthetic_task(2);
    std::optional<EvalReport> partial;
    CHECK_THROWS_AS(evaluate_prompt(*g, task.u0, task.test, MetricKind::RougeL, {}, Execution::Serial,
                                    [&](const EvalReport& r) { partial = r; }),
                    BudgetExceeded);
    REQUIRE(partial);
    CHECK_FALSE(partial->complete);
    CHECK(partial->per_example.size() == 3);
  }
}
