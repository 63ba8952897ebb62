// Serial reference vs OpenMP paths for loss estimation and test-set evaluation,
// against the synthetic backend with a simulated per-request latency.

#include <benchmark/benchmark.h>

#include "advicl/evaluation.hpp"
#include "advicl/loss.hpp"
#include "advicl/synthetic_backend.hpp"
#include "advicl/text.hpp"

namespace {

using namespace advicl;

std::vector<TaskSample> make_pool(std::size_t n) {
  std::vector<TaskSample> pool;
  for (std::size_t i = 0; i < n; ++i) {
    std::string x;
    for (std::size_t j = 0; j < 12; ++j) x += "w" + std::to_string(text::mix64(i * 31 + j) % 97) + " ";
    auto toks = text::split_whitespace(x);
    std::reverse(toks.begin(), toks.end());
    pool.emplace_back(i, x, text::join(toks, " "));
  }
  return pool;
}

SyntheticBackend& backend(long latency_us) {
  static std::map<long, std::unique_ptr<SyntheticBackend>> cache;
  auto& b = cache[latency_us];
  if (!b) {
    SyntheticConfig c;
    c.latency = std::chrono::microseconds(latency_us);
    b = std::make_unique<SyntheticBackend>(c);
  }
  return *b;
}

const GeneratorPrompt kPrompt("Reverse the order of the words. Keep every word.");
const DiscriminatorPrompt kDisc("Check the word order.", {LabeledDemonstration("a b c", "c b a", Label::Real)});

void BM_EstimateLoss(benchmark::State& state, Execution exec) {
  const auto batch = make_pool(static_cast<std::size_t>(state.range(0)));
  auto& b = backend(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        estimate_loss(b, b, kPrompt, kDisc, batch, GenerationParams{}.with_seed(1), kDefaultClampEps, exec).value);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Evaluate(benchmark::State& state, Execution exec) {
  const auto test = make_pool(static_cast<std::size_t>(state.range(0)));
  auto& b = backend(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        evaluate_prompt(b, kPrompt, test, MetricKind::RougeL, GenerationParams{}.with_seed(1), exec).mean_score);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(BM_EstimateLoss, serial, Execution::Serial)->Args({8, 0})->Args({64, 0})->Args({8, 200})->UseRealTime();
BENCHMARK_CAPTURE(BM_EstimateLoss, parallel, Execution::Parallel)->Args({8, 0})->Args({64, 0})->Args({8, 200})->UseRealTime();
BENCHMARK_CAPTURE(BM_Evaluate, serial, Execution::Serial)->Args({256, 0})->Args({64, 200})->UseRealTime();
BENCHMARK_CAPTURE(BM_Evaluate, parallel, Execution::Parallel)->Args({256, 0})->Args({64, 200})->UseRealTime();

BENCHMARK_MAIN();
