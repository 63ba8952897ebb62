#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "advicl/backend.hpp"
#include "advicl/loss.hpp"
#include "advicl/parallel.hpp"
#include "advicl/prompt.hpp"

namespace advicl {

enum class MetricKind { RougeL, Accuracy, NumericExactMatch };

std::string_view to_string(MetricKind kind) noexcept;
MetricKind parse_metric_kind(std::string_view s);

// ROUGE-L F1 over lowercased whitespace tokens. 0 when either side is empty
// or nothing is shared.
double rouge_l(std::string_view candidate, std::string_view reference);

// Trimmed, lowercased, internal whitespace collapsed to single spaces.
std::string normalize_answer(std::string_view s);

// Number following the last "answer is" cue, else the last number in the
// text. Commas, currency symbols and trailing periods are ignored.
std::optional<double> extract_numeric_answer(std::string_view s);

double score_prediction(MetricKind metric, std::string_view prediction, std::string_view reference);

struct ExampleScore {
  std::size_t sample_id = 0;
  std::string prediction;
  std::string reference;
  double score = 0.0;
};

struct EvalReport {
  MetricKind metric = MetricKind::RougeL;
  double mean_score = 0.0;
  std::vector<ExampleScore> per_example;
  bool complete = true;  // false when generation aborted part way
};

nlohmann::json to_json(const EvalReport& report);

// Generates G_U(x) for every test sample and scores it. Sample i is decoded
// with sample_seed(params.seed, id). If a backend call fails the partial
// report is handed to `on_abort` (when provided) before the error propagates.
EvalReport evaluate_prompt(Backend& generator, const GeneratorPrompt& u, std::span<const TaskSample> testset,
                           MetricKind metric, const GenerationParams& params, Execution exec = Execution::Parallel,
                           const std::function<void(const EvalReport&)>& on_abort = {});

}  // namespace advicl
