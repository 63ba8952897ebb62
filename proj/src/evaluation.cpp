#include "advicl/evaluation.hpp"

#include <cctype>
#include <cmath>
#include <exception>

#include "advicl/errors.hpp"
#include "advicl/text.hpp"

namespace advicl {

std::string_view to_string(MetricKind kind) noexcept {
  switch (kind) {
    case MetricKind::RougeL: return "rouge-l";
    case MetricKind::Accuracy: return "accuracy";
    case MetricKind::NumericExactMatch: return "numeric";
  }
  return "rouge-l";
}

MetricKind parse_metric_kind(std::string_view s) {
  const std::string v = text::to_lower(text::trim(s));
  if (v == "rouge-l" || v == "rougel" || v == "rouge_l") return MetricKind::RougeL;
  if (v == "accuracy") return MetricKind::Accuracy;
  if (v == "numeric" || v == "numeric-exact-match" || v == "numeric_exact_match") return MetricKind::NumericExactMatch;
  throw InvalidArgument("unknown metric '" + std::string(s) + "'");
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const auto cand = text::split_whitespace(text::to_lower(candidate));
  const auto ref = text::split_whitespace(text::to_lower(reference));
  if (cand.empty() || ref.empty()) return 0.0;
  const auto l = static_cast<double>(text::lcs_length(cand, ref));
  if (l == 0.0) return 0.0;
  const double p = l / static_cast<double>(cand.size());
  const double r = l / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

std::string normalize_answer(std::string_view s) {
  const auto tokens = text::split_whitespace(text::to_lower(s));
  return text::join(tokens, " ");
}

namespace {

// Parses numbers like "1,234.5", "-3", "$42." from s. Returns (position, value).
std::vector<std::pair<std::size_t, double>> numbers_in(std::string_view s) {
  std::vector<std::pair<std::size_t, double>> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (!std::isdigit(c)) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    std::string digits;
    bool seen_dot = false;
    while (i < s.size()) {
      const auto d = static_cast<unsigned char>(s[i]);
      if (std::isdigit(d)) {
        digits.push_back(s[i]);
      } else if (s[i] == ',' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
        // thousands separator
      } else if (s[i] == '.' && !seen_dot && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
        seen_dot = true;
        digits.push_back('.');
      } else {
        break;
      }
      ++i;
    }
    std::size_t sign_pos = begin;
    while (sign_pos > 0 && (s[sign_pos - 1] == '$' || s[sign_pos - 1] == '\xa3')) --sign_pos;
    double value = std::stod(digits);
    if (sign_pos > 0 && s[sign_pos - 1] == '-') value = -value;
    out.emplace_back(begin, value);
  }
  return out;
}

}  // namespace

std::optional<double> extract_numeric_answer(std::string_view s) {
  const auto numbers = numbers_in(s);
  if (numbers.empty()) return std::nullopt;
  const std::string lower = text::to_lower(s);
  const std::size_t cue = lower.rfind("answer is");
  if (cue != std::string::npos) {
    for (const auto& [pos, value] : numbers) {
      if (pos > cue) return value;
    }
  }
  return numbers.back().second;
}

double score_prediction(MetricKind metric, std::string_view prediction, std::string_view reference) {
  switch (metric) {
    case MetricKind::RougeL: return rouge_l(prediction, reference);
    case MetricKind::Accuracy: return normalize_answer(prediction) == normalize_answer(reference) ? 1.0 : 0.0;
    case MetricKind::NumericExactMatch: {
      const auto a = extract_numeric_answer(prediction);
      const auto b = extract_numeric_answer(reference);
      return a && b && std::abs(*a - *b) <= 1e-9 * std::max(1.0, std::abs(*b)) ? 1.0 : 0.0;
    }
  }
  return 0.0;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : report.per_example) {
    rows.push_back(
        {{"x_id", e.sample_id}, {"prediction", e.prediction}, {"reference", e.reference}, {"score", e.score}});
  }
  return {{"metric", std::string(to_string(report.metric))},
          {"mean_score", report.mean_score},
          {"count", report.per_example.size()},
          {"complete", report.complete},
          {"per_example", std::move(rows)}};
}

EvalReport evaluate_prompt(Backend& generator, const GeneratorPrompt& u, std::span<const TaskSample> testset,
                           MetricKind metric, const GenerationParams& params, Execution exec,
                           const std::function<void(const EvalReport&)>& on_abort) {
  if (testset.empty()) throw InvalidArgument("evaluation needs at least one test sample");
  params.validate();
  std::vector<std::optional<ExampleScore>> rows(testset.size());
  const std::int64_t base = params.seed.value_or(0);
  try {
    for_each_index(testset.size(), exec, [&](std::size_t i) {
      const auto& sample = testset[i];
      const auto prompt = render_generator_prompt(u, sample.input);
      std::string pred = text::trim(generator.complete(prompt, params.with_seed(sample_seed(base, sample.id))).text);
      const double score = score_prediction(metric, pred, sample.output);
      rows[i] = ExampleScore{sample.id, std::move(pred), sample.output, score};
    });
  } catch (...) {
    if (on_abort) {
      EvalReport partial{metric, 0.0, {}, false};
      for (auto& r : rows) {
        if (r) partial.per_example.push_back(*r);
      }
      double sum = 0.0;
      for (const auto& e : partial.per_example) sum += e.score;
      if (!partial.per_example.empty()) partial.mean_score = sum / static_cast<double>(partial.per_example.size());
      on_abort(partial);
    }
    throw;
  }
  EvalReport report{metric, 0.0, {}, true};
  double sum = 0.0;
  for (auto& r : rows) {
    sum += r->score;
    report.per_example.push_back(std::move(*r));
  }
  report.mean_score = sum / static_cast<double>(report.per_example.size());
  return report;
}

}  // namespace advicl
