#include "advicl/baselines.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "advicl/errors.hpp"
#include "advicl/evaluation.hpp"
#include "advicl/text.hpp"

namespace advicl {

std::string_view to_string(SelectionCriterion c) noexcept {
  return c == SelectionCriterion::RougeLScore ? "rouge-l" : "perplexity";
}

SelectionCriterion parse_selection_criterion(std::string_view s) {
  const std::string v = text::to_lower(text::trim(s));
  if (v == "rouge-l" || v == "rougel" || v == "rouge_l") return SelectionCriterion::RougeLScore;
  if (v == "perplexity" || v == "ppl") return SelectionCriterion::Perplexity;
  throw InvalidArgument("unknown selection criterion '" + std::string(s) + "'");
}

double perplexity(Backend& backend, std::string_view t) {
  if (text::trim(t).empty()) throw InvalidArgument("perplexity of empty text");
  const auto tokens = backend.score_text(t);
  if (tokens.empty()) throw LogprobsUnsupported("backend returned no token logprobs for perplexity");
  double sum = 0.0;
  for (const auto& tl : tokens) sum += tl.logprob;
  return std::exp(-sum / static_cast<double>(tokens.size()));
}

nlohmann::json to_json(const SlotSelection& s) {
  return {{"slot", s.slot.describe()},
          {"incumbent_score", s.incumbent_score},
          {"candidate_scores", s.candidate_scores},
          {"chosen", s.chosen ? nlohmann::json(*s.chosen) : nlohmann::json(nullptr)},
          {"candidates", s.candidates}};
}

double criterion_score(SelectionCriterion criterion, Backend& generator, const GeneratorPrompt& u,
                       std::span<const TaskSample> devset, const ParaphraseConfig& cfg) {
  if (criterion == SelectionCriterion::Perplexity) {
    return perplexity(generator, render_generator_prompt(u, cfg.perplexity_query));
  }
  return evaluate_prompt(generator, u, devset, MetricKind::RougeL, cfg.gen_params.with_seed(cfg.seed), Execution::Serial)
      .mean_score;
}

SelectionResult paraphrase_select(Backend& modifier, Backend& generator, const GeneratorPrompt& u0,
                                  std::span<const TaskSample> devset, SelectionCriterion criterion,
                                  const ParaphraseConfig& cfg, const ModifierTemplates& templates) {
  if (devset.empty()) throw InvalidArgument("paraphrase selection needs a nonempty dev set");
  if (cfg.paraphrases <= 0) throw InvalidArgument("paraphrase count must be positive");
  const bool lower_is_better = criterion == SelectionCriterion::Perplexity;

  SelectionResult result{u0, {}};
  for (const auto& slot : slots_of(u0.demos().size())) {
    SlotSelection sel;
    sel.slot = slot;
    sel.incumbent_score = criterion_score(criterion, generator, result.prompt, devset, cfg);
    const SlotKind kind = slot.kind() == PromptSlot::Kind::Instruction ? SlotKind::Instruction : cfg.demo_kind;
    const auto seed = static_cast<std::int64_t>(
        text::hash_combine(static_cast<std::uint64_t>(cfg.seed), slot.kind() == PromptSlot::Kind::Instruction ? 0 : slot.index() + 1) >> 1);
    try {
      sel.candidates = propose_paraphrases(modifier, kind, slot_content(result.prompt, slot), cfg.paraphrases,
                                           cfg.mod_params.with_seed(seed), templates)
                           .variants;
    } catch (const NoVariantsFound& e) {
      spdlog::warn("{}: {}; keeping the incumbent", slot.describe(), e.what());
      result.slots.push_back(std::move(sel));
      continue;
    }

    std::vector<std::optional<GeneratorPrompt>> prompts(sel.candidates.size());
    std::vector<double> scores(sel.candidates.size(), std::nan(""));
    for_each_index(sel.candidates.size(), cfg.execution, [&](std::size_t i) {
      try {
        prompts[i] = apply_edit(result.prompt, slot, sel.candidates[i]);
      } catch (const Error&) {
        return;
      }
      scores[i] = criterion_score(criterion, generator, *prompts[i], devset, cfg);
    });
    sel.candidate_scores = scores;

    double best = sel.incumbent_score;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (!prompts[i] || std::isnan(scores[i])) continue;
      if (lower_is_better ? scores[i] < best : scores[i] > best) {
        best = scores[i];
        sel.chosen = i;
      }
    }
    if (sel.chosen) result.prompt = *prompts[*sel.chosen];
    result.slots.push_back(std::move(sel));
  }
  return result;
}

}  // namespace advicl
