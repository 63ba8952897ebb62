#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "advicl/backend.hpp"
#include "advicl/loss.hpp"
#include "advicl/modifier.hpp"
#include "advicl/parallel.hpp"
#include "advicl/prompt.hpp"

namespace advicl {

enum class SelectionCriterion { RougeLScore, Perplexity };

std::string_view to_string(SelectionCriterion c) noexcept;
SelectionCriterion parse_selection_criterion(std::string_view s);

// exp(-mean token logprob) of `text` under the backend.
double perplexity(Backend& backend, std::string_view text);

struct ParaphraseConfig {
  int paraphrases = 15;
  SlotKind demo_kind = SlotKind::OpenEndedDemo;
  GenerationParams gen_params{0.6, 0.9, 256, std::nullopt};
  GenerationParams mod_params{0.6, 0.9, 1024, std::nullopt};
  std::int64_t seed = 0;
  // Query appended when scoring a prompt's perplexity.
  std::string perplexity_query = "example input";
  Execution execution = Execution::Parallel;
};

struct SlotSelection {
  PromptSlot slot = PromptSlot::instruction();
  double incumbent_score = 0.0;
  std::vector<double> candidate_scores;
  std::optional<std::size_t> chosen;  // index into the candidates, if one replaced the incumbent
  std::vector<std::string> candidates;
};

nlohmann::json to_json(const SlotSelection& s);

struct SelectionResult {
  GeneratorPrompt prompt;
  std::vector<SlotSelection> slots;
};

// Score of a whole prompt under a criterion: mean ROUGE-L of its generations
// on the dev set (higher is better) or the perplexity of the rendered prompt
// (lower is better).
double criterion_score(SelectionCriterion criterion, Backend& generator, const GeneratorPrompt& u,
                       std::span<const TaskSample> devset, const ParaphraseConfig& cfg);

// Greedy slot-by-slot paraphrase selection: instruction first, then each
// demo. A candidate replaces the incumbent only if strictly better.
SelectionResult paraphrase_select(Backend& modifier, Backend& generator, const GeneratorPrompt& u0,
                                  std::span<const TaskSample> devset, SelectionCriterion criterion,
                                  const ParaphraseConfig& cfg = {}, const ModifierTemplates& templates = {});

}  // namespace advicl
