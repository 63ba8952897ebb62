#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "advicl/backend.hpp"

namespace advicl {

enum class SlotKind { Instruction, OpenEndedDemo, MultipleChoiceDemo };

std::string_view to_string(SlotKind kind) noexcept;
SlotKind parse_slot_kind(std::string_view s);

inline constexpr std::string_view kStartMarker = "<START>";
inline constexpr std::string_view kEndMarker = "<END>";

// Modifier prompt templates. "{r}" is replaced by the requested count and
// "{initial_instruction}" by the content where present; otherwise the content
// follows the template after a blank line.
struct ModifierTemplates {
  std::string instruction =
      "Generate {r} variations of the following instruction while keeping the semantic meaning. Keep the generated "
      "instructions as declarative. Wrap each with <START> and <END>.";
  std::string open_ended_demo =
      "Generate {r} variations of the following example to make them more representative. Keep the format as "
      "Input: and Output:. Wrap each with <START> and <END>.";
  std::string multiple_choice_demo =
      "Generate {r} variations of the following multiple-choice question and the answer to make them more "
      "representative. Keep the format as multiple-choice question and the answer. Keep the format as Input: and "
      "Output:. Wrap each with <START> and <END>.";
  // Paraphrase-selection baselines. The prompt builder appends the marker line.
  std::string paraphrase_instruction = "Write for me {r} paraphrases of the {initial_instruction}:";
  std::string paraphrase_demo =
      "Write {r} paraphrases for the following example. Keep the format as Input: and Output:. End the answer by "
      "So the answer is:";

  const std::string& for_kind(SlotKind kind) const;
};

ModifierTemplates modifier_templates_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModifierTemplates& t);

struct VariantBatch {
  std::string source;
  std::vector<std::string> variants;  // 1..r, distinct, nonempty
  std::string raw;
};

std::string build_modifier_prompt(SlotKind kind, std::string_view content, int r,
                                  const ModifierTemplates& templates = {});
std::string build_paraphrase_prompt(SlotKind kind, std::string_view content, int n,
                                    const ModifierTemplates& templates = {});

// Text between successive <START>/<END> markers, trimmed, empties dropped,
// deduplicated in first-seen order, at most r. Throws NoVariantsFound.
std::vector<std::string> parse_variants(std::string_view raw, int r);

// Samples the modifier once (and once more with a perturbed seed if nothing
// usable comes back). Demo variants that do not parse as Input/Output blocks
// are dropped.
VariantBatch propose_variants(Backend& modifier, SlotKind kind, std::string_view content, int r,
                              const GenerationParams& params, const ModifierTemplates& templates = {});

// Same, with the paraphrase-baseline templates.
VariantBatch propose_paraphrases(Backend& modifier, SlotKind kind, std::string_view content, int n,
                                 const GenerationParams& params, const ModifierTemplates& templates = {});

}  // namespace advicl
