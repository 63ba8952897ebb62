#include "advicl/modifier.hpp"

#include <algorithm>
#include <set>

#include <spdlog/spdlog.h>

#include "advicl/errors.hpp"
#include "advicl/prompt.hpp"
#include "advicl/text.hpp"

namespace advicl {

namespace {

constexpr std::string_view kWrapLine = "Wrap each with <START> and <END>.";

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

void check_request(std::string_view content, int r) {
  if (text::trim(content).empty()) throw InvalidArgument("modifier content must be nonempty");
  if (r <= 0) throw InvalidArgument("variant count must be positive");
}

std::string fill(std::string tmpl, std::string_view content, int r) {
  replace_all(tmpl, "{r}", std::to_string(r));
  if (tmpl.find("{initial_instruction}") != std::string::npos) {
    replace_all(tmpl, "{initial_instruction}", text::trim(content));
    return tmpl;
  }
  return tmpl + "\n\n" + text::trim(content);
}

template <typename BuildPrompt>
VariantBatch sample_variants(Backend& modifier, SlotKind kind, std::string_view content, int r,
                             const GenerationParams& params, BuildPrompt&& build) {
  check_request(content, r);
  const std::string prompt = build();
  VariantBatch batch{text::trim(content), {}, {}};
  const std::int64_t seed = params.seed.value_or(0);
  for (int attempt = 0; attempt < 2; ++attempt) {
    const auto p = attempt == 0 ? params : params.with_seed(static_cast<std::int64_t>(
                                               text::hash_combine(static_cast<std::uint64_t>(seed), 0x7e57) >> 1));
    batch.raw = modifier.complete(prompt, p).text;
    std::vector<std::string> parsed;
    try {
      parsed = parse_variants(batch.raw, r);
    } catch (const NoVariantsFound&) {
      spdlog::warn("modifier returned no marked variants (attempt {})", attempt + 1);
      continue;
    }
    if (kind != SlotKind::Instruction) {
      std::erase_if(parsed, [](const std::string& v) {
        try {
          parse_demo_block(v);
          return false;
        } catch (const Error&) {
          spdlog::debug("dropping malformed demo variant");
          return true;
        }
      });
    }
    if (parsed.empty()) {
      spdlog::warn("modifier returned no well-formed variants (attempt {})", attempt + 1);
      continue;
    }
    if (static_cast<int>(parsed.size()) < r) {
      spdlog::warn("modifier produced {} of {} requested variants", parsed.size(), r);
    }
    batch.variants = std::move(parsed);
    return batch;
  }
  throw NoVariantsFound("prompt modifier produced no usable variants after a retry");
}

}  // namespace

std::string_view to_string(SlotKind kind) noexcept {
  switch (kind) {
    case SlotKind::Instruction: return "instruction";
    case SlotKind::OpenEndedDemo: return "open-ended";
    case SlotKind::MultipleChoiceDemo: return "multiple-choice";
  }
  return "instruction";
}

SlotKind parse_slot_kind(std::string_view s) {
  const std::string v = text::to_lower(text::trim(s));
  if (v == "instruction") return SlotKind::Instruction;
  if (v == "open-ended" || v == "open_ended") return SlotKind::OpenEndedDemo;
  if (v == "multiple-choice" || v == "multiple_choice" || v == "mcq") return SlotKind::MultipleChoiceDemo;
  throw InvalidArgument("unknown slot kind '" + std::string(s) + "'");
}

const std::string& ModifierTemplates::for_kind(SlotKind kind) const {
  switch (kind) {
    case SlotKind::Instruction: return instruction;
    case SlotKind::OpenEndedDemo: return open_ended_demo;
    case SlotKind::MultipleChoiceDemo: return multiple_choice_demo;
  }
  return instruction;
}

ModifierTemplates modifier_templates_from_json(const nlohmann::json& j) {
  ModifierTemplates t;
  if (j.is_null()) return t;
  t.instruction = j.value("instruction", t.instruction);
  t.open_ended_demo = j.value("open_ended_demo", t.open_ended_demo);
  t.multiple_choice_demo = j.value("multiple_choice_demo", t.multiple_choice_demo);
  t.paraphrase_instruction = j.value("paraphrase_instruction", t.paraphrase_instruction);
  t.paraphrase_demo = j.value("paraphrase_demo", t.paraphrase_demo);
  return t;
}

nlohmann::json to_json(const ModifierTemplates& t) {
  return {{"instruction", t.instruction},
          {"open_ended_demo", t.open_ended_demo},
          {"multiple_choice_demo", t.multiple_choice_demo},
          {"paraphrase_instruction", t.paraphrase_instruction},
          {"paraphrase_demo", t.paraphrase_demo}};
}

std::string build_modifier_prompt(SlotKind kind, std::string_view content, int r, const ModifierTemplates& templates) {
  check_request(content, r);
  return fill(templates.for_kind(kind), content, r);
}

std::string build_paraphrase_prompt(SlotKind kind, std::string_view content, int n,
                                    const ModifierTemplates& templates) {
  check_request(content, n);
  if (kind == SlotKind::Instruction) return fill(templates.paraphrase_instruction, content, n) + "\n" + std::string(kWrapLine);
  std::string tmpl = templates.paraphrase_demo + " " + std::string(kWrapLine);
  return fill(std::move(tmpl), content, n);
}

std::vector<std::string> parse_variants(std::string_view raw, int r) {
  if (r <= 0) throw InvalidArgument("variant count must be positive");
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::size_t pos = 0;
  while (static_cast<int>(out.size()) < r) {
    std::size_t start = raw.find(kStartMarker, pos);
    if (start == std::string_view::npos) break;
    std::size_t end = raw.find(kEndMarker, start + kStartMarker.size());
    if (end == std::string_view::npos) break;
    // an unterminated <START> is superseded by the last one before <END>
    for (std::size_t again = raw.find(kStartMarker, start + kStartMarker.size()); again != std::string_view::npos &&
                                                                                   again < end;
         again = raw.find(kStartMarker, again + kStartMarker.size())) {
      start = again;
    }
    std::string v = text::trim(raw.substr(start + kStartMarker.size(), end - start - kStartMarker.size()));
    pos = end + kEndMarker.size();
    if (v.empty() || !seen.insert(v).second) continue;
    out.push_back(std::move(v));
  }
  if (out.empty()) throw NoVariantsFound("no <START>...<END> spans in modifier output");
  return out;
}

VariantBatch propose_variants(Backend& modifier, SlotKind kind, std::string_view content, int r,
                              const GenerationParams& params, const ModifierTemplates& templates) {
  return sample_variants(modifier, kind, content, r, params,
                         [&] { return build_modifier_prompt(kind, content, r, templates); });
}

VariantBatch propose_paraphrases(Backend& modifier, SlotKind kind, std::string_view content, int n,
                                 const GenerationParams& params, const ModifierTemplates& templates) {
  return sample_variants(modifier, kind, content, n, params,
                         [&] { return build_paraphrase_prompt(kind, content, n, templates); });
}

}  // namespace advicl
