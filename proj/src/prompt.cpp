#include "advicl/prompt.hpp"

#include <cctype>

#include "advicl/errors.hpp"
#include "advicl/text.hpp"

namespace advicl {

namespace {

std::string require_nonempty(std::string_view raw, const char* what) {
  std::string value = text::trim(raw);
  if (value.empty()) throw InvalidArgument(std::string(what) + " must be nonempty");
  return value;
}

// Position of `tag` at the start of a line (or of the text), or npos.
std::size_t find_line_tag(std::string_view s, std::string_view tag, std::size_t from = 0) {
  for (std::size_t pos = s.find(tag, from); pos != std::string_view::npos; pos = s.find(tag, pos + 1)) {
    std::size_t b = pos;
    while (b > 0 && (s[b - 1] == ' ' || s[b - 1] == '\t')) --b;
    if (b == 0 || s[b - 1] == '\n') return pos;
  }
  return std::string_view::npos;
}

void check_slot(const PromptSlot& slot, std::size_t demo_count) {
  if (slot.kind() == PromptSlot::Kind::Demo && slot.index() >= demo_count) {
    throw SlotOutOfRange("slot " + slot.describe() + " out of range for " + std::to_string(demo_count) +
                         " demos");
  }
}

}  // namespace

Demonstration::Demonstration(std::string_view input, std::string_view output)
    : input_(require_nonempty(input, "demonstration input")),
      output_(require_nonempty(output, "demonstration output")) {}

std::string_view to_string(Label label) noexcept { return label == Label::Real ? "real" : "generated"; }

Label parse_label(std::string_view s) {
  const std::string v = text::to_lower(text::trim(s));
  if (v == "real") return Label::Real;
  if (v == "generated") return Label::Generated;
  throw InvalidArgument("unknown label '" + std::string(s) + "'");
}

LabeledDemonstration::LabeledDemonstration(std::string_view input, std::string_view output, Label label)
    : demo_(input, output), label_(label) {}

LabeledDemonstration::LabeledDemonstration(const Demonstration& demo, Label label) : demo_(demo), label_(label) {}

GeneratorPrompt::GeneratorPrompt(std::string_view instruction, std::vector<Demonstration> demos)
    : instruction_(text::trim(instruction)), demos_(std::move(demos)) {}

OptionToken split_option(std::string_view option) {
  std::size_t i = 0;
  while (i < option.size() && !std::isalnum(static_cast<unsigned char>(option[i]))) ++i;
  std::size_t j = i;
  while (j < option.size() && std::isalnum(static_cast<unsigned char>(option[j]))) ++j;
  return {std::string(option.substr(0, i)), std::string(option.substr(i, j - i))};
}

DiscriminatorPrompt::DiscriminatorPrompt()
    : DiscriminatorPrompt(templates::kDefaultDiscriminatorInstruction, {}) {}

DiscriminatorPrompt::DiscriminatorPrompt(std::string_view instruction, std::vector<LabeledDemonstration> demos,
                                         Options options)
    : instruction_(text::trim(instruction)), demos_(std::move(demos)), options_(std::move(options)) {
  for (auto& o : options_) {
    o = text::trim(o);
    if (o.empty()) throw InvalidArgument("discriminator option strings must be nonempty");
  }
  if (options_[0] == options_[1]) throw InvalidArgument("discriminator option strings must differ");
  const OptionToken a = split_option(options_[0]);
  const OptionToken b = split_option(options_[1]);
  if (a.token.empty() || b.token.empty()) {
    throw InvalidArgument("discriminator options need an alphanumeric leading token");
  }
  if (a.token == b.token) {
    throw InvalidArgument("discriminator options share leading token '" + a.token + "'");
  }
  if (a.prefix != b.prefix) {
    throw InvalidArgument("discriminator options must share the text before their leading token");
  }
}

DiscriminatorPrompt::Options DiscriminatorPrompt::default_options() {
  return {std::string(templates::kDefaultRealOption), std::string(templates::kDefaultGeneratedOption)};
}

std::string DiscriminatorPrompt::answer_cue() const {
  return std::string(templates::kAnswerTag) + " " + split_option(options_[0]).prefix;
}

std::string PromptSlot::describe() const {
  return kind_ == Kind::Instruction ? "instruction" : "demo[" + std::to_string(index_) + "]";
}

std::string format_demo_block(const Demonstration& demo) {
  std::string out;
  out += templates::kInputTag;
  out += ' ';
  out += demo.input();
  out += '\n';
  out += templates::kOutputTag;
  out += ' ';
  out += demo.output();
  return out;
}

Demonstration parse_demo_block(std::string_view content) {
  const std::size_t in = find_line_tag(content, templates::kInputTag);
  if (in == std::string_view::npos) throw MalformedDemoContent("demo content lacks an 'Input:' line");
  const std::size_t out = find_line_tag(content, templates::kOutputTag, in + templates::kInputTag.size());
  if (out == std::string_view::npos) throw MalformedDemoContent("demo content lacks an 'Output:' line");
  std::string_view input = content.substr(in + templates::kInputTag.size(), out - in - templates::kInputTag.size());
  std::string_view output = content.substr(out + templates::kOutputTag.size());
  // drop a trailing discriminator question/answer block if the content carried one
  for (auto tag : {templates::kQuestionLine, templates::kAnswerTag}) {
    const std::size_t cut = find_line_tag(output, tag);
    if (cut != std::string_view::npos) output = output.substr(0, cut);
  }
  if (text::trim(input).empty()) throw MalformedDemoContent("demo input is empty");
  if (text::trim(output).empty()) throw MalformedDemoContent("demo output is empty");
  return Demonstration(input, output);
}

std::string render_generator_prompt(const GeneratorPrompt& prompt, std::string_view input) {
  std::string out;
  if (!prompt.instruction().empty()) {
    out += prompt.instruction();
    out += "\n\n";
  }
  for (const auto& d : prompt.demos()) {
    out += format_demo_block(d);
    out += "\n\n";
  }
  out += templates::kInputTag;
  out += ' ';
  out += input;
  out += '\n';
  out += templates::kOutputTag;
  return out;
}

namespace {
void append_query_block(std::string& out, const DiscriminatorPrompt& prompt, std::string_view input,
                        std::string_view output) {
  out += templates::kInputTag;
  out += ' ';
  out += input;
  out += '\n';
  out += templates::kOutputTag;
  out += ' ';
  out += output;
  out += '\n';
  out += templates::kQuestionLine;
  out += '\n';
  out += prompt.options()[0];
  out += '\n';
  out += prompt.options()[1];
  out += '\n';
}
}  // namespace

std::string render_discriminator_prompt(const DiscriminatorPrompt& prompt, std::string_view input,
                                        std::string_view output) {
  std::string out;
  if (!prompt.instruction().empty()) {
    out += prompt.instruction();
    out += "\n\n";
  }
  for (const auto& d : prompt.demos()) {
    append_query_block(out, prompt, d.input(), d.output());
    out += templates::kAnswerTag;
    out += ' ';
    out += prompt.option_for(d.label());
    out += "\n\n";
  }
  append_query_block(out, prompt, input, output);
  out += prompt.answer_cue();
  return out;
}

GeneratorPrompt apply_edit(const GeneratorPrompt& prompt, const PromptSlot& slot, std::string_view content) {
  check_slot(slot, prompt.demos().size());
  if (slot.kind() == PromptSlot::Kind::Instruction) return GeneratorPrompt(content, prompt.demos());
  auto demos = prompt.demos();
  demos[slot.index()] = parse_demo_block(content);
  return GeneratorPrompt(prompt.instruction(), std::move(demos));
}

DiscriminatorPrompt apply_edit(const DiscriminatorPrompt& prompt, const PromptSlot& slot,
                               std::string_view content) {
  check_slot(slot, prompt.demos().size());
  if (slot.kind() == PromptSlot::Kind::Instruction) {
    return DiscriminatorPrompt(content, prompt.demos(), prompt.options());
  }
  auto demos = prompt.demos();
  demos[slot.index()] = LabeledDemonstration(parse_demo_block(content), demos[slot.index()].label());
  return DiscriminatorPrompt(prompt.instruction(), std::move(demos), prompt.options());
}

std::string slot_content(const GeneratorPrompt& prompt, const PromptSlot& slot) {
  check_slot(slot, prompt.demos().size());
  if (slot.kind() == PromptSlot::Kind::Instruction) return prompt.instruction();
  return format_demo_block(prompt.demos()[slot.index()]);
}

std::string slot_content(const DiscriminatorPrompt& prompt, const PromptSlot& slot) {
  check_slot(slot, prompt.demos().size());
  if (slot.kind() == PromptSlot::Kind::Instruction) return prompt.instruction();
  return format_demo_block(prompt.demos()[slot.index()].demo());
}

std::vector<PromptSlot> slots_of(std::size_t demo_count) {
  std::vector<PromptSlot> out{PromptSlot::instruction()};
  for (std::size_t i = 0; i < demo_count; ++i) out.push_back(PromptSlot::demo(i));
  return out;
}

nlohmann::json to_json(const GeneratorPrompt& prompt) {
  nlohmann::json demos = nlohmann::json::array();
  for (const auto& d : prompt.demos()) demos.push_back({{"input", d.input()}, {"output", d.output()}});
  return {{"instruction", prompt.instruction()}, {"demos", std::move(demos)}};
}

nlohmann::json to_json(const DiscriminatorPrompt& prompt) {
  nlohmann::json demos = nlohmann::json::array();
  for (const auto& d : prompt.demos()) {
    demos.push_back({{"input", d.input()}, {"output", d.output()}, {"label", std::string(to_string(d.label()))}});
  }
  return {{"instruction", prompt.instruction()},
          {"demos", std::move(demos)},
          {"options", {prompt.options()[0], prompt.options()[1]}}};
}

namespace {
std::string field(const nlohmann::json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_string()) {
    throw InvalidArgument(std::string("prompt document: missing string field '") + key + "'");
  }
  return obj.at(key).get<std::string>();
}
}  // namespace

GeneratorPrompt generator_prompt_from_json(const nlohmann::json& doc) {
  std::vector<Demonstration> demos;
  if (doc.contains("demos")) {
    for (const auto& d : doc.at("demos")) demos.emplace_back(field(d, "input"), field(d, "output"));
  }
  return GeneratorPrompt(doc.value("instruction", std::string{}), std::move(demos));
}

DiscriminatorPrompt discriminator_prompt_from_json(const nlohmann::json& doc) {
  std::vector<LabeledDemonstration> demos;
  if (doc.contains("demos")) {
    for (const auto& d : doc.at("demos")) {
      demos.emplace_back(field(d, "input"), field(d, "output"), parse_label(field(d, "label")));
    }
  }
  auto options = DiscriminatorPrompt::default_options();
  if (doc.contains("options")) {
    const auto& o = doc.at("options");
    if (!o.is_array() || o.size() != 2) throw InvalidArgument("prompt document: 'options' must hold two strings");
    options = {o[0].get<std::string>(), o[1].get<std::string>()};
  }
  return DiscriminatorPrompt(doc.value("instruction", std::string{}), std::move(demos), std::move(options));
}

}  // namespace advicl
