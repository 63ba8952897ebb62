#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace advicl {

// Fixed template pieces shared by every rendered prompt.
namespace templates {
inline constexpr std::string_view kInputTag = "Input:";
inline constexpr std::string_view kOutputTag = "Output:";
inline constexpr std::string_view kQuestionLine = "Question: Is the output real or generated?";
inline constexpr std::string_view kAnswerTag = "Answer:";
inline constexpr std::string_view kDefaultRealOption = "(A) real";
inline constexpr std::string_view kDefaultGeneratedOption = "(B) generated";
inline constexpr std::string_view kDefaultDiscriminatorInstruction =
    "Decide whether the output paired with each input is a real answer taken from the task data or an answer "
    "generated by a language model. Choose (A) real or (B) generated.";
}  // namespace templates

class Demonstration {
 public:
  // Fields are trimmed; both must be nonempty afterwards.
  Demonstration(std::string_view input, std::string_view output);

  const std::string& input() const noexcept { return input_; }
  const std::string& output() const noexcept { return output_; }
  friend bool operator==(const Demonstration&, const Demonstration&) = default;

 private:
  std::string input_;
  std::string output_;
};

enum class Label { Real, Generated };

std::string_view to_string(Label label) noexcept;
Label parse_label(std::string_view s);

class LabeledDemonstration {
 public:
  LabeledDemonstration(std::string_view input, std::string_view output, Label label);
  LabeledDemonstration(const Demonstration& demo, Label label);

  const std::string& input() const noexcept { return demo_.input(); }
  const std::string& output() const noexcept { return demo_.output(); }
  Label label() const noexcept { return label_; }
  const Demonstration& demo() const noexcept { return demo_; }
  friend bool operator==(const LabeledDemonstration&, const LabeledDemonstration&) = default;

 private:
  Demonstration demo_;
  Label label_;
};

class GeneratorPrompt {
 public:
  GeneratorPrompt() = default;
  explicit GeneratorPrompt(std::string_view instruction, std::vector<Demonstration> demos = {});

  const std::string& instruction() const noexcept { return instruction_; }
  const std::vector<Demonstration>& demos() const noexcept { return demos_; }
  friend bool operator==(const GeneratorPrompt&, const GeneratorPrompt&) = default;

 private:
  std::string instruction_;
  std::vector<Demonstration> demos_;
};

// An option string split at its leading distinctive token: "(A) real" has
// prefix "(" and token "A". The token is what the discriminator emits next.
struct OptionToken {
  std::string prefix;
  std::string token;
};
OptionToken split_option(std::string_view option);

class DiscriminatorPrompt {
 public:
  using Options = std::array<std::string, 2>;

  DiscriminatorPrompt();
  // Options must be nonempty, distinct, share their prefix and differ in
  // their leading token.
  DiscriminatorPrompt(std::string_view instruction, std::vector<LabeledDemonstration> demos,
                      Options options = default_options());

  static Options default_options();

  const std::string& instruction() const noexcept { return instruction_; }
  const std::vector<LabeledDemonstration>& demos() const noexcept { return demos_; }
  const Options& options() const noexcept { return options_; }
  const std::string& option_for(Label label) const noexcept {
    return options_[label == Label::Real ? 0 : 1];
  }
  // Text placed after "Answer:" so that the next token is the option letter.
  std::string answer_cue() const;
  friend bool operator==(const DiscriminatorPrompt&, const DiscriminatorPrompt&) = default;

 private:
  std::string instruction_;
  std::vector<LabeledDemonstration> demos_;
  Options options_;
};

class PromptSlot {
 public:
  enum class Kind { Instruction, Demo };

  static PromptSlot instruction() noexcept { return PromptSlot(Kind::Instruction, 0); }
  static PromptSlot demo(std::size_t index) noexcept { return PromptSlot(Kind::Demo, index); }

  Kind kind() const noexcept { return kind_; }
  std::size_t index() const noexcept { return index_; }
  std::string describe() const;
  friend bool operator==(const PromptSlot&, const PromptSlot&) = default;

 private:
  PromptSlot(Kind kind, std::size_t index) : kind_(kind), index_(index) {}
  Kind kind_;
  std::size_t index_;
};

// "Input: <input>\nOutput: <output>"
std::string format_demo_block(const Demonstration& demo);
// Inverse of format_demo_block. Tolerates surrounding text before "Input:";
// an "Answer:" line trailing the output (as echoed from a discriminator demo)
// is dropped. Throws MalformedDemoContent.
Demonstration parse_demo_block(std::string_view content);

std::string render_generator_prompt(const GeneratorPrompt& prompt, std::string_view input);
std::string render_discriminator_prompt(const DiscriminatorPrompt& prompt, std::string_view input,
                                        std::string_view output);

// Returns a copy with only `slot` replaced. For Demo slots `content` is a
// demo block; a discriminator demo keeps its label.
GeneratorPrompt apply_edit(const GeneratorPrompt& prompt, const PromptSlot& slot, std::string_view content);
DiscriminatorPrompt apply_edit(const DiscriminatorPrompt& prompt, const PromptSlot& slot,
                               std::string_view content);

// Slot contents as they are handed to the prompt modifier.
std::string slot_content(const GeneratorPrompt& prompt, const PromptSlot& slot);
std::string slot_content(const DiscriminatorPrompt& prompt, const PromptSlot& slot);

// All slots in visitation order: instruction, then demos.
std::vector<PromptSlot> slots_of(std::size_t demo_count);

// Prompt documents: {"instruction": ..., "demos": [{"input", "output", "label"?}], "options"?}
nlohmann::json to_json(const GeneratorPrompt& prompt);
nlohmann::json to_json(const DiscriminatorPrompt& prompt);
GeneratorPrompt generator_prompt_from_json(const nlohmann::json& doc);
DiscriminatorPrompt discriminator_prompt_from_json(const nlohmann::json& doc);

}  // namespace advicl
