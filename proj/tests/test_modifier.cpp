#include <doctest.h>

#include "advicl/errors.hpp"
#include "advicl/modifier.hpp"
#include "advicl/synthetic_backend.hpp"

using namespace advicl;

namespace {

// Returns a fixed reply to every request and counts them.
class CannedBackend final : public Backend {
 public:
  explicit CannedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  const BackendDescriptor& descriptor() const override { return d_; }
  Completion complete(std::string_view prompt, const GenerationParams&) override {
    prompts.emplace_back(prompt);
    const auto& r = replies_[std::min(prompts.size() - 1, replies_.size() - 1)];
    return {r, std::nullopt};
  }
  std::vector<double> option_logprobs(std::string_view, std::span<const std::string>) override { return {}; }
  std::vector<std::string> prompts;

 private:
  BackendDescriptor d_{"canned", BackendKind::Synthetic, std::nullopt, std::nullopt};
  std::vector<std::string> replies_;
};

}  // namespace

TEST_SUITE("prompt_modifier") {
  TEST_CASE("instruction template text") {
    const auto s = build_modifier_prompt(SlotKind::Instruction, "Summarize the article.", 5);
    CHECK(s.starts_with("Generate 5 variations of the following instruction while keeping the semantic meaning."));
    CHECK(s.find("Summarize the article.") != std::string::npos);
    CHECK(s.find("Wrap each with <START> and <END>.") != std::string::npos);
  }

  TEST_CASE("demo templates") {
    const std::string d = "Input: a\nOutput: b";
    const auto open = build_modifier_prompt(SlotKind::OpenEndedDemo, d, 5);
    CHECK(open.find("Keep the format as Input: and Output:.") != std::string::npos);
    CHECK(open.ends_with(d));
    const auto mc = build_modifier_prompt(SlotKind::MultipleChoiceDemo, d, 3);
    CHECK(mc.find("multiple-choice question and the answer") != std::string::npos);
    CHECK(mc.starts_with("Generate 3 variations"));
  }

  TEST_CASE("paraphrase templates") {
    const auto s = build_paraphrase_prompt(SlotKind::Instruction, "Add the numbers.", 15);
    CHECK(s.starts_with("Write for me 15 paraphrases of the Add the numbers.:"));
    const auto d = build_paraphrase_prompt(SlotKind::OpenEndedDemo, "Input: a\nOutput: b", 15);
    CHECK(d.find("End the answer by So the answer is:") != std::string::npos);
  }

  TEST_CASE("bad requests") {
    CHECK_THROWS_AS(build_modifier_prompt(SlotKind::Instruction, "  ", 5), InvalidArgument);
    CHECK_THROWS_AS(build_modifier_prompt(SlotKind::Instruction, "x", 0), InvalidArgument);
  }

  TEST_CASE("marker parsing") {
    CHECK(parse_variants("<START>foo<END><START>bar<END>", 5) == std::vector<std::string>{"foo", "bar"});
    CHECK(parse_variants("<START>a<END> noise <START>a<END>", 5) == std::vector<std::string>{"a"});
    CHECK_THROWS_AS(parse_variants("no markers here", 5), NoVariantsFound);
    CHECK(parse_variants("<START> x <END><START>y<END><START>z<END>", 2) == std::vector<std::string>{"x", "y"});
    CHECK(parse_variants("<START>  <END><START>k<END>", 5) == std::vector<std::string>{"k"});
    CHECK(parse_variants("<START>lost <START>kept<END>", 5) == std::vector<std::string>{"kept"});
    CHECK_THROWS_AS(parse_variants("<START>unterminated", 5), NoVariantsFound);
    CHECK_THROWS_AS(parse_variants("<END>backwards<START>", 5), NoVariantsFound);
  }

  TEST_CASE("synthetic modifier returns r variants") {
    SyntheticBackend b({});
    const auto batch = propose_variants(b, SlotKind::Instruction, "Reverse the words.", 5, GenerationParams{}.with_seed(3));
    CHECK(batch.variants.size() == 5);
    CHECK(batch.source == "Reverse the words.");
  }

  TEST_CASE("short modifier output degrades to fewer variants") {
    SyntheticConfig cfg;
    cfg.span_shortfall = 2;
    SyntheticBackend b(cfg);
    const auto batch = propose_variants(b, SlotKind::Instruction, "Reverse the words.", 5, GenerationParams{}.with_seed(3));
    CHECK(batch.variants.size() == 3);
  }

  TEST_CASE("demo variants without an Output line are dropped") {
    CannedBackend b({"<START>Input: a1\nOutput: b1<END><START>Input: a2<END><START>Input: a3\nOutput: b3<END>"});
    const auto batch = propose_variants(b, SlotKind::OpenEndedDemo, "Input: a\nOutput: b", 5, {});
    CHECK(batch.variants == std::vector<std::string>{"Input: a1\nOutput: b1", "Input: a3\nOutput: b3"});
    CHECK(b.prompts.size() == 1);
  }

  TEST_CASE("one retry with a different seed, then failure") {
    CannedBackend retry({"nothing useful", "<START>v<END>"});
    const auto batch = propose_variants(retry, SlotKind::Instruction, "I.", 5, GenerationParams{}.with_seed(1));
    CHECK(batch.variants == std::vector<std::string>{"v"});
    CHECK(retry.prompts.size() == 2);

    CannedBackend never({"still nothing"});
    CHECK_THROWS_AS(propose_variants(never, SlotKind::Instruction, "I.", 5, {}), NoVariantsFound);
    CHECK(never.prompts.size() == 2);
  }

  TEST_CASE("synthetic malformed-demo knob") {
    SyntheticConfig cfg;
    cfg.malformed_demo_rate = 1.0;
    SyntheticBackend b(cfg);
    CHECK_THROWS_AS(propose_variants(b, SlotKind::OpenEndedDemo, "Input: a b\nOutput: b a", 5, {}), NoVariantsFound);
  }

  TEST_CASE("slot kind names") {
    CHECK(parse_slot_kind("multiple-choice") == SlotKind::MultipleChoiceDemo);
    CHECK(to_string(SlotKind::OpenEndedDemo) == "open-ended");
    CHECK_THROWS_AS(parse_slot_kind("essay"), InvalidArgument);
  }
}
