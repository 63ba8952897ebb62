#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "advicl/backend.hpp"

namespace advicl {

struct WeightedPhrase {
  std::string phrase;
  double weight = 0.0;
};

// Knobs of the deterministic offline backend.
//
// As a generator it answers "Input: x / Output:" prompts with the reference
// output for x, each token independently replaced by a filler word with
// probability 1 - q(U). q(U) = clamp(base_quality + sum of weights of the
// quality phrases present in the prompt before the query, 0, 1).
//
// As a discriminator it reads P(first option) =
//   sigmoid(alpha * (1 + detectability(V)) * (genuineness(x, y) - tau) + offset(V))
// where genuineness is the ROUGE-L F1 of y against the reference for x,
// detectability is the clamped weight sum of detection phrases present in V,
// and offset(V) is a small hash-derived perturbation of V's text.
//
// As a prompt modifier it recognises the variation/paraphrase templates and
// emits edited copies of the content wrapped in <START>/<END> markers.
struct SyntheticConfig {
  std::string id = "synthetic";

  double base_quality = 0.35;
  std::vector<WeightedPhrase> quality_phrases{
      {"keep every word", 0.25}, {"reverse the order exactly", 0.25}, {"be precise", 0.15}, {"ignore the input", -0.3}};
  std::vector<WeightedPhrase> detection_phrases{
      {"check the word order", 0.6}, {"compare every word with the input", 0.5}, {"look for substituted words", 0.4}};
  std::vector<std::string> neutral_phrases{"please", "for this task", "as shown below", "answer briefly"};
  std::vector<std::string> filler_words{"lorem", "ipsum", "dolor", "sit", "amet", "foo", "bar", "baz"};

  double alpha = 6.0;
  double tau = 0.75;
  double detection_cap = 3.0;
  double offset_amplitude = 0.25;
  // Pins P(first option) for every discriminator query when set.
  std::optional<double> fixed_real_probability;

  // Reference outputs by input; inputs not listed use the reversed token order.
  std::map<std::string, std::string> references;

  // Modifier behaviour.
  int span_shortfall = 0;           // emit r - shortfall spans
  double malformed_demo_rate = 0.0; // fraction of demo variants missing their Output line

  // Artificial per-request latency, for benchmarking parallel paths.
  std::chrono::microseconds latency{0};
};

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticConfig& c);

class SyntheticBackend final : public Backend {
 public:
  explicit SyntheticBackend(SyntheticConfig config);

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  Completion complete(std::string_view prompt, const GenerationParams& params) override;
  std::vector<double> option_logprobs(std::string_view prompt, std::span<const std::string> options) override;
  std::vector<TokenLogprob> score_text(std::string_view text) override;

  // Ground truth exposed for tests and the synthetic acceptance checks.
  double quality_of(std::string_view prompt_prefix) const;
  double detectability_of(std::string_view prompt_prefix) const;
  std::string reference_for(std::string_view input) const;
  const SyntheticConfig& config() const noexcept { return config_; }

 private:
  std::string generate_answer(std::string_view prompt, const GenerationParams& params) const;
  std::string generate_variants(std::string_view prompt, const GenerationParams& params) const;
  std::string vary_instruction(std::string_view content, std::uint64_t h) const;
  std::string vary_demo(std::string_view content, std::uint64_t h) const;
  void simulate_latency() const;

  SyntheticConfig config_;
  BackendDescriptor descriptor_;
  std::vector<std::string> phrase_pool_;
};

// Quality of a generator prompt as seen by a synthetic backend.
double synthetic_prompt_quality(const SyntheticBackend& backend, const class GeneratorPrompt& prompt);

}  // namespace advicl
