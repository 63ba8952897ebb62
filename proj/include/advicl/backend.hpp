#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace advicl {

struct GenerationParams {
  double temperature = 0.6;
  double top_p = 0.9;
  int max_tokens = 256;
  std::optional<std::int64_t> seed;

  // Throws InvalidArgument unless temperature >= 0, 0 < top_p <= 1, max_tokens > 0.
  void validate() const;
  GenerationParams with_seed(std::int64_t s) const {
    GenerationParams p = *this;
    p.seed = s;
    return p;
  }
  friend bool operator==(const GenerationParams&, const GenerationParams&) = default;
};

nlohmann::json to_json(const GenerationParams& params);
GenerationParams generation_params_from_json(const nlohmann::json& j, const GenerationParams& defaults = {});

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
  friend bool operator==(const TokenLogprob&, const TokenLogprob&) = default;
};

struct Completion {
  std::string text;
  std::optional<std::vector<TokenLogprob>> token_logprobs;
  friend bool operator==(const Completion&, const Completion&) = default;
};

enum class BackendKind { Remote, Synthetic };

struct BackendDescriptor {
  std::string id;
  BackendKind kind = BackendKind::Synthetic;
  std::optional<std::string> endpoint;
  std::optional<std::string> model;

  // Remote descriptors need both endpoint and model.
  void validate() const;
};

nlohmann::json to_json(const BackendDescriptor& d);

// A text-completion provider. Implementations must tolerate concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual const BackendDescriptor& descriptor() const = 0;

  virtual Completion complete(std::string_view prompt, const GenerationParams& params) = 0;

  // Next-token logprobs of each option's leading token, in the order given.
  // The prompt must end at the answer cue.
  virtual std::vector<double> option_logprobs(std::string_view prompt, std::span<const std::string> options) = 0;

  // Per-token logprobs of `text` itself (echo scoring). Backends that cannot
  // score text throw LogprobsUnsupported.
  virtual std::vector<TokenLogprob> score_text(std::string_view text);
};

using BackendPtr = std::shared_ptr<Backend>;

// Leading distinctive token of each option. Throws InvalidArgument for fewer
// than two options and ProviderError when two options share a leading token.
std::vector<std::string> option_leading_tokens(std::span<const std::string> options);

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{20000};
  bool jitter = true;

  // Delay before retry number `attempt` (1-based), exponential with optional jitter.
  std::chrono::milliseconds delay_for(int attempt, std::uint64_t jitter_seed) const;
};

RetryPolicy retry_policy_from_json(const nlohmann::json& j);

// Shared ceiling on the number of backend requests in one run. 0 = unlimited.
class CallBudget {
 public:
  explicit CallBudget(std::uint64_t max_calls = 0) : max_calls_(max_calls) {}
  // Counts one call; throws BudgetExceeded past the ceiling.
  void charge();
  std::uint64_t used() const noexcept { return used_.load(); }
  std::uint64_t limit() const noexcept { return max_calls_; }

 private:
  std::uint64_t max_calls_;
  std::atomic<std::uint64_t> used_{0};
};

// Counts every request against a shared CallBudget before forwarding it.
BackendPtr with_budget(BackendPtr inner, std::shared_ptr<CallBudget> budget);

// Persistent content-addressed cache in front of `inner`.
BackendPtr with_cache(BackendPtr inner, const std::string& cache_dir);

}  // namespace advicl
