#pragma once

#include <chrono>
#include <string>

#include <json.hpp>

#include "advicl/backend.hpp"

namespace advicl {

struct RemoteConfig {
  BackendDescriptor descriptor;  // kind Remote; endpoint is the full completions URL
  // Environment variable holding the bearer token; empty means no auth header.
  std::string api_key_env = "OPENAI_API_KEY";
  RetryPolicy retry;
  std::chrono::seconds timeout{60};
  int top_logprobs = 5;
};

// Client for a completions-style HTTP endpoint:
//   POST {model, prompt, temperature, top_p, max_tokens, logprobs, echo?, seed?}
//   -> {choices: [{text, logprobs: {tokens, token_logprobs, top_logprobs}}]}
// Transport failures, 429 and 5xx responses are retried per RetryPolicy with
// the same payload.
class RemoteBackend final : public Backend {
 public:
  // Throws ConfigError if the descriptor is incomplete or the credential
  // variable is unset.
  explicit RemoteBackend(RemoteConfig config);

  const BackendDescriptor& descriptor() const override { return config_.descriptor; }
  Completion complete(std::string_view prompt, const GenerationParams& params) override;
  std::vector<double> option_logprobs(std::string_view prompt, std::span<const std::string> options) override;
  std::vector<TokenLogprob> score_text(std::string_view text) override;

  // Attempts made by the most recent request on this thread.
  static int last_attempts() noexcept;

 private:
  nlohmann::json post(const nlohmann::json& body);
  nlohmann::json post_once(const std::string& payload);

  RemoteConfig config_;
  std::string base_url_;
  std::string path_;
  std::string api_key_;
};

}  // namespace advicl
