#include "advicl/remote_backend.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "advicl/errors.hpp"
#include "advicl/text.hpp"

namespace advicl {

namespace {

thread_local int g_last_attempts = 0;

bool retryable(int status) { return status == 429 || status >= 500; }

double logsumexp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

const nlohmann::json& first_choice(const nlohmann::json& response) {
  if (!response.contains("choices") || !response.at("choices").is_array() || response.at("choices").empty()) {
    throw ProviderError(200, "response has no choices");
  }
  return response.at("choices").at(0);
}

const nlohmann::json& logprobs_block(const nlohmann::json& choice, const std::string& backend_id) {
  if (!choice.contains("logprobs") || choice.at("logprobs").is_null()) {
    throw LogprobsUnsupported("backend '" + backend_id + "' returned no token logprobs");
  }
  return choice.at("logprobs");
}

}  // namespace

int RemoteBackend::last_attempts() noexcept { return g_last_attempts; }

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  config_.descriptor.kind = BackendKind::Remote;
  config_.descriptor.validate();
  const std::string& url = *config_.descriptor.endpoint;
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint '" + url + "' lacks a scheme");
  const std::size_t slash = url.find('/', scheme + 3);
  base_url_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/v1/completions" : url.substr(slash);
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ConfigError("credential variable " + config_.api_key_env + " is not set for backend '" +
                        config_.descriptor.id + "'");
    }
    api_key_ = key;
  }
}

nlohmann::json RemoteBackend::post_once(const std::string& payload) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = client.Post(path_, headers, payload, "application/json");
  if (!res) throw TransportError("request to " + base_url_ + path_ + " failed: " + httplib::to_string(res.error()));
  if (res->status == 429) throw RateLimited(res->body);
  if (res->status != 200) throw ProviderError(res->status, res->body);
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(res->status, std::string("unparseable response: ") + e.what());
  }
}

nlohmann::json RemoteBackend::post(const nlohmann::json& body) {
  const std::string payload = body.dump();
  const std::uint64_t jitter_seed = text::fnv1a64(payload);
  for (int attempt = 1;; ++attempt) {
    g_last_attempts = attempt;
    try {
      return post_once(payload);
    } catch (const TransportError& e) {
      if (attempt >= config_.retry.max_attempts) throw;
      spdlog::warn("{}: transport error (attempt {}): {}", config_.descriptor.id, attempt, e.what());
    } catch (const ProviderError& e) {
      if (!retryable(e.status()) || attempt >= config_.retry.max_attempts) throw;
      spdlog::warn("{}: status {} (attempt {})", config_.descriptor.id, e.status(), attempt);
    }
    std::this_thread::sleep_for(config_.retry.delay_for(attempt, jitter_seed));
  }
}

Completion RemoteBackend::complete(std::string_view prompt, const GenerationParams& params) {
  params.validate();
  if (text::trim(prompt).empty()) throw InvalidArgument("prompt must be nonempty");
  nlohmann::json body{{"model", *config_.descriptor.model},
                      {"prompt", prompt},
                      {"temperature", params.temperature},
                      {"top_p", params.top_p},
                      {"max_tokens", params.max_tokens},
                      {"logprobs", 1}};
  if (params.seed) body["seed"] = *params.seed;
  const auto choice = first_choice(post(body));
  Completion c{choice.value("text", std::string{}), std::nullopt};
  if (choice.contains("logprobs") && !choice.at("logprobs").is_null()) {
    const auto& lp = choice.at("logprobs");
    std::vector<TokenLogprob> tokens;
    const auto& toks = lp.at("tokens");
    const auto& vals = lp.at("token_logprobs");
    for (std::size_t i = 0; i < toks.size() && i < vals.size(); ++i) {
      if (vals[i].is_null()) continue;
      tokens.push_back({toks[i].get<std::string>(), std::min(0.0, vals[i].get<double>())});
    }
    c.token_logprobs = std::move(tokens);
  }
  return c;
}

std::vector<double> RemoteBackend::option_logprobs(std::string_view prompt, std::span<const std::string> options) {
  const auto tokens = option_leading_tokens(options);
  if (text::trim(prompt).empty()) throw InvalidArgument("prompt must be nonempty");
  const double missing = -std::numeric_limits<double>::infinity();
  std::vector<double> out(options.size(), missing);

  nlohmann::json body{{"model", *config_.descriptor.model}, {"prompt", prompt}, {"temperature", 0.0},
                      {"top_p", 1.0},  {"max_tokens", 1},    {"logprobs", config_.top_logprobs}};
  const nlohmann::json response = post(body);
  const auto& lp = logprobs_block(first_choice(response), config_.descriptor.id);
  if (lp.contains("top_logprobs") && lp.at("top_logprobs").is_array() && !lp.at("top_logprobs").empty()) {
    for (const auto& [tok, val] : lp.at("top_logprobs").at(0).items()) {
      const std::string t = text::trim(tok);
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (t == tokens[i]) out[i] = logsumexp(out[i], val.get<double>());
      }
    }
  }
  // options absent from the top list are scored by echoing them after the cue
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (out[i] != missing) continue;
    nlohmann::json echo{{"model", *config_.descriptor.model},
                        {"prompt", std::string(prompt) + tokens[i]},
                        {"temperature", 0.0},
                        {"top_p", 1.0},
                        {"max_tokens", 0},
                        {"echo", true},
                        {"logprobs", 0}};
    const nlohmann::json echoed = post(echo);
    const auto& elp = logprobs_block(first_choice(echoed), config_.descriptor.id);
    const auto& vals = elp.at("token_logprobs");
    if (vals.empty() || vals.back().is_null()) {
      throw ProviderError(200, "echo scoring returned no logprob for option '" + options[i] + "'");
    }
    out[i] = vals.back().get<double>();
  }
  for (auto& v : out) {
    if (!std::isfinite(v)) throw ProviderError(200, "non-finite option logprob");
    v = std::min(v, 0.0);
  }
  return out;
}

std::vector<TokenLogprob> RemoteBackend::score_text(std::string_view t) {
  nlohmann::json body{{"model", *config_.descriptor.model}, {"prompt", t}, {"temperature", 0.0}, {"top_p", 1.0},
                      {"max_tokens", 0},                    {"echo", true}, {"logprobs", 0}};
  const nlohmann::json response = post(body);
  const auto& lp = logprobs_block(first_choice(response), config_.descriptor.id);
  std::vector<TokenLogprob> out;
  const auto& toks = lp.at("tokens");
  const auto& vals = lp.at("token_logprobs");
  for (std::size_t i = 0; i < toks.size() && i < vals.size(); ++i) {
    if (vals[i].is_null()) continue;
    out.push_back({toks[i].get<std::string>(), std::min(0.0, vals[i].get<double>())});
  }
  return out;
}

}  // namespace advicl
