#include "advicl/backend.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "advicl/errors.hpp"
#include "advicl/prompt.hpp"
#include "advicl/text.hpp"

namespace advicl {

void GenerationParams::validate() const {
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) throw InvalidArgument("temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw InvalidArgument("top_p must lie in (0, 1]");
  if (max_tokens <= 0) throw InvalidArgument("max_tokens must be positive");
}

nlohmann::json to_json(const GenerationParams& params) {
  nlohmann::json j{{"temperature", params.temperature}, {"top_p", params.top_p}, {"max_tokens", params.max_tokens}};
  j["seed"] = params.seed ? nlohmann::json(*params.seed) : nlohmann::json(nullptr);
  return j;
}

GenerationParams generation_params_from_json(const nlohmann::json& j, const GenerationParams& defaults) {
  GenerationParams p = defaults;
  if (j.is_null()) return p;
  p.temperature = j.value("temperature", p.temperature);
  p.top_p = j.value("top_p", p.top_p);
  p.max_tokens = j.value("max_tokens", p.max_tokens);
  if (j.contains("seed") && !j.at("seed").is_null()) p.seed = j.at("seed").get<std::int64_t>();
  p.validate();
  return p;
}

void BackendDescriptor::validate() const {
  if (id.empty()) throw ConfigError("backend id must be nonempty");
  if (kind == BackendKind::Remote && (!endpoint || endpoint->empty() || !model || model->empty())) {
    throw ConfigError("remote backend '" + id + "' requires both endpoint and model");
  }
}

nlohmann::json to_json(const BackendDescriptor& d) {
  return {{"id", d.id},
          {"kind", d.kind == BackendKind::Remote ? "remote" : "synthetic"},
          {"endpoint", d.endpoint ? nlohmann::json(*d.endpoint) : nlohmann::json(nullptr)},
          {"model", d.model ? nlohmann::json(*d.model) : nlohmann::json(nullptr)}};
}

std::vector<TokenLogprob> Backend::score_text(std::string_view) {
  throw LogprobsUnsupported("backend '" + descriptor().id + "' cannot score text");
}

std::vector<std::string> option_leading_tokens(std::span<const std::string> options) {
  if (options.size() < 2) throw InvalidArgument("option_logprobs needs at least two options");
  std::vector<std::string> tokens;
  std::set<std::string> seen;
  for (const auto& o : options) {
    std::string tok = split_option(o).token;
    if (tok.empty()) throw InvalidArgument("option '" + o + "' has no leading token");
    if (!seen.insert(tok).second) {
      throw ProviderError(0, "options share leading token '" + tok +
                                 "'; their probabilities cannot be told apart, adjust the option strings");
    }
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

std::chrono::milliseconds RetryPolicy::delay_for(int attempt, std::uint64_t jitter_seed) const {
  const double base = static_cast<double>(base_delay.count()) * std::pow(2.0, std::max(0, attempt - 1));
  double d = std::min(base, static_cast<double>(max_delay.count()));
  if (jitter) d *= 0.5 + 0.5 * text::unit_interval(text::hash_combine(jitter_seed, attempt));
  return std::chrono::milliseconds(static_cast<long long>(d));
}

RetryPolicy retry_policy_from_json(const nlohmann::json& j) {
  RetryPolicy p;
  if (j.is_null()) return p;
  p.max_attempts = j.value("max_attempts", p.max_attempts);
  p.base_delay = std::chrono::milliseconds(j.value("base_delay_ms", static_cast<long long>(p.base_delay.count())));
  p.max_delay = std::chrono::milliseconds(j.value("max_delay_ms", static_cast<long long>(p.max_delay.count())));
  p.jitter = j.value("jitter", p.jitter);
  if (p.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
  return p;
}

void CallBudget::charge() {
  const std::uint64_t n = used_.fetch_add(1) + 1;
  if (max_calls_ != 0 && n > max_calls_) {
    throw BudgetExceeded("backend call budget of " + std::to_string(max_calls_) + " exhausted");
  }
}

namespace {

class BudgetedBackend final : public Backend {
 public:
  BudgetedBackend(BackendPtr inner, std::shared_ptr<CallBudget> budget)
      : inner_(std::move(inner)), budget_(std::move(budget)) {}

  const BackendDescriptor& descriptor() const override { return inner_->descriptor(); }

  Completion complete(std::string_view prompt, const GenerationParams& params) override {
    budget_->charge();
    return inner_->complete(prompt, params);
  }
  std::vector<double> option_logprobs(std::string_view prompt, std::span<const std::string> options) override {
    budget_->charge();
    return inner_->option_logprobs(prompt, options);
  }
  std::vector<TokenLogprob> score_text(std::string_view t) override {
    budget_->charge();
    return inner_->score_text(t);
  }

 private:
  BackendPtr inner_;
  std::shared_ptr<CallBudget> budget_;
};

}  // namespace

BackendPtr with_budget(BackendPtr inner, std::shared_ptr<CallBudget> budget) {
  return std::make_shared<BudgetedBackend>(std::move(inner), std::move(budget));
}

}  // namespace advicl
