#pragma once

// Shared fixtures: a synthetic task family, a scripted discriminator with
// hand-set probabilities, and a recording wrapper for oracle recomputation.

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "advicl/backend.hpp"
#include "advicl/loss.hpp"
#include "advicl/prompt.hpp"
#include "advicl/synthetic_backend.hpp"
#include "advicl/text.hpp"

namespace advicl::testing {

inline const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> words{
      "apple", "river", "stone", "cloud", "green", "quick", "silent", "paper", "window", "garden",
      "copper", "violet", "north", "candle", "forest", "ladder", "meadow", "orange", "pepper", "rocket",
      "silver", "tunnel", "velvet", "winter", "yellow", "anchor", "bridge", "cotton", "desert", "engine"};
  return words;
}

struct SyntheticTask {
  std::vector<TaskSample> train;
  std::vector<TaskSample> test;
  GeneratorPrompt u0;
};

// Word-reversal task: outputs are the input tokens in reverse order, which is
// what the synthetic backend treats as the reference by default.
inline SyntheticTask make_synthetic_task(std::uint64_t seed, std::size_t n_train = 20, std::size_t n_test = 40) {
  std::uint64_t state = text::mix64(seed ^ 0xabcdefULL);
  auto next = [&] { return state = text::mix64(state); };
  auto make = [&](std::size_t id) {
    const std::size_t len = 4 + next() % 5;
    std::vector<std::string> words;
    for (std::size_t i = 0; i < len; ++i) words.push_back(word_pool()[next() % word_pool().size()]);
    std::vector<std::string> rev(words.rbegin(), words.rend());
    return TaskSample(id, text::join(words, " "), text::join(rev, " "));
  };
  SyntheticTask task;
  for (std::size_t i = 0; i < n_train; ++i) task.train.push_back(make(i));
  for (std::size_t i = 0; i < n_test; ++i) task.test.push_back(make(1000 + i));
  task.u0 = GeneratorPrompt("Reverse the order of the words in the input.",
                            {Demonstration(task.train[0].input, task.train[0].output),
                             Demonstration(task.train[1].input, task.train[1].output)});
  return task;
}

// Generator echoes "gen:<x>"; discriminator returns preset probabilities for
// real and generated pairs, keyed by input.
struct ScriptedProbs {
  double real = 0.5;
  double generated = 0.5;
};

class ScriptedBackend final : public Backend {
 public:
  using Probs = ScriptedProbs;

  explicit ScriptedBackend(std::map<std::string, Probs> probs, Probs fallback = Probs{0.5, 0.5})
      : probs_(std::move(probs)), fallback_(fallback) {}

  const BackendDescriptor& descriptor() const override { return descriptor_; }

  Completion complete(std::string_view prompt, const GenerationParams&) override {
    ++completions;
    const std::string p(prompt);
    const auto in = p.rfind("Input: ");
    const auto out = p.rfind("\nOutput:");
    return {"gen:" + p.substr(in + 7, out - in - 7), std::nullopt};
  }

  std::vector<double> option_logprobs(std::string_view prompt, std::span<const std::string> options) override {
    ++logprob_calls;
    option_leading_tokens(options);
    const std::string p(prompt);
    const auto in = p.rfind("Input: ");
    const auto out = p.find("\nOutput: ", in);
    const auto q = p.find("\nQuestion:", out);
    const std::string x = p.substr(in + 7, out - in - 7);
    const std::string y = p.substr(out + 9, q - out - 9);
    const auto it = probs_.find(x);
    const Probs pr = it == probs_.end() ? fallback_ : it->second;
    const double pa = y.starts_with("gen:") ? pr.generated : pr.real;
    return {std::log(pa), std::log1p(-pa)};
  }

  int completions = 0;
  int logprob_calls = 0;

 private:
  BackendDescriptor descriptor_{"scripted", BackendKind::Synthetic, std::nullopt, std::nullopt};
  std::map<std::string, Probs> probs_;
  Probs fallback_;
};

// Records every response of the wrapped backend by prompt.
class RecordingBackend final : public Backend {
 public:
  explicit RecordingBackend(BackendPtr inner) : inner_(std::move(inner)) {}
  const BackendDescriptor& descriptor() const override { return inner_->descriptor(); }
  Completion complete(std::string_view prompt, const GenerationParams& params) override {
    auto c = inner_->complete(prompt, params);
    std::lock_guard lock(mu_);
    completions[std::string(prompt) + "\x1f" + std::to_string(params.seed.value_or(0))] = c.text;
    return c;
  }
  std::vector<double> option_logprobs(std::string_view prompt, std::span<const std::string> options) override {
    auto lps = inner_->option_logprobs(prompt, options);
    std::lock_guard lock(mu_);
    logprobs[std::string(prompt)] = lps;
    return lps;
  }

  std::map<std::string, std::string> completions;
  std::map<std::string, std::vector<double>> logprobs;

 private:
  BackendPtr inner_;
  std::mutex mu_;
};

// Counts calls through to the inner backend.
class CountingBackend final : public Backend {
 public:
  explicit CountingBackend(BackendPtr inner) : inner_(std::move(inner)) {}
  const BackendDescriptor& descriptor() const override { return inner_->descriptor(); }
  Completion complete(std::string_view prompt, const GenerationParams& params) override {
    ++calls;
    return inner_->complete(prompt, params);
  }
  std::vector<double> option_logprobs(std::string_view prompt, std::span<const std::string> options) override {
    ++calls;
    return inner_->option_logprobs(prompt, options);
  }
  std::vector<TokenLogprob> score_text(std::string_view t) override {
    ++calls;
    return inner_->score_text(t);
  }
  std::atomic<int> calls{0};

 private:
  BackendPtr inner_;
};

}  // namespace advicl::testing
