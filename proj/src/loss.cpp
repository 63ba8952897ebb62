#include "advicl/loss.hpp"

#include <algorithm>
#include <cmath>

#include "advicl/errors.hpp"
#include "advicl/text.hpp"

namespace advicl {

namespace {

void check_eps(double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw InvalidArgument("clamp eps must lie in (0, 0.5)");
}

}  // namespace

TaskSample::TaskSample(std::size_t id_, std::string_view input_, std::string_view output_)
    : id(id_), input(text::trim(input_)), output(text::trim(output_)) {
  if (input.empty()) throw InvalidArgument("task sample " + std::to_string(id) + " has an empty input");
  if (output.empty()) throw InvalidArgument("task sample " + std::to_string(id) + " has an empty output");
}

double real_probability_from_logprobs(double lp_real, double lp_generated, double eps) {
  check_eps(eps);
  const double p = 1.0 / (1.0 + std::exp(lp_generated - lp_real));
  return std::clamp(p, eps, 1.0 - eps);
}

double real_probability(Backend& discriminator, const DiscriminatorPrompt& v, std::string_view input,
                        std::string_view output, double eps) {
  check_eps(eps);
  const std::string prompt = render_discriminator_prompt(v, input, output);
  const auto lps = discriminator.option_logprobs(prompt, v.options());
  if (lps.size() != 2) throw ProviderError(0, "expected two option logprobs");
  return real_probability_from_logprobs(lps[0], lps[1], eps);
}

std::int64_t sample_seed(std::int64_t base_seed, std::size_t sample_id) {
  const std::uint64_t h = text::hash_combine(static_cast<std::uint64_t>(base_seed), sample_id);
  return static_cast<std::int64_t>(h >> 1);
}

std::vector<std::string> generate_outputs(Backend& generator, const GeneratorPrompt& u,
                                          std::span<const TaskSample> batch, const GenerationParams& params,
                                          Execution exec) {
  std::vector<std::string> out(batch.size());
  const std::int64_t base = params.seed.value_or(0);
  for_each_index(batch.size(), exec, [&](std::size_t i) {
    const auto prompt = render_generator_prompt(u, batch[i].input);
    out[i] = text::trim(generator.complete(prompt, params.with_seed(sample_seed(base, batch[i].id))).text);
  });
  return out;
}

LossEstimate score_loss(Backend& discriminator, const DiscriminatorPrompt& v, std::span<const TaskSample> batch,
                        std::span<const std::string> generated, double eps, Execution exec) {
  check_eps(eps);
  if (batch.empty()) throw EmptyBatch("loss needs at least one sample");
  if (generated.size() != batch.size()) throw InvalidArgument("one generated output per sample is required");

  LossEstimate est;
  est.per_sample.resize(batch.size());
  for_each_index(batch.size(), exec, [&](std::size_t i) {
    SampleTerms& t = est.per_sample[i];
    t.sample_id = batch[i].id;
    t.generated_output = generated[i];
    t.real_probability = real_probability(discriminator, v, batch[i].input, batch[i].output, eps);
    // an empty generation still gets judged; render a placeholder token
    const std::string_view y_hat = generated[i].empty() ? std::string_view("(empty)") : generated[i];
    t.generated_probability = real_probability(discriminator, v, batch[i].input, y_hat, eps);
    t.real_term = std::log(t.real_probability);
    t.fake_term = std::log1p(-t.generated_probability);
  });
  // summed in batch order
  double sum = 0.0;
  for (const auto& t : est.per_sample) sum += t.real_term + t.fake_term;
  est.value = sum / static_cast<double>(batch.size());
  return est;
}

LossEstimate estimate_loss(Backend& generator, Backend& discriminator, const GeneratorPrompt& u,
                           const DiscriminatorPrompt& v, std::span<const TaskSample> batch,
                           const GenerationParams& params, double eps, Execution exec) {
  if (batch.empty()) throw EmptyBatch("loss needs at least one sample");
  const auto outputs = generate_outputs(generator, u, batch, params, exec);
  return score_loss(discriminator, v, batch, outputs, eps, exec);
}

}  // namespace advicl
