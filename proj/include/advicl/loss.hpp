#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advicl/backend.hpp"
#include "advicl/parallel.hpp"
#include "advicl/prompt.hpp"

namespace advicl {

inline constexpr double kDefaultClampEps = 1e-6;

// A real (input, reference output) pair. `id` is stable within its pool and
// keys per-sample seeds and trace rows.
struct TaskSample {
  TaskSample(std::size_t id, std::string_view input, std::string_view output);

  std::size_t id;
  std::string input;
  std::string output;
};

struct SampleTerms {
  std::size_t sample_id = 0;
  double real_probability = 0.5;       // D(x, y)
  double generated_probability = 0.5;  // D(x, G(x))
  double real_term = 0.0;              // ln D(x, y)
  double fake_term = 0.0;              // ln(1 - D(x, G(x)))
  std::string generated_output;
};

struct LossEstimate {
  double value = 0.0;  // mean of real_term + fake_term
  std::vector<SampleTerms> per_sample;
};

// Two-option softmax exp(a) / (exp(a) + exp(b)) clamped into [eps, 1 - eps].
double real_probability_from_logprobs(double lp_real, double lp_generated, double eps = kDefaultClampEps);

// P(real) of the pair (x, y) under discriminator prompt v, read from the
// logprobs of v's two option tokens.
double real_probability(Backend& discriminator, const DiscriminatorPrompt& v, std::string_view input,
                        std::string_view output, double eps = kDefaultClampEps);

// Seed of sample `sample_id` given the per-evaluation base seed. Candidates
// evaluated with the same base seed share their generator noise.
std::int64_t sample_seed(std::int64_t base_seed, std::size_t sample_id);

// G_U(x_i) for each sample, decoded with sample_seed(params.seed, id).
std::vector<std::string> generate_outputs(Backend& generator, const GeneratorPrompt& u,
                                          std::span<const TaskSample> batch, const GenerationParams& params,
                                          Execution exec = Execution::Parallel);

// Monte Carlo adversarial loss for fixed generated outputs.
LossEstimate score_loss(Backend& discriminator, const DiscriminatorPrompt& v, std::span<const TaskSample> batch,
                        std::span<const std::string> generated, double eps = kDefaultClampEps,
                        Execution exec = Execution::Parallel);

// J(D_V, G_U) = mean_i [ ln D(x_i, y_i) + ln(1 - D(x_i, G_U(x_i))) ]. Throws EmptyBatch.
LossEstimate estimate_loss(Backend& generator, Backend& discriminator, const GeneratorPrompt& u,
                           const DiscriminatorPrompt& v, std::span<const TaskSample> batch,
                           const GenerationParams& params, double eps = kDefaultClampEps,
                           Execution exec = Execution::Parallel);

}  // namespace advicl
