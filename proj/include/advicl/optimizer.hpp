#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "advicl/backend.hpp"
#include "advicl/errors.hpp"
#include "advicl/loss.hpp"
#include "advicl/modifier.hpp"
#include "advicl/parallel.hpp"
#include "advicl/prompt.hpp"

namespace advicl {

struct RunConfig {
  int iterations = 3;            // T
  int samples_per_iteration = 5; // m
  int variants_per_slot = 5;     // r
  double eps = kDefaultClampEps;
  std::int64_t seed = 0;
  GenerationParams gen_params{0.6, 0.9, 256, std::nullopt};
  GenerationParams disc_params{0.6, 0.9, 1, std::nullopt};
  GenerationParams mod_params{0.6, 0.9, 1024, std::nullopt};
  SlotKind demo_kind = SlotKind::OpenEndedDemo;
  Execution execution = Execution::Parallel;

  void validate() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

struct Backends {
  BackendPtr generator;
  BackendPtr discriminator;
  BackendPtr modifier;
};

enum class Side { Generator, Discriminator };
std::string_view to_string(Side side) noexcept;

struct CandidateEvaluation {
  PromptSlot slot = PromptSlot::instruction();
  Side side = Side::Discriminator;
  std::size_t variant_index = 0;
  std::string content;
  double loss = 0.0;
  double baseline = 0.0;  // in-force baseline when the candidate was scored
  bool accepted = false;
};

nlohmann::json to_json(const CandidateEvaluation& e);

struct IterationTrace {
  int iteration = 0;
  std::vector<std::size_t> minibatch_ids;
  double baseline_loss = 0.0;
  std::vector<CandidateEvaluation> accepted_edits;
  std::vector<CandidateEvaluation> evaluations;
  std::size_t rejected_candidates = 0;
  std::size_t skipped_slots = 0;
  double final_loss = 0.0;
};

nlohmann::json to_json(const IterationTrace& t);

struct PromptPair {
  GeneratorPrompt u;
  DiscriminatorPrompt v;
  friend bool operator==(const PromptPair&, const PromptPair&) = default;
};

// Current loss on the iteration's minibatch, with the generated outputs
// it was computed from.
struct Baseline {
  LossEstimate loss;
  std::vector<std::string> generated;
};

struct SlotOutcome {
  PromptPair pair;
  Baseline baseline;
  std::optional<CandidateEvaluation> accepted;
  std::vector<CandidateEvaluation> evaluations;
  bool skipped = false;
};

// Seeds for one iteration. Candidates inside an iteration share gen_seed so
// their generator noise is identical.
struct IterationSeeds {
  std::int64_t gen_seed;
  std::int64_t modifier_seed;
};
IterationSeeds iteration_seeds(std::int64_t run_seed, int iteration);

// m distinct pool indices, reproducible from (seed, iteration).
std::vector<std::size_t> sample_minibatch(std::size_t pool_size, std::size_t m, std::int64_t seed, int iteration);

// k labelled demos alternating Real / Generated. Demo i uses pool[i]; Real
// demos keep the reference output, Generated demos carry G_{u0}(x_i).
DiscriminatorPrompt init_discriminator_prompt(const GeneratorPrompt& u0, std::span<const TaskSample> pool,
                                              std::size_t k, Backend& generator, std::int64_t seed,
                                              const GenerationParams& gen_params = {});

// Proposes r variants for one slot, scores each on the same batch and keeps the
// best one if it strictly improves the baseline (max for the discriminator,
// min for the generator; ties go to the lowest variant index).
SlotOutcome optimize_slot(Side side, const PromptSlot& slot, const PromptPair& pair, const Baseline& baseline,
                          std::span<const TaskSample> batch, const RunConfig& cfg, const Backends& backends,
                          const IterationSeeds& seeds, const ModifierTemplates& templates = {});

struct RunResult {
  GeneratorPrompt u_final;
  DiscriminatorPrompt v_final;
  std::vector<IterationTrace> traces;
  // The prompt pair before the run and after every accepted edit.
  std::vector<PromptPair> snapshots;
};

// Thrown when every slot of an iteration failed; carries what was done so far.
class RunAborted : public Error {
 public:
  RunAborted(const std::string& message, RunResult partial) : Error(message), partial_(std::move(partial)) {}
  const RunResult& partial() const noexcept { return partial_; }

 private:
  RunResult partial_;
};

struct RunHooks {
  // Called after each completed iteration with the prompts in force.
  std::function<void(const IterationTrace&, const PromptPair&)> on_iteration;
  // Called after each slot evaluation.
  std::function<void(int iteration, const SlotOutcome&)> on_slot;
};

// Alternating hill climbing of V (maximise J) then U (minimise J) for
// cfg.iterations rounds, starting at `first_iteration` (for resumed runs).
RunResult run(const GeneratorPrompt& u0, const DiscriminatorPrompt& v0, std::span<const TaskSample> pool,
              const RunConfig& cfg, const Backends& backends, const ModifierTemplates& templates = {},
              const RunHooks& hooks = {}, int first_iteration = 0);

}  // namespace advicl
