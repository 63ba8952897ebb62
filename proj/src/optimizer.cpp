#include "advicl/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "advicl/text.hpp"

namespace advicl {

void RunConfig::validate() const {
  if (iterations < 0) throw ConfigError("run.T must be >= 0");
  if (samples_per_iteration <= 0) throw ConfigError("run.m must be positive");
  if (variants_per_slot <= 0) throw ConfigError("run.r must be positive");
  if (!(eps > 0.0 && eps < 0.5)) throw ConfigError("run.eps must lie in (0, 0.5)");
  gen_params.validate();
  disc_params.validate();
  mod_params.validate();
}

nlohmann::json to_json(const RunConfig& cfg) {
  return {{"T", cfg.iterations},
          {"m", cfg.samples_per_iteration},
          {"r", cfg.variants_per_slot},
          {"eps", cfg.eps},
          {"seed", cfg.seed},
          {"gen_params", to_json(cfg.gen_params)},
          {"disc_params", to_json(cfg.disc_params)},
          {"mod_params", to_json(cfg.mod_params)},
          {"demo_kind", std::string(to_string(cfg.demo_kind))},
          {"parallel", cfg.execution == Execution::Parallel}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  cfg.iterations = j.value("T", cfg.iterations);
  cfg.samples_per_iteration = j.value("m", cfg.samples_per_iteration);
  cfg.variants_per_slot = j.value("r", cfg.variants_per_slot);
  cfg.eps = j.value("eps", cfg.eps);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("gen_params")) cfg.gen_params = generation_params_from_json(j.at("gen_params"), cfg.gen_params);
  if (j.contains("disc_params")) cfg.disc_params = generation_params_from_json(j.at("disc_params"), cfg.disc_params);
  if (j.contains("mod_params")) cfg.mod_params = generation_params_from_json(j.at("mod_params"), cfg.mod_params);
  if (j.contains("demo_kind")) cfg.demo_kind = parse_slot_kind(j.at("demo_kind").get<std::string>());
  cfg.execution = j.value("parallel", true) ? Execution::Parallel : Execution::Serial;
  cfg.validate();
  return cfg;
}

std::string_view to_string(Side side) noexcept {
  return side == Side::Generator ? "generator" : "discriminator";
}

nlohmann::json to_json(const CandidateEvaluation& e) {
  return {{"side", std::string(to_string(e.side))},
          {"slot", e.slot.describe()},
          {"variant", e.variant_index},
          {"content", e.content},
          {"loss", e.loss},
          {"baseline", e.baseline},
          {"accepted", e.accepted}};
}

nlohmann::json to_json(const IterationTrace& t) {
  nlohmann::json accepted = nlohmann::json::array();
  for (const auto& e : t.accepted_edits) accepted.push_back(to_json(e));
  return {{"iteration", t.iteration},
          {"minibatch", t.minibatch_ids},
          {"baseline_loss", t.baseline_loss},
          {"accepted_edits", std::move(accepted)},
          {"evaluated_candidates", t.evaluations.size()},
          {"rejected_candidates", t.rejected_candidates},
          {"skipped_slots", t.skipped_slots},
          {"final_loss", t.final_loss}};
}

IterationSeeds iteration_seeds(std::int64_t run_seed, int iteration) {
  const std::uint64_t base = text::hash_combine(static_cast<std::uint64_t>(run_seed), static_cast<std::uint64_t>(iteration));
  return {static_cast<std::int64_t>(text::mix64(base ^ 0x67656eULL) >> 1),
          static_cast<std::int64_t>(text::mix64(base ^ 0x6d6f64ULL) >> 1)};
}

std::vector<std::size_t> sample_minibatch(std::size_t pool_size, std::size_t m, std::int64_t seed, int iteration) {
  if (m > pool_size) throw InsufficientPool("minibatch of " + std::to_string(m) + " from a pool of " +
                                            std::to_string(pool_size));
  std::vector<std::size_t> idx(pool_size);
  std::iota(idx.begin(), idx.end(), 0);
  std::uint64_t state = text::hash_combine(static_cast<std::uint64_t>(seed), 0x6d62ULL + static_cast<std::uint64_t>(iteration));
  for (std::size_t i = 0; i < m; ++i) {
    state = text::mix64(state);
    const std::size_t j = i + static_cast<std::size_t>(state % (pool_size - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  return idx;
}

DiscriminatorPrompt init_discriminator_prompt(const GeneratorPrompt& u0, std::span<const TaskSample> pool,
                                              std::size_t k, Backend& generator, std::int64_t seed,
                                              const GenerationParams& gen_params) {
  if (k == 0) throw InvalidArgument("discriminator needs at least one demo");
  if (pool.size() < k) {
    throw InsufficientPool("need " + std::to_string(k) + " samples for the discriminator demos, pool has " +
                           std::to_string(pool.size()));
  }
  std::vector<LabeledDemonstration> demos;
  for (std::size_t i = 0; i < k; ++i) {
    const TaskSample& s = pool[i];
    if (i % 2 == 0) {
      demos.emplace_back(s.input, s.output, Label::Real);
      continue;
    }
    const auto prompt = render_generator_prompt(u0, s.input);
    std::string y = text::trim(generator.complete(prompt, gen_params.with_seed(sample_seed(seed, s.id))).text);
    if (y.empty()) y = "(empty)";
    demos.emplace_back(s.input, y, Label::Generated);
  }
  return DiscriminatorPrompt(templates::kDefaultDiscriminatorInstruction, std::move(demos));
}

namespace {

struct Scored {
  std::optional<CandidateEvaluation> eval;
  std::optional<Baseline> state;
  std::optional<PromptPair> pair;
};

SlotKind kind_for(const PromptSlot& slot, const RunConfig& cfg) {
  return slot.kind() == PromptSlot::Kind::Instruction ? SlotKind::Instruction : cfg.demo_kind;
}

std::int64_t slot_modifier_seed(const IterationSeeds& seeds, Side side, const PromptSlot& slot) {
  std::uint64_t h = text::hash_combine(static_cast<std::uint64_t>(seeds.modifier_seed), side == Side::Generator ? 1 : 2);
  h = text::hash_combine(h, slot.kind() == PromptSlot::Kind::Instruction ? 0 : slot.index() + 1);
  return static_cast<std::int64_t>(h >> 1);
}

}  // namespace

SlotOutcome optimize_slot(Side side, const PromptSlot& slot, const PromptPair& pair, const Baseline& baseline,
                          std::span<const TaskSample> batch, const RunConfig& cfg, const Backends& backends,
                          const IterationSeeds& seeds, const ModifierTemplates& templates) {
  SlotOutcome outcome{pair, baseline, std::nullopt, {}, false};
  const std::string source =
      side == Side::Generator ? slot_content(pair.u, slot) : slot_content(pair.v, slot);

  VariantBatch variants;
  try {
    variants = propose_variants(*backends.modifier, kind_for(slot, cfg), source, cfg.variants_per_slot,
                                cfg.mod_params.with_seed(slot_modifier_seed(seeds, side, slot)), templates);
  } catch (const BudgetExceeded&) {
    throw;
  } catch (const Error& e) {
    spdlog::warn("skipping {} {}: {}", to_string(side), slot.describe(), e.what());
    outcome.skipped = true;
    return outcome;
  }

  const GenerationParams gen = cfg.gen_params.with_seed(seeds.gen_seed);
  std::vector<Scored> scored(variants.variants.size());
  for_each_index(scored.size(), cfg.execution, [&](std::size_t n) {
    const std::string& content = variants.variants[n];
    PromptPair candidate = pair;
    try {
      if (side == Side::Generator) {
        candidate.u = apply_edit(pair.u, slot, content);
      } else {
        candidate.v = apply_edit(pair.v, slot, content);
      }
    } catch (const Error& e) {
      spdlog::debug("dropping variant {} of {}: {}", n, slot.describe(), e.what());
      return;
    }
    Baseline state;
    if (side == Side::Generator) {
      state.generated = generate_outputs(*backends.generator, candidate.u, batch, gen, Execution::Serial);
    } else {
      state.generated = baseline.generated;  // U is unchanged during the discriminator phase
    }
    state.loss = score_loss(*backends.discriminator, candidate.v, batch, state.generated, cfg.eps, Execution::Serial);
    scored[n].eval = CandidateEvaluation{slot, side, n, content, state.loss.value, baseline.loss.value, false};
    scored[n].state = std::move(state);
    scored[n].pair = std::move(candidate);
  });

  std::optional<std::size_t> best;
  for (std::size_t n = 0; n < scored.size(); ++n) {
    if (!scored[n].eval) continue;
    outcome.evaluations.push_back(*scored[n].eval);
    const double loss = scored[n].eval->loss;
    if (!best) {
      best = n;
    } else if (side == Side::Discriminator ? loss > scored[*best].eval->loss : loss < scored[*best].eval->loss) {
      best = n;
    }
  }
  if (!best) {
    outcome.skipped = true;
    return outcome;
  }
  const double best_loss = scored[*best].eval->loss;
  const bool improves = side == Side::Discriminator ? best_loss > baseline.loss.value : best_loss < baseline.loss.value;
  if (improves) {
    for (auto& e : outcome.evaluations) e.accepted = e.variant_index == *best;
    outcome.accepted = *scored[*best].eval;
    outcome.accepted->accepted = true;
    outcome.pair = std::move(*scored[*best].pair);
    outcome.baseline = std::move(*scored[*best].state);
  }
  return outcome;
}

RunResult run(const GeneratorPrompt& u0, const DiscriminatorPrompt& v0, std::span<const TaskSample> pool,
              const RunConfig& cfg, const Backends& backends, const ModifierTemplates& templates,
              const RunHooks& hooks, int first_iteration) {
  cfg.validate();
  if (pool.empty()) throw InsufficientPool("training pool is empty");
  if (!backends.generator || !backends.discriminator || !backends.modifier) {
    throw InvalidArgument("generator, discriminator and modifier backends are required");
  }
  std::size_t m = static_cast<std::size_t>(cfg.samples_per_iteration);
  if (m > pool.size()) {
    spdlog::info("pool holds {} samples; using m = {} instead of {}", pool.size(), pool.size(), m);
    m = pool.size();
  }

  RunResult result{u0, v0, {}, {PromptPair{u0, v0}}};
  PromptPair pair{u0, v0};
  for (int it = first_iteration; it < cfg.iterations; ++it) {
    IterationTrace trace;
    trace.iteration = it;
    const auto ids = sample_minibatch(pool.size(), m, cfg.seed, it);
    std::vector<TaskSample> batch;
    for (std::size_t i : ids) {
      batch.push_back(pool[i]);
      trace.minibatch_ids.push_back(pool[i].id);
    }
    const IterationSeeds seeds = iteration_seeds(cfg.seed, it);
    Baseline state;
    state.generated = generate_outputs(*backends.generator, pair.u, batch, cfg.gen_params.with_seed(seeds.gen_seed),
                                       cfg.execution);
    state.loss = score_loss(*backends.discriminator, pair.v, batch, state.generated, cfg.eps, cfg.execution);
    trace.baseline_loss = state.loss.value;

    std::size_t slots_total = 0;
    auto visit = [&](Side side) {
      const std::size_t demos = side == Side::Discriminator ? pair.v.demos().size() : pair.u.demos().size();
      for (const auto& slot : slots_of(demos)) {
        ++slots_total;
        SlotOutcome out = optimize_slot(side, slot, pair, state, batch, cfg, backends, seeds, templates);
        if (hooks.on_slot) hooks.on_slot(it, out);
        if (out.skipped) ++trace.skipped_slots;
        for (const auto& e : out.evaluations) {
          trace.evaluations.push_back(e);
          if (!e.accepted) ++trace.rejected_candidates;
        }
        if (out.accepted) {
          trace.accepted_edits.push_back(*out.accepted);
          pair = std::move(out.pair);
          state = std::move(out.baseline);
          result.snapshots.push_back(pair);
        }
      }
    };
    visit(Side::Discriminator);
    visit(Side::Generator);
    trace.final_loss = state.loss.value;

    result.u_final = pair.u;
    result.v_final = pair.v;
    result.traces.push_back(trace);
    if (slots_total > 0 && trace.skipped_slots == slots_total) {
      throw RunAborted("iteration " + std::to_string(it) + ": every slot failed", std::move(result));
    }
    if (hooks.on_iteration) hooks.on_iteration(trace, pair);
  }
  return result;
}

}  // namespace advicl
