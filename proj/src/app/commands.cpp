#include "advicl/app/commands.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "advicl/app/config.hpp"
#include "advicl/app/dataset.hpp"
#include "advicl/errors.hpp"
#include "advicl/evaluation.hpp"
#include "advicl/optimizer.hpp"
#include "advicl/text.hpp"
#include "advicl/theory.hpp"

namespace advicl::app {

namespace fs = std::filesystem;

namespace {

// Exclusive marker file guarding one output directory.
class RunLock {
 public:
  explicit RunLock(const fs::path& dir) : path_(dir / ".lock") {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) throw ConfigError("output directory " + dir.string() + " is locked by another run (" +
                                  path_.string() + ")");
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
  }
  ~RunLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  fs::path path_;
};

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("short write to " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string file_sha256(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return text::sha256_hex(ss.str());
}

struct BackendSet {
  Backends backends;
  std::shared_ptr<CallBudget> budget;
  std::shared_ptr<SyntheticBackend> synthetic_generator;  // set when G is synthetic
};

BackendPtr wrap(const BackendConfig& c, BackendPtr inner, const std::shared_ptr<CallBudget>& budget) {
  BackendPtr b = with_budget(std::move(inner), budget);
  if (c.cache_dir) b = with_cache(std::move(b), c.cache_dir->string());
  return b;
}

BackendSet build_backends(const AppConfig& cfg) {
  BackendSet set;
  set.budget = std::make_shared<CallBudget>(cfg.limits.max_backend_calls);
  // construct all three first so a missing credential fails before any call
  BackendPtr g = make_backend(cfg.generator);
  BackendPtr d = make_backend(cfg.discriminator);
  BackendPtr m = make_backend(cfg.modifier);
  set.synthetic_generator = std::dynamic_pointer_cast<SyntheticBackend>(g);
  set.backends = {wrap(cfg.generator, g, set.budget), wrap(cfg.discriminator, d, set.budget),
                  wrap(cfg.modifier, m, set.budget)};
  return set;
}

nlohmann::json descriptors(const AppConfig& cfg) {
  return {{"generator", to_json(cfg.generator.descriptor)},
          {"discriminator", to_json(cfg.discriminator.descriptor)},
          {"modifier", to_json(cfg.modifier.descriptor)}};
}

GeneratorPrompt initial_prompt(const AppConfig& cfg, const std::vector<TaskSample>& train) {
  GeneratorPrompt u0 = generator_prompt_from_json(read_json(cfg.task.prompt_path));
  if (u0.demos().empty() && cfg.task.k_shots) {
    const auto k = static_cast<std::size_t>(*cfg.task.k_shots);
    if (k > train.size()) {
      throw ConfigError("k_shots = " + std::to_string(k) + " exceeds the " + std::to_string(train.size()) +
                        " training samples");
    }
    std::vector<Demonstration> demos;
    for (std::size_t i = 0; i < k; ++i) demos.emplace_back(train[i].input, train[i].output);
    u0 = GeneratorPrompt(u0.instruction(), std::move(demos));
  }
  return u0;
}

nlohmann::json report_summary(const EvalReport& r, const std::string& file) {
  return {{"file", file}, {"metric", std::string(to_string(r.metric))}, {"mean_score", r.mean_score},
          {"count", r.per_example.size()}};
}

std::string iso_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

template <typename Body>
int guarded(const char* command, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << command << ": configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << command << ": " << e.what() << '\n';
    return 1;
  }
}

void finish_manifest(nlohmann::json& manifest, const fs::path& out, double seconds, std::uint64_t calls,
                     const std::string& started) {
  manifest["runtime"] = {{"wall_clock_seconds", seconds},
                         {"total_backend_calls", calls},
                         {"out_dir", out.string()},
                         {"started_at", started}};
  manifest["manifest_hash"] = manifest_hash(manifest);
}

}  // namespace

std::string manifest_hash(const nlohmann::json& manifest) {
  nlohmann::json stable = manifest;
  stable.erase("runtime");
  stable.erase("manifest_hash");
  return text::sha256_hex(stable.dump());
}

int cmd_optimize(const fs::path& config_path, const OptimizeOptions& opts) {
  return guarded("optimize", [&] {
    AppConfig cfg = load_config(config_path);
    if (opts.seed) cfg.run.seed = *opts.seed;
    if (opts.out_dir) cfg.out_dir = *opts.out_dir;
    const auto started = std::chrono::steady_clock::now();
    const std::string started_at = iso_now();

    BackendSet set = build_backends(cfg);
    const ModifierTemplates templates = load_templates(cfg);
    const auto train = take(load_dataset(cfg.task.train_path), cfg.limits.train_cap);
    const GeneratorPrompt u0 = initial_prompt(cfg, train);

    fs::create_directories(cfg.out_dir);
    RunLock lock(cfg.out_dir);
    const fs::path trace_path = cfg.out_dir / "trace.jsonl";
    const fs::path checkpoint_path = cfg.out_dir / "checkpoint.json";

    const std::size_t k = cfg.task.k_shots ? static_cast<std::size_t>(*cfg.task.k_shots)
                                           : std::max<std::size_t>(1, std::min(u0.demos().size(), train.size()));
    DiscriminatorPrompt v0 =
        init_discriminator_prompt(u0, train, k, *set.backends.generator, cfg.run.seed, cfg.run.gen_params);
    GeneratorPrompt u_start = u0;
    DiscriminatorPrompt v_start = v0;
    int first_iteration = 0;
    nlohmann::json prior_iterations = nlohmann::json::array();
    if (opts.resume && fs::exists(checkpoint_path)) {
      const auto cp = read_json(checkpoint_path);
      u_start = generator_prompt_from_json(cp.at("generator"));
      v_start = discriminator_prompt_from_json(cp.at("discriminator"));
      first_iteration = cp.at("next_iteration").get<int>();
      prior_iterations = cp.value("iterations", nlohmann::json::array());
      spdlog::info("resuming at iteration {}", first_iteration);
    } else {
      write_text(trace_path, "");
    }
    write_json(cfg.out_dir / "initial_prompt.json", to_json(u0));
    write_json(cfg.out_dir / "initial_discriminator.json", to_json(v0));

    std::ofstream trace(trace_path, std::ios::app);
    nlohmann::json iterations = prior_iterations;
    RunHooks hooks;
    hooks.on_slot = [&](int it, const SlotOutcome& out) {
      nlohmann::json candidates = nlohmann::json::array();
      for (const auto& e : out.evaluations) candidates.push_back(to_json(e));
      const std::string side =
          out.evaluations.empty() ? std::string{} : std::string(to_string(out.evaluations.front().side));
      trace << nlohmann::json{{"iteration", it},
                              {"side", side},
                              {"skipped", out.skipped},
                              {"accepted", out.accepted ? to_json(*out.accepted) : nlohmann::json(nullptr)},
                              {"loss_after", out.baseline.loss.value},
                              {"candidates", std::move(candidates)}}
                   .dump()
            << '\n';
      trace.flush();
    };
    hooks.on_iteration = [&](const IterationTrace& t, const PromptPair& pair) {
      iterations.push_back(to_json(t));
      write_json(checkpoint_path, {{"next_iteration", t.iteration + 1},
                                   {"generator", to_json(pair.u)},
                                   {"discriminator", to_json(pair.v)},
                                   {"iterations", iterations}});
      spdlog::info("iteration {}: J {:.4f} -> {:.4f}, {} edits accepted", t.iteration, t.baseline_loss, t.final_loss,
                   t.accepted_edits.size());
    };

    nlohmann::json manifest{{"command", "optimize"},
                            {"config", config_to_json(cfg)},
                            {"backends", descriptors(cfg)},
                            {"initial_prompt", to_json(u0)},
                            {"resumed_from", opts.resume ? nlohmann::json(first_iteration) : nlohmann::json(nullptr)}};
    RunResult result;
    try {
      result = run(u_start, v_start, train, cfg.run, set.backends, templates, hooks, first_iteration);
    } catch (const RunAborted& e) {
      trace.close();
      manifest["status"] = "aborted";
      manifest["error"] = e.what();
      manifest["iterations"] = iterations;
      finish_manifest(manifest, cfg.out_dir,
                      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count(),
                      set.budget->used(), started_at);
      write_json(cfg.out_dir / "manifest.json", manifest);
      throw;
    }
    trace.close();

    write_json(cfg.out_dir / "final_prompt.json", to_json(result.u_final));
    write_json(cfg.out_dir / "final_discriminator.json", to_json(result.v_final));
    manifest["status"] = "complete";
    manifest["final_prompt"] = to_json(result.u_final);
    manifest["discriminator"] = {{"initial", to_json(v0)}, {"final", to_json(result.v_final)}};
    manifest["iterations"] = iterations;
    manifest["trace_file"] = "trace.jsonl";
    manifest["trace_sha256"] = file_sha256(trace_path);

    nlohmann::json reports = nlohmann::json::object();
    if (opts.evaluate && cfg.task.test_path) {
      const auto test = take(load_dataset(*cfg.task.test_path), cfg.limits.test_cap);
      const GenerationParams params = cfg.run.gen_params.with_seed(cfg.run.seed);
      for (const auto& [name, prompt] : std::initializer_list<std::pair<const char*, const GeneratorPrompt*>>{{"initial", &u0}, {"final", &result.u_final}}) {
        const EvalReport r = evaluate_prompt(*set.backends.generator, *prompt, test, cfg.task.metric, params,
                                             cfg.run.execution);
        const std::string file = std::string("eval_") + name + ".json";
        write_json(cfg.out_dir / file, to_json(r));
        reports[name] = report_summary(r, file);
      }
    }
    manifest["eval_reports"] = reports;
    if (set.synthetic_generator) {
      manifest["synthetic_quality"] = {{"initial", synthetic_prompt_quality(*set.synthetic_generator, u0)},
                                       {"final", synthetic_prompt_quality(*set.synthetic_generator, result.u_final)}};
    }
    finish_manifest(manifest, cfg.out_dir,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count(),
                    set.budget->used(), started_at);
    write_json(cfg.out_dir / "manifest.json", manifest);
    std::cout << "final prompt: " << (cfg.out_dir / "final_prompt.json").string() << '\n'
              << "manifest hash: " << manifest["manifest_hash"].get<std::string>() << '\n';
    return 0;
  });
}

int cmd_evaluate(const fs::path& config_path, const fs::path& prompt_path, const EvaluateOptions& opts) {
  return guarded("evaluate", [&] {
    AppConfig cfg = load_config(config_path);
    if (opts.out_dir) cfg.out_dir = *opts.out_dir;
    if (opts.test_cap) cfg.limits.test_cap = *opts.test_cap;
    if (!cfg.task.test_path) throw ConfigError("task.test_path is required for evaluate");
    BackendSet set = build_backends(cfg);
    const GeneratorPrompt u = generator_prompt_from_json(read_json(prompt_path));
    const auto test = take(load_dataset(*cfg.task.test_path), cfg.limits.test_cap);

    fs::create_directories(cfg.out_dir);
    RunLock lock(cfg.out_dir);
    const std::string stem = prompt_path.stem().string();
    const EvalReport report = evaluate_prompt(
        *set.backends.generator, u, test, cfg.task.metric, cfg.run.gen_params.with_seed(cfg.run.seed),
        cfg.run.execution, [&](const EvalReport& partial) {
          write_json(cfg.out_dir / ("eval_" + stem + ".partial.json"), to_json(partial));
        });
    const fs::path out = cfg.out_dir / ("eval_" + stem + ".json");
    write_json(out, to_json(report));
    std::cout << to_string(report.metric) << " " << std::fixed << std::setprecision(4) << report.mean_score << " over "
              << report.per_example.size() << " examples -> " << out.string() << '\n';
    return 0;
  });
}

int cmd_baseline(const fs::path& config_path, SelectionCriterion criterion, const BaselineOptions& opts) {
  return guarded("baseline", [&] {
    AppConfig cfg = load_config(config_path);
    if (opts.out_dir) cfg.out_dir = *opts.out_dir;
    if (opts.dev_size) cfg.limits.dev_size = *opts.dev_size;
    const auto started = std::chrono::steady_clock::now();
    const std::string started_at = iso_now();

    BackendSet set = build_backends(cfg);
    const ModifierTemplates templates = load_templates(cfg);
    const auto train = take(load_dataset(cfg.task.train_path), cfg.limits.train_cap);
    const GeneratorPrompt u0 = initial_prompt(cfg, train);
    const auto dev = take(load_dataset(cfg.task.dev_path.value_or(cfg.task.train_path)), cfg.limits.dev_size);

    fs::create_directories(cfg.out_dir);
    RunLock lock(cfg.out_dir);
    ParaphraseConfig pc;
    pc.paraphrases = cfg.limits.paraphrases;
    pc.demo_kind = cfg.task.demo_kind;
    pc.gen_params = cfg.run.gen_params;
    pc.mod_params = cfg.run.mod_params;
    pc.seed = cfg.run.seed;
    pc.execution = cfg.run.execution;
    const auto result = paraphrase_select(*set.backends.modifier, *set.backends.generator, u0, dev, criterion, pc,
                                          templates);

    const std::string tag = "baseline_" + std::string(to_string(criterion));
    write_json(cfg.out_dir / (tag + "_prompt.json"), to_json(result.prompt));
    nlohmann::json slots = nlohmann::json::array();
    for (const auto& s : result.slots) slots.push_back(to_json(s));
    write_json(cfg.out_dir / (tag + "_selection.json"), slots);

    nlohmann::json manifest{{"command", "baseline"},
                            {"criterion", std::string(to_string(criterion))},
                            {"dev_size", dev.size()},
                            {"paraphrases", pc.paraphrases},
                            {"config", config_to_json(cfg)},
                            {"backends", descriptors(cfg)},
                            {"initial_prompt", to_json(u0)},
                            {"final_prompt", to_json(result.prompt)},
                            {"selection", slots}};
    nlohmann::json reports = nlohmann::json::object();
    if (cfg.task.test_path) {
      const auto test = take(load_dataset(*cfg.task.test_path), cfg.limits.test_cap);
      const EvalReport r = evaluate_prompt(*set.backends.generator, result.prompt, test, cfg.task.metric,
                                           cfg.run.gen_params.with_seed(cfg.run.seed), cfg.run.execution);
      write_json(cfg.out_dir / (tag + "_eval.json"), to_json(r));
      reports["final"] = report_summary(r, tag + "_eval.json");
    }
    manifest["eval_reports"] = reports;
    finish_manifest(manifest, cfg.out_dir,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count(),
                    set.budget->used(), started_at);
    write_json(cfg.out_dir / (tag + "_manifest.json"), manifest);
    std::cout << "baseline prompt: " << (cfg.out_dir / (tag + "_prompt.json")).string() << '\n';
    return 0;
  });
}

int cmd_simulate(const SimulateOptions& opts) {
  return guarded("simulate", [&] {
    using theory::FiniteDistribution;
    if (opts.n < 2 || opts.n > 64) throw ConfigError("n must lie in [2, 64]");
    if (opts.steps == 0 || opts.steps > 10000) throw ConfigError("steps must lie in [1, 10000]");
    if (!(opts.step_size > 0.0 && opts.step_size <= 1.0)) throw ConfigError("step size must lie in (0, 1]");

    std::uint64_t state = text::mix64(opts.seed);
    auto random_dist = [&](std::size_t n) {
      std::vector<double> w(n);
      for (auto& x : w) {
        state = text::mix64(state);
        x = 0.05 + text::unit_interval(state);
      }
      return FiniteDistribution::from_weights(std::move(w));
    };
    auto given = [&](const std::vector<double>& w) {
      try {
        return FiniteDistribution::from_weights(w);
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
    };
    const FiniteDistribution p_data = opts.p_data ? given(*opts.p_data) : random_dist(opts.n);
    const FiniteDistribution p_g0 =
        opts.fixed_point ? p_data : (opts.p_g0 ? given(*opts.p_g0) : random_dist(p_data.size()));
    if (p_g0.size() != p_data.size()) throw ConfigError("p_data and p_g0 sizes differ");

    const auto traj = theory::simulate_convergence(p_data, p_g0, opts.steps, opts.step_size);
    fs::create_directories(opts.out_dir);
    std::ostringstream table;
    table << std::setprecision(17) << "step\tloss\tjsd";
    for (std::size_t i = 0; i < p_data.size(); ++i) table << "\tp_g" << i;
    table << '\n';
    bool monotone = true;
    for (std::size_t s = 0; s < traj.steps.size(); ++s) {
      const auto& st = traj.steps[s];
      if (s > 0 && st.loss > traj.steps[s - 1].loss + 1e-12) monotone = false;
      table << s << '\t' << st.loss << '\t' << st.jsd;
      for (double p : st.p_g) table << '\t' << p;
      table << '\n';
    }
    write_text(opts.out_dir / "trajectory.tsv", table.str());

    const double target = -2.0 * std::log(2.0);
    const auto& last = traj.steps.back();
    const bool converged = last.jsd < 1e-3 && std::abs(last.loss - target) < 1e-3;
    nlohmann::json summary{{"n", p_data.size()},
                           {"steps", opts.steps},
                           {"step_size", opts.step_size},
                           {"seed", opts.seed},
                           {"p_data", std::vector<double>(p_data.probs().begin(), p_data.probs().end())},
                           {"p_g0", std::vector<double>(p_g0.probs().begin(), p_g0.probs().end())},
                           {"final_loss", last.loss},
                           {"target_loss", target},
                           {"final_jsd", last.jsd},
                           {"monotone", monotone},
                           {"floored", traj.floored},
                           {"pass", converged && monotone}};
    write_json(opts.out_dir / "summary.json", summary);
    std::cout << std::setprecision(6) << "final J " << last.loss << " (target " << target << "), final JSD "
              << last.jsd << ", monotone " << (monotone ? "yes" : "no") << " -> "
              << (converged && monotone ? "PASS" : "FAIL") << '\n';
    return 0;
  });
}

}  // namespace advicl::app
