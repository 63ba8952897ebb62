// advicl: command-line front end.
//
//   advicl optimize --config run.json [--out DIR] [--seed N] [--resume] [--no-eval]
//   advicl evaluate --config run.json --prompt prompt.json [--cap N] [--out DIR]
//   advicl baseline --config run.json --criterion rouge-l|perplexity [--dev-size N] [--out DIR]
//   advicl simulate [--n N] [--steps N] [--step-size X] [--seed N] [--p-data a,b,..] [--p-g0 a,b,..]
//                   [--fixed-point] [--out DIR]

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "advicl/app/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Adversarial in-context prompt optimisation"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  std::string config;
  std::string out;
  std::int64_t seed = 0;

  advicl::app::OptimizeOptions optimize_opts;
  auto* optimize = app.add_subcommand("optimize", "run the adversarial optimiser on a task");
  optimize->add_option("--config", config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  optimize->add_option("--out", out, "output directory (overrides paths.out_dir)");
  auto* seed_opt = optimize->add_option("--seed", seed, "run seed (overrides run.seed)");
  optimize->add_flag("--resume", optimize_opts.resume, "continue from the checkpoint in the output directory");
  bool no_eval = false;
  optimize->add_flag("--no-eval", no_eval, "skip scoring the initial and final prompts on the test set");

  std::string prompt;
  std::size_t cap = 0;
  auto* evaluate = app.add_subcommand("evaluate", "score a generator prompt on the test set");
  evaluate->add_option("--config", config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--prompt", prompt, "prompt document (JSON)")->required()->check(CLI::ExistingFile);
  auto* cap_opt = evaluate->add_option("--cap", cap, "maximum number of test samples (default 1000)");
  evaluate->add_option("--out", out, "output directory");

  std::string criterion;
  std::size_t dev_size = 0;
  auto* baseline = app.add_subcommand("baseline", "paraphrase-selection baseline");
  baseline->add_option("--config", config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  baseline->add_option("--criterion", criterion, "selection criterion")
      ->required()
      ->check(CLI::IsMember({"rouge-l", "perplexity"}));
  auto* dev_opt = baseline->add_option("--dev-size", dev_size, "dev-set size (default 80)");
  baseline->add_option("--out", out, "output directory");

  advicl::app::SimulateOptions sim;
  std::vector<double> p_data;
  std::vector<double> p_g0;
  std::string sim_out = "sim";
  auto* simulate = app.add_subcommand("simulate", "idealised convergence of p_g to p_data");
  simulate->add_option("--n", sim.n, "support size, 2..64")->capture_default_str();
  simulate->add_option("--steps", sim.steps, "update steps, 1..10000")->capture_default_str();
  simulate->add_option("--step-size", sim.step_size, "mirror-descent step in (0, 1]")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "seed for random distributions")->capture_default_str();
  auto* pd_opt = simulate->add_option("--p-data", p_data, "data distribution weights")->delimiter(',');
  auto* pg_opt = simulate->add_option("--p-g0", p_g0, "initial generator distribution weights")->delimiter(',');
  simulate->add_flag("--fixed-point", sim.fixed_point, "start the generator at p_data");
  simulate->add_option("--out", sim_out, "output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::set_pattern("[%l] %v");

  if (optimize->parsed()) {
    if (!out.empty()) optimize_opts.out_dir = out;
    if (seed_opt->count() > 0) optimize_opts.seed = seed;
    optimize_opts.evaluate = !no_eval;
    return advicl::app::cmd_optimize(config, optimize_opts);
  }
  if (evaluate->parsed()) {
    advicl::app::EvaluateOptions opts;
    if (!out.empty()) opts.out_dir = out;
    if (cap_opt->count() > 0) opts.test_cap = cap;
    return advicl::app::cmd_evaluate(config, prompt, opts);
  }
  if (baseline->parsed()) {
    advicl::app::BaselineOptions opts;
    if (!out.empty()) opts.out_dir = out;
    if (dev_opt->count() > 0) opts.dev_size = dev_size;
    return advicl::app::cmd_baseline(config, advicl::parse_selection_criterion(criterion), opts);
  }
  if (pd_opt->count() > 0) sim.p_data = p_data;
  if (pg_opt->count() > 0) sim.p_g0 = p_g0;
  sim.out_dir = sim_out;
  return advicl::app::cmd_simulate(sim);
}
