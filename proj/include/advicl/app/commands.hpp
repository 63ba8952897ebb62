#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "advicl/baselines.hpp"

namespace advicl::app {

struct OptimizeOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::int64_t> seed;
  bool resume = false;
  bool evaluate = true;  // score initial and final prompts when a test set is configured
};

struct EvaluateOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::size_t> test_cap;
};

struct BaselineOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::size_t> dev_size;
};

struct SimulateOptions {
  std::size_t n = 4;
  std::size_t steps = 500;
  double step_size = 0.5;
  std::uint64_t seed = 0;
  std::optional<std::vector<double>> p_data;
  std::optional<std::vector<double>> p_g0;
  bool fixed_point = false;  // start p_g at p_data
  std::filesystem::path out_dir = "sim";
};

// Each command returns a process exit code and prints diagnostics to stderr.
int cmd_optimize(const std::filesystem::path& config_path, const OptimizeOptions& opts = {});
int cmd_evaluate(const std::filesystem::path& config_path, const std::filesystem::path& prompt_path,
                 const EvaluateOptions& opts = {});
int cmd_baseline(const std::filesystem::path& config_path, SelectionCriterion criterion,
                 const BaselineOptions& opts = {});
int cmd_simulate(const SimulateOptions& opts);

// Hash of a manifest over everything except its "runtime" block and the hash itself.
std::string manifest_hash(const nlohmann::json& manifest);

}  // namespace advicl::app
