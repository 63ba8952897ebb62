#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "advicl/backend.hpp"
#include "advicl/evaluation.hpp"
#include "advicl/modifier.hpp"
#include "advicl/optimizer.hpp"
#include "advicl/remote_backend.hpp"
#include "advicl/synthetic_backend.hpp"

namespace advicl::app {

struct TaskSpec {
  std::string name = "task";
  std::filesystem::path train_path;
  std::optional<std::filesystem::path> test_path;
  std::optional<std::filesystem::path> dev_path;
  std::filesystem::path prompt_path;
  MetricKind metric = MetricKind::RougeL;
  SlotKind demo_kind = SlotKind::OpenEndedDemo;
  // Demonstrations per prompt: fills the generator prompt when its document
  // has none and sets the discriminator's demo count.
  std::optional<int> k_shots;
};

struct BackendConfig {
  BackendDescriptor descriptor;
  std::string api_key_env = "OPENAI_API_KEY";
  RetryPolicy retry;
  int timeout_seconds = 60;
  SyntheticConfig synthetic;
  std::optional<std::filesystem::path> cache_dir;
  // Optional relative strength rating, only used to warn about weak discriminators.
  std::optional<double> capability;
};

struct Limits {
  std::size_t train_cap = 20;
  std::size_t dev_size = 80;
  std::size_t test_cap = 1000;
  int paraphrases = 15;
  std::uint64_t max_backend_calls = 0;  // 0 = unlimited
};

struct AppConfig {
  TaskSpec task;
  BackendConfig generator;
  BackendConfig discriminator;
  BackendConfig modifier;
  RunConfig run;
  Limits limits;
  std::optional<std::filesystem::path> templates_path;
  std::filesystem::path out_dir = "runs/default";
};

// Fills every omitted key with its default. Relative paths resolve against
// `base_dir`. Throws ConfigError.
AppConfig resolve_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
AppConfig load_config(const std::filesystem::path& path);

// Snapshot of the resolved configuration (paths absolute, out_dir omitted).
// resolve_config(config_to_json(c), "/") reproduces c.
nlohmann::json config_to_json(const AppConfig& c);

BackendPtr make_backend(const BackendConfig& c);

ModifierTemplates load_templates(const AppConfig& c);

}  // namespace advicl::app
