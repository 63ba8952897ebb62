#pragma once

// Writes a synthetic task (train/test JSONL, prompt, config) into a scratch directory.

#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

#include "advicl/app/dataset.hpp"
#include "support.hpp"

namespace advicl::testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("advicl_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream(p, std::ios::trunc) << content;
}

// Returns the config path. `overrides` is merged into the generated config.
inline std::filesystem::path write_synthetic_config(const std::filesystem::path& dir, std::uint64_t seed,
                                                    const nlohmann::json& overrides = nlohmann::json::object()) {
  const auto task = make_synthetic_task(seed, 20, 30);
  app::save_dataset(dir / "train.jsonl", task.train);
  app::save_dataset(dir / "test.jsonl", task.test);
  write_file(dir / "prompt.json", to_json(task.u0).dump(2));
  nlohmann::json cfg{{"task", {{"name", "reverse"}, {"train_path", "train.jsonl"}, {"test_path", "test.jsonl"},
                               {"prompt_path", "prompt.json"}, {"metric", "rouge-l"}}},
                     {"backends", {{"generator", {{"kind", "synthetic"}}},
                                   {"discriminator", {{"kind", "synthetic"}}},
                                   {"modifier", {{"kind", "synthetic"}}}}},
                     {"run", {{"seed", static_cast<std::int64_t>(seed)}}},
                     {"paths", {{"out_dir", "out"}}}};
  cfg.merge_patch(overrides);
  write_file(dir / "config.json", cfg.dump(2));
  return dir / "config.json";
}

}  // namespace advicl::testing
