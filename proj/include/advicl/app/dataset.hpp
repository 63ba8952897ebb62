#pragma once

#include <filesystem>
#include <vector>

#include "advicl/loss.hpp"

namespace advicl::app {

// One JSON object per line with string fields "input" and "output". Blank
// lines are skipped; sample ids are the 0-based record order.
// Throws ParseError (1-based line number) and EmptyDataset.
std::vector<TaskSample> load_dataset(const std::filesystem::path& path);

// First `cap` samples (or all of them).
std::vector<TaskSample> take(std::vector<TaskSample> samples, std::size_t cap);

void save_dataset(const std::filesystem::path& path, const std::vector<TaskSample>& samples);

}  // namespace advicl::app
