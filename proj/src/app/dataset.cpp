#include "advicl/app/dataset.hpp"

#include <fstream>

#include <json.hpp>

#include "advicl/errors.hpp"
#include "advicl/text.hpp"

namespace advicl::app {

std::vector<TaskSample> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset " + path.string());
  std::vector<TaskSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw ParseError(lineno, "not a JSON object (" + path.filename().string() + ")");
    }
    if (!rec.is_object()) throw ParseError(lineno, "record is not a JSON object");
    for (const char* key : {"input", "output"}) {
      if (!rec.contains(key)) throw ParseError(lineno, std::string("missing field \"") + key + "\"");
      if (!rec.at(key).is_string()) throw ParseError(lineno, std::string("field \"") + key + "\" is not a string");
    }
    try {
      out.emplace_back(out.size(), rec.at("input").get<std::string>(), rec.at("output").get<std::string>());
    } catch (const InvalidArgument& e) {
      throw ParseError(lineno, e.what());
    }
  }
  if (out.empty()) throw EmptyDataset("dataset " + path.string() + " has no records");
  return out;
}

std::vector<TaskSample> take(std::vector<TaskSample> samples, std::size_t cap) {
  if (samples.size() > cap) samples.erase(samples.begin() + static_cast<std::ptrdiff_t>(cap), samples.end());
  return samples;
}

void save_dataset(const std::filesystem::path& path, const std::vector<TaskSample>& samples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write dataset " + path.string());
  for (const auto& s : samples) out << nlohmann::json{{"input", s.input}, {"output", s.output}}.dump() << '\n';
}

}  // namespace advicl::app
