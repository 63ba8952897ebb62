#include <array>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

#include <spdlog/spdlog.h>

#include "advicl/backend.hpp"
#include "advicl/errors.hpp"
#include "advicl/text.hpp"

namespace advicl {

namespace fs = std::filesystem;

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json completion_to_json(const Completion& c) {
  nlohmann::json j{{"text", c.text}};
  if (c.token_logprobs) {
    nlohmann::json lps = nlohmann::json::array();
    for (const auto& t : *c.token_logprobs) lps.push_back({{"token", t.token}, {"logprob", t.logprob}});
    j["token_logprobs"] = std::move(lps);
  } else {
    j["token_logprobs"] = nullptr;
  }
  return j;
}

std::vector<TokenLogprob> token_logprobs_from_json(const nlohmann::json& j) {
  std::vector<TokenLogprob> out;
  for (const auto& t : j) out.push_back({t.at("token").get<std::string>(), t.at("logprob").get<double>()});
  return out;
}

Completion completion_from_json(const nlohmann::json& j) {
  Completion c{j.at("text").get<std::string>(), std::nullopt};
  if (!j.at("token_logprobs").is_null()) c.token_logprobs = token_logprobs_from_json(j.at("token_logprobs"));
  return c;
}

class CachingBackend final : public Backend {
 public:
  CachingBackend(BackendPtr inner, fs::path dir) : inner_(std::move(inner)), dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) spdlog::warn("cache: cannot create {}: {}", dir_.string(), ec.message());
  }

  const BackendDescriptor& descriptor() const override { return inner_->descriptor(); }

  Completion complete(std::string_view prompt, const GenerationParams& params) override {
    nlohmann::json req{{"op", "complete"}, {"prompt", prompt}, {"params", to_json(params)}};
    return completion_from_json(
        cached(std::move(req), [&] { return completion_to_json(inner_->complete(prompt, params)); }));
  }

  std::vector<double> option_logprobs(std::string_view prompt, std::span<const std::string> options) override {
    nlohmann::json req{{"op", "option_logprobs"},
                       {"prompt", prompt},
                       {"options", std::vector<std::string>(options.begin(), options.end())}};
    return cached(std::move(req), [&] { return nlohmann::json(inner_->option_logprobs(prompt, options)); })
        .get<std::vector<double>>();
  }

  std::vector<TokenLogprob> score_text(std::string_view t) override {
    nlohmann::json req{{"op", "score_text"}, {"text", t}};
    return token_logprobs_from_json(cached(std::move(req), [&] {
      nlohmann::json lps = nlohmann::json::array();
      for (const auto& tl : inner_->score_text(t)) lps.push_back({{"token", tl.token}, {"logprob", tl.logprob}});
      return lps;
    }));
  }

 private:
  template <typename Compute>
  nlohmann::json cached(nlohmann::json request, Compute&& compute) {
    request["backend"] = inner_->descriptor().id;
    const std::string hash = text::sha256_hex(request.dump());
    const fs::path path = dir_ / (hash + ".json");
    std::lock_guard lock(stripe(hash));
    if (auto hit = read(path, hash, request)) return *std::move(hit);
    nlohmann::json response = compute();
    write(path, hash, request, response);
    return response;
  }

  std::mutex& stripe(const std::string& hash) {
    return stripes_[text::fnv1a64(hash) % stripes_.size()];
  }

  static std::optional<nlohmann::json> read(const fs::path& path, const std::string& hash,
                                            const nlohmann::json& request) {
    std::error_code ec;
    if (!fs::exists(path, ec)) return std::nullopt;
    try {
      std::ifstream in(path);
      const auto record = nlohmann::json::parse(in);
      if (record.at("request_hash") != hash || record.at("request") != request) {
        throw CacheIoError("record does not match its key");
      }
      return record.at("response");
    } catch (const std::exception& e) {
      spdlog::warn("cache: discarding corrupt entry {}: {}", path.filename().string(), e.what());
      return std::nullopt;
    }
  }

  static void write(const fs::path& path, const std::string& hash, const nlohmann::json& request,
                    const nlohmann::json& response) {
    const nlohmann::json record{
        {"request_hash", hash}, {"request", request}, {"response", response}, {"timestamp", utc_timestamp()}};
    fs::path tmp = path;
    tmp += ".tmp";
    std::error_code ec;
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) {
        spdlog::warn("cache: cannot write {}", tmp.string());
        return;
      }
      out << record.dump(2) << '\n';
      if (!out) {
        spdlog::warn("cache: short write to {}", tmp.string());
        return;
      }
    }
    fs::rename(tmp, path, ec);
    if (ec) spdlog::warn("cache: cannot commit {}: {}", path.string(), ec.message());
  }

  BackendPtr inner_;
  fs::path dir_;
  std::array<std::mutex, 64> stripes_;
};

}  // namespace

BackendPtr with_cache(BackendPtr inner, const std::string& cache_dir) {
  return std::make_shared<CachingBackend>(std::move(inner), fs::path(cache_dir));
}

}  // namespace advicl
