#include "advicl/app/config.hpp"

#include <fstream>

#include <spdlog/spdlog.h>

#include "advicl/errors.hpp"

namespace advicl::app {

namespace fs = std::filesystem;

namespace {

fs::path resolve_path(const nlohmann::json& j, const fs::path& base) {
  fs::path p = j.get<std::string>();
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

std::optional<fs::path> optional_path(const nlohmann::json& obj, const char* key, const fs::path& base) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return resolve_path(obj.at(key), base);
}

nlohmann::json path_or_null(const std::optional<fs::path>& p) {
  return p ? nlohmann::json(p->string()) : nlohmann::json(nullptr);
}

BackendConfig backend_from_json(const nlohmann::json& j, const std::string& role, const fs::path& base) {
  BackendConfig c;
  c.descriptor.id = role;
  if (j.is_null()) {
    c.synthetic.id = role;
    return c;
  }
  c.descriptor.id = j.value("id", role);
  const std::string kind = j.value("kind", std::string("synthetic"));
  if (kind == "remote") {
    c.descriptor.kind = BackendKind::Remote;
  } else if (kind == "synthetic") {
    c.descriptor.kind = BackendKind::Synthetic;
  } else {
    throw ConfigError("backend '" + c.descriptor.id + "': unknown kind '" + kind + "'");
  }
  if (j.contains("endpoint") && !j.at("endpoint").is_null()) c.descriptor.endpoint = j.at("endpoint").get<std::string>();
  if (j.contains("model") && !j.at("model").is_null()) c.descriptor.model = j.at("model").get<std::string>();
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  if (j.contains("retry")) c.retry = retry_policy_from_json(j.at("retry"));
  c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
  c.synthetic = synthetic_config_from_json(j.value("synthetic", nlohmann::json(nullptr)));
  c.synthetic.id = c.descriptor.id;
  c.cache_dir = optional_path(j, "cache_dir", base);
  if (j.contains("capability") && !j.at("capability").is_null()) c.capability = j.at("capability").get<double>();
  c.descriptor.validate();
  return c;
}

nlohmann::json backend_to_json(const BackendConfig& c) {
  nlohmann::json j{{"id", c.descriptor.id},
                   {"kind", c.descriptor.kind == BackendKind::Remote ? "remote" : "synthetic"},
                   {"endpoint", c.descriptor.endpoint ? nlohmann::json(*c.descriptor.endpoint) : nlohmann::json(nullptr)},
                   {"model", c.descriptor.model ? nlohmann::json(*c.descriptor.model) : nlohmann::json(nullptr)},
                   {"api_key_env", c.api_key_env},
                   {"retry",
                    {{"max_attempts", c.retry.max_attempts},
                     {"base_delay_ms", c.retry.base_delay.count()},
                     {"max_delay_ms", c.retry.max_delay.count()},
                     {"jitter", c.retry.jitter}}},
                   {"timeout_seconds", c.timeout_seconds},
                   {"cache_dir", path_or_null(c.cache_dir)},
                   {"capability", c.capability ? nlohmann::json(*c.capability) : nlohmann::json(nullptr)}};
  if (c.descriptor.kind == BackendKind::Synthetic) j["synthetic"] = to_json(c.synthetic);
  return j;
}

}  // namespace

AppConfig resolve_config(const nlohmann::json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  AppConfig c;
  try {
    const auto task = doc.value("task", nlohmann::json::object());
    c.task.name = task.value("name", c.task.name);
    if (!task.contains("train_path")) throw ConfigError("task.train_path is required");
    if (!task.contains("prompt_path")) throw ConfigError("task.prompt_path is required");
    c.task.train_path = resolve_path(task.at("train_path"), base_dir);
    c.task.prompt_path = resolve_path(task.at("prompt_path"), base_dir);
    c.task.test_path = optional_path(task, "test_path", base_dir);
    c.task.dev_path = optional_path(task, "dev_path", base_dir);
    if (task.contains("metric")) c.task.metric = parse_metric_kind(task.at("metric").get<std::string>());
    if (task.contains("demo_kind")) c.task.demo_kind = parse_slot_kind(task.at("demo_kind").get<std::string>());
    if (task.contains("k_shots") && !task.at("k_shots").is_null()) {
      c.task.k_shots = task.at("k_shots").get<int>();
      if (*c.task.k_shots <= 0) throw ConfigError("task.k_shots must be positive");
    }

    const auto backends = doc.value("backends", nlohmann::json::object());
    c.generator = backend_from_json(backends.value("generator", nlohmann::json(nullptr)), "generator", base_dir);
    c.discriminator =
        backend_from_json(backends.value("discriminator", nlohmann::json(nullptr)), "discriminator", base_dir);
    c.modifier = backend_from_json(backends.value("modifier", nlohmann::json(nullptr)), "modifier", base_dir);
    if (c.generator.capability && c.discriminator.capability &&
        *c.discriminator.capability < *c.generator.capability) {
      spdlog::warn("discriminator '{}' is rated weaker than generator '{}'; a weak discriminator tends to degrade "
                   "the optimised prompt",
                   c.discriminator.descriptor.id, c.generator.descriptor.id);
    }

    nlohmann::json run = doc.value("run", nlohmann::json::object());
    const auto decode = doc.value("decode", nlohmann::json::object());
    c.run.gen_params = generation_params_from_json(decode, c.run.gen_params);
    c.run.disc_params = generation_params_from_json(doc.value("discriminator_decode", nlohmann::json(nullptr)),
                                                    c.run.disc_params);
    GenerationParams mod_defaults = c.run.mod_params;
    mod_defaults.temperature = c.run.gen_params.temperature;
    mod_defaults.top_p = c.run.gen_params.top_p;
    c.run.mod_params = generation_params_from_json(doc.value("modifier_decode", nlohmann::json(nullptr)), mod_defaults);
    c.run.iterations = run.value("T", c.run.iterations);
    c.run.samples_per_iteration = run.value("m", c.run.samples_per_iteration);
    c.run.variants_per_slot = run.value("r", c.run.variants_per_slot);
    c.run.eps = run.value("eps", c.run.eps);
    c.run.seed = run.value("seed", c.run.seed);
    c.run.execution = run.value("parallel", true) ? Execution::Parallel : Execution::Serial;
    c.run.demo_kind = c.task.demo_kind;
    c.run.validate();

    c.limits.train_cap = run.value("train_cap", c.limits.train_cap);
    c.limits.dev_size = run.value("dev_size", c.limits.dev_size);
    c.limits.test_cap = run.value("test_cap", c.limits.test_cap);
    c.limits.paraphrases = run.value("paraphrases", c.limits.paraphrases);
    c.limits.max_backend_calls = run.value("max_backend_calls", c.limits.max_backend_calls);
    if (c.limits.train_cap == 0 || c.limits.dev_size == 0 || c.limits.test_cap == 0 || c.limits.paraphrases <= 0) {
      throw ConfigError("train_cap, dev_size, test_cap and paraphrases must be positive");
    }

    const auto paths = doc.value("paths", nlohmann::json::object());
    if (paths.contains("out_dir")) c.out_dir = resolve_path(paths.at("out_dir"), base_dir);
    else c.out_dir = (base_dir / c.out_dir).lexically_normal();
    c.templates_path = optional_path(paths, "templates", base_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

AppConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return resolve_config(doc, fs::absolute(path).parent_path());
}

nlohmann::json config_to_json(const AppConfig& c) {
  nlohmann::json task{{"name", c.task.name},
                      {"train_path", c.task.train_path.string()},
                      {"prompt_path", c.task.prompt_path.string()},
                      {"test_path", path_or_null(c.task.test_path)},
                      {"dev_path", path_or_null(c.task.dev_path)},
                      {"metric", std::string(to_string(c.task.metric))},
                      {"demo_kind", std::string(to_string(c.task.demo_kind))},
                      {"k_shots", c.task.k_shots ? nlohmann::json(*c.task.k_shots) : nlohmann::json(nullptr)}};
  nlohmann::json run{{"T", c.run.iterations},
                     {"m", c.run.samples_per_iteration},
                     {"r", c.run.variants_per_slot},
                     {"eps", c.run.eps},
                     {"seed", c.run.seed},
                     {"parallel", c.run.execution == Execution::Parallel},
                     {"train_cap", c.limits.train_cap},
                     {"dev_size", c.limits.dev_size},
                     {"test_cap", c.limits.test_cap},
                     {"paraphrases", c.limits.paraphrases},
                     {"max_backend_calls", c.limits.max_backend_calls}};
  return {{"task", std::move(task)},
          {"backends",
           {{"generator", backend_to_json(c.generator)},
            {"discriminator", backend_to_json(c.discriminator)},
            {"modifier", backend_to_json(c.modifier)}}},
          {"run", std::move(run)},
          {"decode", to_json(c.run.gen_params)},
          {"discriminator_decode", to_json(c.run.disc_params)},
          {"modifier_decode", to_json(c.run.mod_params)},
          {"paths", {{"templates", path_or_null(c.templates_path)}}}};
}

BackendPtr make_backend(const BackendConfig& c) {
  if (c.descriptor.kind == BackendKind::Synthetic) return std::make_shared<SyntheticBackend>(c.synthetic);
  RemoteConfig rc;
  rc.descriptor = c.descriptor;
  rc.api_key_env = c.api_key_env;
  rc.retry = c.retry;
  rc.timeout = std::chrono::seconds(c.timeout_seconds);
  return std::make_shared<RemoteBackend>(std::move(rc));
}

ModifierTemplates load_templates(const AppConfig& c) {
  if (!c.templates_path) return {};
  std::ifstream in(*c.templates_path);
  if (!in) throw ConfigError("cannot read templates " + c.templates_path->string());
  try {
    return modifier_templates_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("templates " + c.templates_path->string() + ": " + e.what());
  }
}

}  // namespace advicl::app
