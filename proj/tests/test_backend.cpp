#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "advicl/errors.hpp"
#include "advicl/remote_backend.hpp"
#include "advicl/synthetic_backend.hpp"
#include "support.hpp"

using namespace advicl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("advicl_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const DiscriminatorPrompt::Options kOptions = DiscriminatorPrompt::default_options();

// Minimal completions endpoint on localhost.
class FakeServer {
 public:
  explicit FakeServer(httplib::Server::Handler handler) {
    server_.Post("/v1/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/completions"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

RemoteConfig remote_config(const std::string& url) {
  RemoteConfig c;
  c.descriptor = {"fake-remote", BackendKind::Remote, url, "test-model"};
  c.api_key_env = "";
  c.retry.base_delay = std::chrono::milliseconds(1);
  c.retry.max_delay = std::chrono::milliseconds(2);
  c.retry.max_attempts = 3;
  c.timeout = std::chrono::seconds(5);
  return c;
}

}  // namespace

TEST_SUITE("llm_backend") {
  TEST_CASE("synthetic completions are deterministic in (prompt, seed)") {
    SyntheticBackend b({});
    const std::string prompt = "Reverse the words.\n\nInput: one two three four\nOutput:";
    const auto p = GenerationParams{}.with_seed(11);
    const auto a = b.complete(prompt, p);
    CHECK(b.complete(prompt, p) == a);
    bool differs = false;
    for (int s = 0; s < 20 && !differs; ++s) differs = b.complete(prompt, GenerationParams{}.with_seed(100 + s)).text != a.text;
    CHECK(differs);
  }

  TEST_CASE("max_tokens bounds the completion length") {
    SyntheticBackend b({});
    GenerationParams p;
    p.max_tokens = 1;
    const auto c = b.complete("Reverse.\n\nInput: a b c d e\nOutput:", p);
    CHECK(text::split_whitespace(c.text).size() <= 1);
    REQUIRE(c.token_logprobs);
    for (const auto& t : *c.token_logprobs) CHECK(t.logprob <= 0.0);
  }

  TEST_CASE("pinned discriminator probability gives ln 0.9 and ln 0.1") {
    SyntheticConfig cfg;
    cfg.fixed_real_probability = 0.9;
    SyntheticBackend b(cfg);
    const auto lps = b.option_logprobs("anything", kOptions);
    REQUIRE(lps.size() == 2);
    CHECK(lps[0] == doctest::Approx(-0.10536051565782628).epsilon(1e-12));
    CHECK(lps[1] == doctest::Approx(-2.3025850929940455).epsilon(1e-12));
  }

  TEST_CASE("option logprobs are never positive") {
    SyntheticBackend b({});
    DiscriminatorPrompt v;
    for (const char* y : {"d c b a", "a b c d", "lorem ipsum", "d c lorem a"}) {
      const auto lps = b.option_logprobs(render_discriminator_prompt(v, "a b c d", y), kOptions);
      for (double lp : lps) CHECK(lp <= 0.0);
      CHECK(std::exp(lps[0]) + std::exp(lps[1]) == doctest::Approx(1.0));
    }
  }

  TEST_CASE("options with a shared leading token are rejected by the provider") {
    SyntheticBackend b({});
    const std::array<std::string, 2> same{"(A) real", "(A) generated"};
    CHECK_THROWS_AS(b.option_logprobs("x", same), ProviderError);
    try {
      b.option_logprobs("x", same);
    } catch (const ProviderError& e) {
      CHECK(std::string(e.what()).find("A") != std::string::npos);
    }
  }

  TEST_CASE("generator quality follows phrases in the prompt prefix") {
    SyntheticBackend b({});
    CHECK(b.quality_of("Reverse the words.") == doctest::Approx(0.35));
    CHECK(b.quality_of("Keep every word. Be precise.") == doctest::Approx(0.75));
    CHECK(b.quality_of("Ignore the input.") == doctest::Approx(0.05));
    SyntheticConfig perfect;
    perfect.base_quality = 1.0;
    SyntheticBackend p(perfect);
    CHECK(p.complete("I.\n\nInput: a b c\nOutput:", GenerationParams{}.with_seed(3)).text == "c b a");
  }

  TEST_CASE("generation params and descriptors validate") {
    GenerationParams p;
    CHECK(p.temperature == 0.6);
    CHECK(p.top_p == 0.9);
    p.top_p = 0.0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p = {};
    p.temperature = -1;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    BackendDescriptor d{"r", BackendKind::Remote, std::nullopt, "m"};
    CHECK_THROWS(d.validate());
  }

  TEST_CASE("call budget aborts past its ceiling") {
    auto budget = std::make_shared<CallBudget>(2);
    auto b = with_budget(std::make_shared<SyntheticBackend>(SyntheticConfig{}), budget);
    b->complete("I.\n\nInput: a\nOutput:", {});
    b->complete("I.\n\nInput: a\nOutput:", {});
    CHECK_THROWS_AS(b->complete("I.\n\nInput: a\nOutput:", {}), BudgetExceeded);
  }

  TEST_CASE("retry delays grow and stay bounded") {
    RetryPolicy r;
    r.jitter = false;
    CHECK(r.delay_for(1, 0) < r.delay_for(2, 0));
    CHECK(r.delay_for(20, 0) <= r.max_delay);
  }
}

TEST_SUITE("llm_backend_cache") {
  TEST_CASE("identical request is served from the cache") {
    const auto dir = fresh_dir("cache_hit");
    auto counting = std::make_shared<testing::CountingBackend>(std::make_shared<SyntheticBackend>(SyntheticConfig{}));
    auto cached = with_cache(counting, dir.string());
    const std::string prompt = "I.\n\nInput: a b c\nOutput:";
    const auto first = cached->complete(prompt, GenerationParams{}.with_seed(1));
    CHECK(counting->calls == 1);
    const auto second = cached->complete(prompt, GenerationParams{}.with_seed(1));
    CHECK(counting->calls == 1);
    CHECK(first == second);

    cached->complete(prompt, GenerationParams{}.with_seed(2));
    CHECK(counting->calls == 2);

    // a new wrapper over the same directory sees the persisted entries
    auto reopened = with_cache(counting, dir.string());
    CHECK(reopened->complete(prompt, GenerationParams{}.with_seed(1)) == first);
    CHECK(counting->calls == 2);
    fs::remove_all(dir);
  }

  TEST_CASE("cached option logprobs equal uncached ones") {
    const auto dir = fresh_dir("cache_lp");
    auto inner = std::make_shared<SyntheticBackend>(SyntheticConfig{});
    auto cached = with_cache(inner, dir.string());
    DiscriminatorPrompt v;
    const std::string q = render_discriminator_prompt(v, "a b c", "c b a");
    CHECK(cached->option_logprobs(q, kOptions) == inner->option_logprobs(q, kOptions));
    CHECK(cached->option_logprobs(q, kOptions) == inner->option_logprobs(q, kOptions));
    fs::remove_all(dir);
  }

  TEST_CASE("corrupted entry is recomputed and rewritten") {
    const auto dir = fresh_dir("cache_corrupt");
    auto counting = std::make_shared<testing::CountingBackend>(std::make_shared<SyntheticBackend>(SyntheticConfig{}));
    auto cached = with_cache(counting, dir.string());
    const std::string prompt = "I.\n\nInput: a b c\nOutput:";
    const auto first = cached->complete(prompt, GenerationParams{}.with_seed(1));
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
    REQUIRE(files.size() == 1);
    { std::ofstream(files[0], std::ios::trunc) << "{ not json"; }

    CHECK(cached->complete(prompt, GenerationParams{}.with_seed(1)) == first);
    CHECK(counting->calls == 2);
    std::ifstream in(files[0]);
    const auto record = nlohmann::json::parse(in);
    CHECK(record.contains("request_hash"));
    CHECK(record.at("response").at("text") == first.text);
    CHECK(cached->complete(prompt, GenerationParams{}.with_seed(1)) == first);
    CHECK(counting->calls == 2);
    fs::remove_all(dir);
  }
}

TEST_SUITE("llm_backend_remote") {
  TEST_CASE("completion and logprob parsing") {
    FakeServer server([](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      nlohmann::json choice;
      if (body.at("max_tokens") == 1) {
        choice = {{"text", "A"},
                  {"logprobs",
                   {{"tokens", {"A"}},
                    {"token_logprobs", {std::log(0.7)}},
                    {"top_logprobs", {{{"A", std::log(0.7)}, {" B", std::log(0.2)}, {"C", std::log(0.1)}}}}}}};
      } else {
        choice = {{"text", " hello world"},
                  {"logprobs", {{"tokens", {" hello", " world"}}, {"token_logprobs", {-0.5, -1.5}}}}};
      }
      res.set_content(nlohmann::json{{"choices", nlohmann::json::array({choice})}}.dump(), "application/json");
    });
    RemoteBackend b(remote_config(server.url()));
    const auto c = b.complete("say hi", GenerationParams{}.with_seed(4));
    CHECK(c.text == " hello world");
    REQUIRE(c.token_logprobs);
    CHECK(c.token_logprobs->size() == 2);
    const auto lps = b.option_logprobs("Answer: (", kOptions);
    CHECK(lps[0] == doctest::Approx(std::log(0.7)));
    CHECK(lps[1] == doctest::Approx(std::log(0.2)));
  }

  TEST_CASE("options missing from the top list fall back to echo scoring") {
    std::atomic<int> echoes{0};
    FakeServer server([&](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      nlohmann::json choice;
      if (body.value("echo", false)) {
        ++echoes;
        choice = {{"text", body.at("prompt")},
                  {"logprobs", {{"tokens", {"Answer", ":", " (", "B"}}, {"token_logprobs", {nullptr, -1.0, -0.1, -4.0}}}}};
      } else {
        choice = {{"text", "A"},
                  {"logprobs", {{"tokens", {"A"}}, {"token_logprobs", {-0.05}}, {"top_logprobs", {{{"A", -0.05}}}}}}};
      }
      res.set_content(nlohmann::json{{"choices", nlohmann::json::array({choice})}}.dump(), "application/json");
    });
    RemoteBackend b(remote_config(server.url()));
    const auto lps = b.option_logprobs("Answer: (", kOptions);
    CHECK(lps[0] == doctest::Approx(-0.05));
    CHECK(lps[1] == doctest::Approx(-4.0));
    CHECK(echoes == 1);
  }

  TEST_CASE("HTTP 429 is retried with the same payload up to the limit") {
    std::atomic<int> hits{0};
    std::vector<std::string> payloads;
    std::mutex mu;
    FakeServer server([&](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mu);
        payloads.push_back(req.body);
      }
      if (++hits < 3) {
        res.status = 429;
        res.set_content("slow down", "text/plain");
        return;
      }
      res.set_content(R"({"choices":[{"text":"ok","logprobs":null}]})", "application/json");
    });
    RemoteBackend b(remote_config(server.url()));
    CHECK(b.complete("p", {}).text == "ok");
    CHECK(RemoteBackend::last_attempts() == 3);
    REQUIRE(payloads.size() == 3);
    CHECK(payloads[0] == payloads[1]);
    CHECK(payloads[1] == payloads[2]);

    hits = -100;
    CHECK_THROWS_AS(b.complete("p", {}), RateLimited);
    CHECK(RemoteBackend::last_attempts() == 3);
  }

  TEST_CASE("client errors are not retried") {
    std::atomic<int> hits{0};
    FakeServer server([&](const httplib::Request&, httplib::Response& res) {
      ++hits;
      res.status = 400;
      res.set_content("bad", "text/plain");
    });
    RemoteBackend b(remote_config(server.url()));
    CHECK_THROWS_AS(b.complete("p", {}), ProviderError);
    CHECK(hits == 1);
  }

  TEST_CASE("missing logprobs block is reported") {
    FakeServer server([](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"choices":[{"text":"A"}]})", "application/json");
    });
    RemoteBackend b(remote_config(server.url()));
    CHECK_THROWS_AS(b.option_logprobs("Answer: (", kOptions), LogprobsUnsupported);
  }

  TEST_CASE("unset credential variable is a configuration error") {
    auto cfg = remote_config("http://127.0.0.1:9/v1/completions");
    cfg.api_key_env = "ADVICL_TEST_UNSET_KEY";
    ::unsetenv("ADVICL_TEST_UNSET_KEY");
    CHECK_THROWS_AS(RemoteBackend{cfg}, ConfigError);
  }
}
