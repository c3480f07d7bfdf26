#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "llmdrive/error.hpp"
#include "llmdrive/gateway.hpp"
#include "llmdrive/pipeline.hpp"

using namespace llmdrive;
namespace fs = std::filesystem;

namespace {

const char* kKeyVar = "LLMDRIVE_TEST_KEY";
const char* kSecret = "sk-test-7f3a9c1e-do-not-leak";

std::string completion(const std::string& text) {
  nlohmann::json j;
  j["choices"] = nlohmann::json::array({{{"message", {{"role", "assistant"}, {"content", text}}}}});
  return j.dump();
}

// Local OpenAI-compatible endpoint on an ephemeral port.
class FakeEndpoint {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;
  explicit FakeEndpoint(Handler h) {
    server_.Post("/v1/chat/completions", [this, h](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mu_);
        auth_headers_.push_back(req.get_header_value("Authorization"));
      }
      ++hits_;
      h(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int hits() const { return hits_; }
  std::vector<std::string> auth_headers() {
    std::lock_guard lock(mu_);
    return auth_headers_;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> hits_{0};
  std::mutex mu_;
  std::vector<std::string> auth_headers_;
};

GatewayConfig live_config(const FakeEndpoint& ep) {
  GatewayConfig c;
  c.base_url = ep.base_url();
  c.api_key_env_var = kKeyVar;
  c.timeout_s = 5.0;
  c.samples_per_scenario = 1;
  return c;
}

RenderedPrompt prompt_for(const std::string& id) {
  static const auto set = nine_builtin_scenarios();
  return PromptEngine().render(*find_scenario(set, id));
}

std::string slurp_tree(const fs::path& dir) {
  std::string all;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    all += ss.str();
  }
  return all;
}

class KeyEnv : public ::testing::Test {
 protected:
  void SetUp() override { setenv(kKeyVar, kSecret, 1); }
  void TearDown() override { unsetenv(kKeyVar); }
};

}  // namespace

TEST_F(KeyEnv, RetriesTransientFailures) {
  std::atomic<int> calls{0};
  FakeEndpoint ep([&](const httplib::Request&, httplib::Response& res) {
    if (calls++ < 2) {
      res.status = 500;
      res.set_content("boom", "text/plain");
    } else {
      res.set_content(completion("Slow down."), "application/json");
    }
  });
  std::vector<double> sleeps;
  Gateway g(live_config(ep), make_http_backend(live_config(ep)), [&](double s) { sleeps.push_back(s); });
  const Transcript t = g.complete(prompt_for("arithmetic-sunny"));
  EXPECT_EQ(t.retries, 2);
  EXPECT_EQ(t.response_text, "Slow down.");
  EXPECT_EQ(t.backend, BackendKind::live);
  EXPECT_EQ(ep.hits(), 3);
  EXPECT_EQ(sleeps, (std::vector<double>{1.0, 2.0}));
  for (const auto& h : ep.auth_headers()) EXPECT_EQ(h, std::string("Bearer ") + kSecret);
}

TEST_F(KeyEnv, GivesUpAfterMaxRetries) {
  FakeEndpoint ep([](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  auto cfg = live_config(ep);
  cfg.max_retries = 2;
  Gateway g(cfg, make_http_backend(cfg), [](double) {});
  try {
    g.complete(prompt_for("hybrid-rainy"));
    FAIL() << "expected GatewayError";
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayErrorKind::http);
    EXPECT_EQ(e.scenario_id(), "hybrid-rainy");
    EXPECT_EQ(e.status(), 503);
  }
  EXPECT_EQ(ep.hits(), 3);
}

TEST_F(KeyEnv, TimeoutNamesScenario) {
  FakeEndpoint ep([](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1200));
    res.set_content(completion("late"), "application/json");
  });
  auto cfg = live_config(ep);
  cfg.timeout_s = 0.2;
  cfg.max_retries = 0;
  Gateway g(cfg, make_http_backend(cfg), [](double) {});
  try {
    g.complete(prompt_for("common-sense-rainy"));
    FAIL() << "expected GatewayError";
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayErrorKind::timeout);
    EXPECT_EQ(e.scenario_id(), "common-sense-rainy");
    EXPECT_NE(std::string(e.what()).find("common-sense-rainy"), std::string::npos);
  }
}

TEST_F(KeyEnv, AuthFailureIsNotRetried) {
  FakeEndpoint ep([](const httplib::Request&, httplib::Response& res) { res.status = 401; });
  Gateway g(live_config(ep), make_http_backend(live_config(ep)), [](double) {});
  try {
    g.complete(prompt_for("arithmetic-rainy"));
    FAIL() << "expected GatewayError";
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayErrorKind::auth);
    EXPECT_EQ(std::string(e.what()).find(kSecret), std::string::npos);
  }
  EXPECT_EQ(ep.hits(), 1);
}

TEST_F(KeyEnv, MalformedBody) {
  FakeEndpoint ep([](const httplib::Request&, httplib::Response& res) { res.set_content("{\"choices\": []}", "application/json"); });
  Gateway g(live_config(ep), make_http_backend(live_config(ep)), [](double) {});
  try {
    g.complete(prompt_for("arithmetic-rainy"));
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayErrorKind::malformed_response);
  }
}

TEST(Gateway, MissingKey) {
  unsetenv(kKeyVar);
  GatewayConfig cfg;
  cfg.api_key_env_var = kKeyVar;
  try {
    make_http_backend(cfg);
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayErrorKind::missing_api_key);
    EXPECT_NE(std::string(e.what()).find(kKeyVar), std::string::npos);
  }
}

TEST(Gateway, ConfigValidation) {
  GatewayConfig c;
  c.samples_per_scenario = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = GatewayConfig{};
  c.parallelism_limit = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = GatewayConfig{};
  c.temperature = -1;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Gateway, ParallelismStaysWithinLimit) {
  // A backend slow enough that workers overlap.
  struct Slow final : ChatBackend {
    BackendKind kind() const override { return BackendKind::mock; }
    std::string complete(const ChatRequest& r) override {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      return "ok " + r.scenario_id;
    }
  };
  GatewayConfig cfg;
  cfg.samples_per_scenario = 3;
  cfg.parallelism_limit = 3;
  Gateway g(cfg, std::make_unique<Slow>());
  std::atomic<int> peak{0};
  g.set_inflight_hook([&](int n) {
    int p = peak.load();
    while (n > p && !peak.compare_exchange_weak(p, n)) {}
  });
  std::vector<RenderedPrompt> prompts;
  for (const auto& s : nine_builtin_scenarios()) prompts.push_back(PromptEngine().render(s));
  const auto results = g.sample_all(prompts);
  ASSERT_EQ(results.size(), 9u);
  EXPECT_LE(peak.load(), 3);
  EXPECT_GE(peak.load(), 2);
  for (std::size_t i = 0; i < results.size(); ++i) {
    EXPECT_EQ(results[i].scenario_id, prompts[i].scenario_id);
    ASSERT_EQ(results[i].transcripts.size(), 3u);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(results[i].transcripts[static_cast<std::size_t>(k)].sample_index, k);
  }
}

TEST(Mock, DeterministicAndRecordedFirstSample) {
  const auto scenarios = nine_builtin_scenarios();
  GatewayConfig cfg;
  cfg.samples_per_scenario = 4;
  Gateway a(cfg, make_mock_backend(scenarios, 7));
  Gateway b(cfg, make_mock_backend(scenarios, 7));
  Gateway c(cfg, make_mock_backend(scenarios, 8));
  bool any_seed_difference = false;
  for (const auto& s : scenarios) {
    const auto p = PromptEngine().render(s);
    const auto sa = a.sample_n(p), sb = b.sample_n(p), sc = c.sample_n(p);
    ASSERT_EQ(sa.transcripts.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_EQ(sa.transcripts[k].response_text, sb.transcripts[k].response_text);
      EXPECT_FALSE(sa.transcripts[k].response_text.empty());
      if (k > 0 && sa.transcripts[k].response_text != sc.transcripts[k].response_text) any_seed_difference = true;
    }
    if (auto rec = recorded_answer(s.id)) {
      EXPECT_EQ(first_answer(sa.transcripts).response_text, *rec);
      EXPECT_EQ(first_answer(sc.transcripts).response_text, *rec);
    }
  }
  EXPECT_TRUE(any_seed_difference);
  EXPECT_TRUE(recorded_answer("hybrid-rainy").has_value());
  EXPECT_FALSE(recorded_answer("nope").has_value());
}

TEST(Gateway, FirstAnswerAndReportingIndex) {
  std::vector<Transcript> ts(3);
  for (int i = 0; i < 3; ++i) {
    ts[static_cast<std::size_t>(i)].scenario_id = "s";
    ts[static_cast<std::size_t>(i)].sample_index = 2 - i;
  }
  EXPECT_EQ(first_answer(ts).sample_index, 0);
  EXPECT_THROW(first_answer({}), ValidationError);
  ts.pop_back();
  EXPECT_THROW(first_answer(ts), ValidationError);

  std::set<int> seen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const int idx = reporting_sample_index("hybrid-rainy", 5, seed);
    EXPECT_EQ(idx, reporting_sample_index("hybrid-rainy", 5, seed));
    EXPECT_GE(idx, 0);
    EXPECT_LT(idx, 5);
    seen.insert(idx);
  }
  EXPECT_EQ(seen.size(), 5u);
  EXPECT_EQ(reporting_sample_index("x", 1, 99), 0);
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Transcripts, StoreLoadRoundTrip) {
  const fs::path dir = fs::temp_directory_path() / "llmdrive_transcripts";
  fs::remove_all(dir);
  const auto scenarios = nine_builtin_scenarios();
  GatewayConfig cfg;
  cfg.samples_per_scenario = 5;
  Gateway g(cfg, make_mock_backend(scenarios, 3));
  std::vector<Transcript> all;
  for (const auto& s : scenarios) {
    for (auto& t : g.sample_n(PromptEngine().render(s)).transcripts) all.push_back(t);
  }
  ASSERT_EQ(all.size(), 45u);
  store_transcripts(all, dir);
  auto set = load_transcripts(dir);
  EXPECT_TRUE(set.errors.empty());
  ASSERT_EQ(set.records.size(), 45u);
  std::sort(all.begin(), all.end(), [](const Transcript& a, const Transcript& b) {
    return std::tie(a.scenario_id, a.sample_index) < std::tie(b.scenario_id, b.sample_index);
  });
  EXPECT_EQ(set.records, all);

  std::ofstream(dir / "hybrid-sunny_2.json", std::ios::trunc) << "{\"schema_version\": 1, \"scenario_id\": ";
  set = load_transcripts(dir);
  EXPECT_EQ(set.records.size(), 44u);
  ASSERT_EQ(set.errors.size(), 1u);
  EXPECT_EQ(set.errors[0].path.filename(), "hybrid-sunny_2.json");
  EXPECT_THROW(load_transcripts(dir / "missing"), IoError);
  fs::remove_all(dir);
}

TEST(Transcripts, SchemaChecks) {
  Transcript t;
  t.scenario_id = "x";
  t.response_text = "r";
  auto j = to_json(t);
  EXPECT_EQ(j["schema_version"], kTranscriptSchemaVersion);
  EXPECT_EQ(transcript_from_json(j), t);
  j["schema_version"] = 2;
  EXPECT_THROW(transcript_from_json(j), ParseError);
  j = to_json(t);
  j.erase("response_text");
  EXPECT_THROW(transcript_from_json(j), ParseError);
  EXPECT_EQ(transcript_filename(t), "x_0.json");
  t.response_text.clear();
  EXPECT_THROW(t.validate(), ValidationError);
  t.error = "timeout";
  EXPECT_NO_THROW(t.validate());
}

TEST(Transcripts, RecordedFixturesLoad) {
  const auto set = load_transcripts(fs::path(LLMDRIVE_SOURCE_DIR) / "fixtures/recorded/transcripts");
  EXPECT_TRUE(set.errors.empty());
  ASSERT_EQ(set.records.size(), 3u);
  for (const auto& t : set.records) {
    EXPECT_EQ(t.sample_index, 0);
    EXPECT_EQ(t.response_text, *recorded_answer(t.scenario_id));
  }
}

TEST_F(KeyEnv, KeyNeverWrittenToOutputs) {
  FakeEndpoint ep([](const httplib::Request& req, httplib::Response& res) {
    // Echo nothing of the request back except a fixed answer.
    (void)req;
    res.set_content(completion("I should slow down to 40 km/h. The distance is 20 meters."), "application/json");
  });
  RunConfig cfg;
  cfg.backend = BackendKind::live;
  cfg.gateway = live_config(ep);
  cfg.gateway.samples_per_scenario = 2;
  cfg.out_dir = fs::temp_directory_path() / "llmdrive_live_run";
  fs::remove_all(cfg.out_dir);
  const auto result = run_pipeline(cfg, nullptr, [](double) {});
  EXPECT_EQ(result.transcripts.size(), 18u);
  const std::string everything = slurp_tree(cfg.out_dir);
  EXPECT_FALSE(everything.empty());
  EXPECT_EQ(everything.find(kSecret), std::string::npos);
  EXPECT_NE(everything.find(kKeyVar), std::string::npos);  // the variable name is recorded
  EXPECT_GT(ep.hits(), 0);
  fs::remove_all(cfg.out_dir);
}
