#include "llmdrive/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <random>
#include <thread>

#include "llmdrive/embedded.hpp"
#include "llmdrive/error.hpp"
#include "llmdrive/format.hpp"

namespace llmdrive {

void GatewayConfig::validate() const {
  if (samples_per_scenario < 1) throw ValidationError("samples_per_scenario must be >= 1");
  if (!(timeout_s > 0.0) || !std::isfinite(timeout_s)) throw ValidationError("timeout must be > 0");
  if (parallelism_limit < 1) throw ValidationError("parallelism_limit must be >= 1");
  if (max_retries < 0) throw ValidationError("max_retries must be >= 0");
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) throw ValidationError("temperature must be >= 0");
  if (!(backoff_initial_s >= 0.0) || !(backoff_max_s >= 0.0)) throw ValidationError("backoff must be >= 0");
  if (model_name.empty()) throw ValidationError("model_name is empty");
}

std::string_view to_string(GatewayErrorKind k) noexcept {
  switch (k) {
    case GatewayErrorKind::auth: return "auth";
    case GatewayErrorKind::timeout: return "timeout";
    case GatewayErrorKind::malformed_response: return "malformed_response";
    case GatewayErrorKind::http: return "http";
    case GatewayErrorKind::connection: return "connection";
    case GatewayErrorKind::missing_api_key: return "missing_api_key";
    case GatewayErrorKind::missing_record: return "missing_record";
  }
  return "http";
}

GatewayError::GatewayError(GatewayErrorKind kind, std::string scenario_id, const std::string& detail, int status)
    : std::runtime_error(std::string(to_string(kind)) + " error for scenario '" + scenario_id + "': " + detail),
      kind_(kind),
      scenario_id_(std::move(scenario_id)),
      status_(status) {}

std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

int reporting_sample_index(std::string_view scenario_id, int n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("sample count must be >= 1");
  std::mt19937_64 rng(seed ^ fnv1a64(scenario_id));
  return static_cast<int>(rng() % static_cast<std::uint64_t>(n));
}

const Transcript& first_answer(const std::vector<Transcript>& samples) {
  for (const auto& t : samples) {
    if (t.sample_index == 0) return t;
  }
  throw ValidationError(samples.empty() ? "no samples to choose from" : "no sample with index 0");
}

std::optional<std::string_view> recorded_answer(std::string_view scenario_id) {
  return embedded::find("fixtures/recorded/answers/" + std::string(scenario_id) + ".txt");
}

// ---------------------------------------------------------------------------

Gateway::Gateway(GatewayConfig cfg, std::unique_ptr<ChatBackend> backend, Sleeper sleeper)
    : cfg_(std::move(cfg)), backend_(std::move(backend)), sleep_(std::move(sleeper)) {
  cfg_.validate();
  if (!backend_) throw ValidationError("gateway needs a backend");
  if (!sleep_) {
    sleep_ = [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); };
  }
}

Transcript Gateway::complete(const RenderedPrompt& prompt, int sample_index) {
  ChatRequest req{prompt.scenario_id, sample_index, cfg_.system_prompt, prompt.text, cfg_.model_name,
                  cfg_.temperature};
  struct InflightGuard {
    std::atomic<int>& n;
    ~InflightGuard() { --n; }
  };
  const auto started = std::chrono::steady_clock::now();
  int retries = 0;
  std::string reply;
  for (;;) {
    try {
      InflightGuard guard{in_flight_};
      const int now = ++in_flight_;
      if (hook_) hook_(now);
      reply = backend_->complete(req);
      break;
    } catch (const TransientError& e) {
      if (retries >= cfg_.max_retries) {
        throw GatewayError(e.kind(), prompt.scenario_id,
                           std::string(e.what()) + " (gave up after " + std::to_string(retries + 1) + " attempts)",
                           e.status());
      }
      const double delay = std::min(cfg_.backoff_max_s, cfg_.backoff_initial_s * std::ldexp(1.0, retries));
      ++retries;
      sleep_(delay);
    }
  }
  if (reply.empty()) throw GatewayError(GatewayErrorKind::malformed_response, prompt.scenario_id, "empty reply");
  Transcript t;
  t.scenario_id = prompt.scenario_id;
  t.sample_index = sample_index;
  t.prompt_text = prompt.text;
  t.response_text = std::move(reply);
  t.model_name = cfg_.model_name;
  t.created_at = utc_now_iso8601();
  t.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  t.backend = backend_->kind();
  t.retries = retries;
  return t;
}

SampleSet Gateway::sample_n(const RenderedPrompt& prompt) {
  SampleSet set;
  set.scenario_id = prompt.scenario_id;
  for (int i = 0; i < cfg_.samples_per_scenario; ++i) {
    try {
      set.transcripts.push_back(complete(prompt, i));
    } catch (const GatewayError& e) {
      set.errors.push_back(e);
    }
  }
  return set;
}

std::vector<SampleSet> Gateway::sample_all(const std::vector<RenderedPrompt>& prompts) {
  std::vector<SampleSet> results(prompts.size());
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(cfg_.parallelism_limit), prompts.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < prompts.size(); ++i) results[i] = sample_n(prompts[i]);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= prompts.size()) return;
      try {
        results[i] = sample_n(prompts[i]);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

// ---------------------------------------------------------------------------
// Replay

namespace {

class ReplayBackend final : public ChatBackend {
 public:
  explicit ReplayBackend(const TranscriptSet& recorded) {
    for (const auto& t : recorded.records) {
      if (!t.error) replies_[{t.scenario_id, t.sample_index}] = t.response_text;
    }
  }
  BackendKind kind() const override { return BackendKind::replay; }
  std::string complete(const ChatRequest& req) override {
    auto it = replies_.find({req.scenario_id, req.sample_index});
    if (it == replies_.end()) {
      throw GatewayError(GatewayErrorKind::missing_record, req.scenario_id,
                         "no recorded reply for sample " + std::to_string(req.sample_index));
    }
    return it->second;
  }

 private:
  std::map<std::pair<std::string, int>, std::string> replies_;
};

}  // namespace

std::unique_ptr<ChatBackend> make_replay_backend(const TranscriptSet& recorded) {
  return std::make_unique<ReplayBackend>(recorded);
}

}  // namespace llmdrive
