#pragma once

// Chat-completion access: a backend interface (live HTTP, mock, replay),
// retry with exponential backoff, N-sample collection and bounded
// parallelism across scenarios.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "llmdrive/prompt.hpp"
#include "llmdrive/scenario.hpp"
#include "llmdrive/transcript.hpp"

namespace llmdrive {

struct GatewayConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model_name = "gpt-4";
  std::string api_key_env_var = "OPENAI_API_KEY";
  std::string system_prompt = "You are a helpful assistant.";
  double temperature = 1.0;
  double timeout_s = 120.0;
  int max_retries = 3;
  int samples_per_scenario = 5;
  int parallelism_limit = 4;
  double backoff_initial_s = 1.0;
  double backoff_max_s = 30.0;

  /// Throws ValidationError when an invariant is broken.
  void validate() const;
};

enum class GatewayErrorKind { auth, timeout, malformed_response, http, connection, missing_api_key, missing_record };
std::string_view to_string(GatewayErrorKind k) noexcept;

/// Every gateway failure names the scenario it happened on.
class GatewayError : public std::runtime_error {
 public:
  GatewayError(GatewayErrorKind kind, std::string scenario_id, const std::string& detail, int status = 0);
  GatewayErrorKind kind() const noexcept { return kind_; }
  const std::string& scenario_id() const noexcept { return scenario_id_; }
  int status() const noexcept { return status_; }

 private:
  GatewayErrorKind kind_;
  std::string scenario_id_;
  int status_;
};

/// What a backend is asked for.
struct ChatRequest {
  std::string scenario_id;
  int sample_index = 0;
  std::string system_prompt;
  std::string user_prompt;
  std::string model_name;
  double temperature = 1.0;
};

/// Thrown by backends for failures worth retrying (5xx, 429, 408, dropped
/// connections, timeouts).
class TransientError : public std::runtime_error {
 public:
  TransientError(GatewayErrorKind kind, const std::string& what, int status = 0)
      : std::runtime_error(what), kind_(kind), status_(status) {}
  GatewayErrorKind kind() const noexcept { return kind_; }
  int status() const noexcept { return status_; }

 private:
  GatewayErrorKind kind_;
  int status_;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual BackendKind kind() const = 0;
  /// Returns the reply text. Throws TransientError for retriable failures
  /// and GatewayError for permanent ones. Must be safe to call concurrently.
  virtual std::string complete(const ChatRequest& req) = 0;
};

/// OpenAI-compatible `POST {base_url}/chat/completions`. The key is read once
/// from the configured environment variable and is never logged or stored.
std::unique_ptr<ChatBackend> make_http_backend(const GatewayConfig& cfg);

/// Deterministic stand-in for a model. Sample 0 of a scenario that has a
/// recorded answer returns it verbatim; everything else is synthesized from
/// the scenario and (seed, scenario id, sample index).
std::unique_ptr<ChatBackend> make_mock_backend(std::vector<Scenario> scenarios, std::uint64_t seed);

/// Serves previously stored transcripts keyed by (scenario id, sample index).
std::unique_ptr<ChatBackend> make_replay_backend(const TranscriptSet& recorded);

/// Recorded answer text for a scenario id, if one ships with the library.
std::optional<std::string_view> recorded_answer(std::string_view scenario_id);

struct SampleSet {
  std::string scenario_id;
  std::vector<Transcript> transcripts;  // strictly increasing sample_index
  std::vector<GatewayError> errors;     // samples that failed after retries
};

class Gateway {
 public:
  using Sleeper = std::function<void(double seconds)>;
  /// Called with the number of requests in flight each time one starts.
  using InflightHook = std::function<void(int in_flight)>;

  Gateway(GatewayConfig cfg, std::unique_ptr<ChatBackend> backend, Sleeper sleeper = {});

  const GatewayConfig& config() const noexcept { return cfg_; }
  BackendKind backend_kind() const { return backend_->kind(); }
  void set_inflight_hook(InflightHook hook) { hook_ = std::move(hook); }

  /// One exchange with retries. Throws GatewayError.
  Transcript complete(const RenderedPrompt& prompt, int sample_index = 0);

  /// samples_per_scenario exchanges, in index order. Failures are collected,
  /// not thrown.
  SampleSet sample_n(const RenderedPrompt& prompt);

  /// sample_n for every prompt, at most parallelism_limit requests at once.
  /// Results are in the order of `prompts`.
  std::vector<SampleSet> sample_all(const std::vector<RenderedPrompt>& prompts);

 private:
  GatewayConfig cfg_;
  std::unique_ptr<ChatBackend> backend_;
  Sleeper sleep_;
  InflightHook hook_;
  std::atomic<int> in_flight_{0};
};

/// The sample index reported for a scenario: a pure function of (seed, id, n).
int reporting_sample_index(std::string_view scenario_id, int n, std::uint64_t seed);

/// The sample with index 0. Throws ValidationError when absent.
const Transcript& first_answer(const std::vector<Transcript>& samples);

/// 64-bit FNV-1a, used to derive per-scenario seeds.
std::uint64_t fnv1a64(std::string_view s) noexcept;

}  // namespace llmdrive
