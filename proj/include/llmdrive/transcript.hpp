#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace llmdrive {

inline constexpr int kTranscriptSchemaVersion = 1;

enum class BackendKind { live, mock, replay };
std::string_view to_string(BackendKind b) noexcept;
std::optional<BackendKind> parse_backend_kind(std::string_view s);

/// One prompt/reply exchange.
struct Transcript {
  std::string scenario_id;
  int sample_index = 0;
  std::string prompt_text;
  std::string response_text;
  std::string model_name;
  std::string created_at;  // ISO-8601 UTC
  double latency_ms = 0.0;
  BackendKind backend = BackendKind::mock;
  int retries = 0;
  std::optional<std::string> error;  // set when the exchange failed

  /// Throws ValidationError: negative index, empty id, or empty reply without
  /// an error marker.
  void validate() const;
  friend bool operator==(const Transcript&, const Transcript&) = default;
};

nlohmann::json to_json(const Transcript& t);
/// Throws ParseError on a missing field or a schema_version other than 1.
Transcript transcript_from_json(const nlohmann::json& j);

/// `{scenario_id}_{sample_index}.json`
std::string transcript_filename(const Transcript& t);

/// Writes one file atomically (temp file + rename). Throws IoError.
void store_transcript(const Transcript& t, const std::filesystem::path& dir);
void store_transcripts(const std::vector<Transcript>& ts, const std::filesystem::path& dir);

struct LoadError {
  std::filesystem::path path;
  std::string message;
};

struct TranscriptSet {
  std::vector<Transcript> records;  // sorted by (scenario_id, sample_index)
  std::vector<LoadError> errors;
};

/// Loads every *.json under `dir` (recursively). Unreadable or invalid files
/// become named errors; the rest still load. Throws IoError when `dir` is not
/// a directory.
TranscriptSet load_transcripts(const std::filesystem::path& dir);

}  // namespace llmdrive
