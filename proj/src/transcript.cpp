#include "llmdrive/transcript.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <system_error>
#include <thread>

#include "llmdrive/error.hpp"

namespace llmdrive {

namespace fs = std::filesystem;

std::string_view to_string(BackendKind b) noexcept {
  switch (b) {
    case BackendKind::live: return "live";
    case BackendKind::mock: return "mock";
    case BackendKind::replay: return "replay";
  }
  return "mock";
}

std::optional<BackendKind> parse_backend_kind(std::string_view s) {
  if (s == "live") return BackendKind::live;
  if (s == "mock") return BackendKind::mock;
  if (s == "replay") return BackendKind::replay;
  return std::nullopt;
}

void Transcript::validate() const {
  if (scenario_id.empty()) throw ValidationError("transcript has no scenario id");
  if (scenario_id.find_first_of("/\\") != std::string::npos || scenario_id == "." || scenario_id == "..") {
    throw ValidationError("scenario id '" + scenario_id + "' cannot be used as a file name");
  }
  if (sample_index < 0) throw ValidationError("negative sample index in transcript " + scenario_id);
  if (response_text.empty() && !error) {
    throw ValidationError("transcript " + scenario_id + " has an empty reply and no error marker");
  }
}

nlohmann::json to_json(const Transcript& t) {
  nlohmann::json j;
  j["schema_version"] = kTranscriptSchemaVersion;
  j["scenario_id"] = t.scenario_id;
  j["sample_index"] = t.sample_index;
  j["prompt_text"] = t.prompt_text;
  j["response_text"] = t.response_text;
  j["model_name"] = t.model_name;
  j["created_at"] = t.created_at;
  j["latency_ms"] = t.latency_ms;
  j["backend"] = to_string(t.backend);
  j["retries"] = t.retries;
  j["error"] = t.error ? nlohmann::json(*t.error) : nlohmann::json(nullptr);
  return j;
}

namespace {

template <typename T>
T field(const nlohmann::json& j, const char* name) {
  if (!j.contains(name)) throw ParseError(std::string("transcript: missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string("transcript: field '") + name + "' has the wrong type");
  }
}

}  // namespace

Transcript transcript_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("transcript: expected a JSON object");
  const int version = field<int>(j, "schema_version");
  if (version != kTranscriptSchemaVersion) {
    throw ParseError("transcript: unsupported schema_version " + std::to_string(version));
  }
  Transcript t;
  t.scenario_id = field<std::string>(j, "scenario_id");
  t.sample_index = field<int>(j, "sample_index");
  t.prompt_text = field<std::string>(j, "prompt_text");
  t.response_text = field<std::string>(j, "response_text");
  t.model_name = field<std::string>(j, "model_name");
  t.created_at = field<std::string>(j, "created_at");
  t.latency_ms = field<double>(j, "latency_ms");
  const auto backend = parse_backend_kind(field<std::string>(j, "backend"));
  if (!backend) throw ParseError("transcript: unknown backend");
  t.backend = *backend;
  t.retries = j.contains("retries") ? field<int>(j, "retries") : 0;
  if (j.contains("error") && !j.at("error").is_null()) t.error = field<std::string>(j, "error");
  try {
    t.validate();
  } catch (const ValidationError& e) {
    throw ParseError(std::string("transcript: ") + e.what());
  }
  return t;
}

std::string transcript_filename(const Transcript& t) {
  return t.scenario_id + "_" + std::to_string(t.sample_index) + ".json";
}

void store_transcript(const Transcript& t, const fs::path& dir) {
  t.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const fs::path final_path = dir / transcript_filename(t);
  std::ostringstream tmp_name;
  tmp_name << '.' << transcript_filename(t) << '.' << std::this_thread::get_id() << ".tmp";
  const fs::path tmp = dir / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << to_json(t).dump(2) << '\n';
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, final_path, ec);
  if (ec) throw IoError("cannot rename into " + final_path.string() + ": " + ec.message());
}

void store_transcripts(const std::vector<Transcript>& ts, const fs::path& dir) {
  for (const auto& t : ts) store_transcript(t, dir);
}

TranscriptSet load_transcripts(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(dir, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == ".json" &&
        it->path().filename().string().front() != '.') {
      files.push_back(it->path());
    }
  }
  if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());

  TranscriptSet set;
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      set.errors.push_back({path, "cannot open"});
      continue;
    }
    try {
      const auto j = nlohmann::json::parse(in);
      set.records.push_back(transcript_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      set.errors.push_back({path, std::string("invalid JSON: ") + e.what()});
    } catch (const ParseError& e) {
      set.errors.push_back({path, e.what()});
    }
  }
  std::stable_sort(set.records.begin(), set.records.end(), [](const Transcript& a, const Transcript& b) {
    return std::tie(a.scenario_id, a.sample_index) < std::tie(b.scenario_id, b.sample_index);
  });
  return set;
}

}  // namespace llmdrive
