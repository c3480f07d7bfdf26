#pragma once

// Run orchestration shared by the CLI subcommands: scenarios -> prompts ->
// samples -> transcripts -> grades -> report, plus the output-directory layout.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmdrive/gateway.hpp"
#include "llmdrive/grader.hpp"
#include "llmdrive/report.hpp"
#include "llmdrive/scenario.hpp"

namespace llmdrive {

enum class ScenarioSource { builtin, file, trace };
std::string_view to_string(ScenarioSource s) noexcept;

struct RunConfig {
  ScenarioSource source = ScenarioSource::builtin;
  std::filesystem::path source_path;  // file or trace
  BackendKind backend = BackendKind::mock;
  std::filesystem::path replay_dir;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  std::optional<std::filesystem::path> template_dir;
  std::optional<std::filesystem::path> annotations_dir;
  double pedestrian_distance_m = 20.0;  // hybrid-rainy builtin
  std::optional<double> min_accuracy;   // CI threshold on every defined row
  GatewayConfig gateway;
  GradeOptions grading;

  /// Throws ValidationError.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& c);

/// Scenarios named by the config's source. Throws IoError / ParseError /
/// ValidationError. Trace records that fail to parse are an error.
std::vector<Scenario> load_scenarios(const RunConfig& c);

struct RunResult {
  std::vector<Scenario> scenarios;
  std::vector<std::string> skipped;  // ineligible scenario ids
  std::vector<Transcript> transcripts;
  std::vector<GatewayError> gateway_errors;
  std::vector<GradedTranscript> graded;
  GradeReport report;
  std::vector<std::string> below_threshold;  // "weather/reasoning" rows under min_accuracy

  bool threshold_failed() const noexcept { return !below_threshold.empty(); }
};

/// Grades every transcript against its scenario (transcripts whose scenario
/// is unknown are reported in `unmatched`), applies annotations and aggregates.
struct GradeRun {
  std::vector<GradedTranscript> graded;
  std::vector<std::string> unmatched;
  GradeReport report;
};
GradeRun grade_all(const std::vector<Transcript>& transcripts, const std::vector<Scenario>& scenarios,
                   const GradeOptions& opts, const std::vector<AnnotationFile>& annotations, int samples_per_scenario,
                   std::uint64_t seed);

/// Rows whose accuracy is defined and below `min_accuracy`.
std::vector<std::string> rows_below(const GradeReport& r, double min_accuracy);

/// Full pipeline. Writes transcripts/, graded/, the report files and
/// manifest.json under cfg.out_dir. Throws on operational failure
/// (GatewayError for a missing key, IoError, ...); per-sample gateway
/// failures are collected in the result.
RunResult run_pipeline(const RunConfig& cfg, std::unique_ptr<ChatBackend> backend = nullptr,
                       Gateway::Sleeper sleeper = {});

/// graded/{id}_{idx}.json for each record.
void store_graded(const std::vector<GradedTranscript>& graded, const std::filesystem::path& dir);
/// Reads the aggregation fields back from graded/*.json. Throws ParseError.
std::vector<GradeRecord> load_graded_records(const std::filesystem::path& dir);

/// Version strings recorded in manifests.
nlohmann::json build_info();

}  // namespace llmdrive
