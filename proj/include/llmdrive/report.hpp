#pragma once

// Accuracy aggregation by weather x reasoning kind, human annotation files,
// and the CSV / JSON / gnuplot emitters.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmdrive/grader.hpp"
#include "llmdrive/scenario.hpp"

namespace llmdrive {

enum class Provenance { machine, annotated, mixed };
std::string_view to_string(Provenance p) noexcept;

/// Human-supplied counts for one (scenario, sample).
struct AnnotationFile {
  std::string scenario_id;
  int sample_index = 0;
  int total_answers = 0;
  int wrong_answers = 0;
  std::optional<std::string> weather;                 // overrides the scenario lookup
  std::optional<ReasoningKind> reasoning_kind;        // overrides the scenario lookup
  std::vector<std::string> notes;

  /// Throws ValidationError: negative counts or wrong > total.
  void validate() const;
};

nlohmann::json to_json(const AnnotationFile& a);
/// Throws ParseError naming the field.
AnnotationFile annotation_from_json(const nlohmann::json& j);

struct AnnotationSet {
  std::vector<AnnotationFile> records;
  std::vector<std::pair<std::filesystem::path, std::string>> errors;
};

/// Every *.json under `dir`, sorted by path. Throws IoError if `dir` is not a directory.
AnnotationSet load_annotations(const std::filesystem::path& dir);

/// One countable unit going into aggregation.
struct GradeRecord {
  std::string scenario_id;
  int sample_index = 0;
  std::string weather;  // canonical preset name
  ReasoningKind reasoning_kind = ReasoningKind::common_sense;
  int total = 0;
  int wrong = 0;
  Provenance provenance = Provenance::machine;
  std::vector<std::string> flags;  // safety flag names, machine records only
};

GradeRecord record_of(const GradedTranscript& g);

/// Resolves weather and reasoning kind from the annotation or, failing that,
/// from `scenarios`. Throws ValidationError when neither has them.
GradeRecord record_of(const AnnotationFile& a, const std::vector<Scenario>& scenarios);

struct ReportRow {
  std::string weather;
  ReasoningKind reasoning_kind = ReasoningKind::common_sense;
  int total = 0;
  int wrong = 0;
  std::optional<double> accuracy;  // none when total == 0
  Provenance provenance = Provenance::machine;
  int records = 0;
};

struct GradeReport {
  std::vector<ReportRow> rows;  // sunny, partly_sunny, rainy, then others; reasoning in enum order
  std::map<std::string, int> flag_counts;
  std::map<std::string, int> reporting_samples;  // scenario id -> sample index chosen for reporting
  double tolerance = 0.01;

  /// Unweighted mean of the defined row accuracies for one reasoning kind.
  std::optional<double> mean_accuracy(ReasoningKind k) const;
  const ReportRow* row(std::string_view weather, ReasoningKind k) const;
};

/// accuracy = (total - wrong) / total per group. An annotation for a
/// (scenario, sample) replaces the machine record for the same key. The
/// result does not depend on the order of `records`.
GradeReport aggregate(const std::vector<GradeRecord>& records);

/// `weather,reasoning,total,wrong,accuracy`, accuracy with 4 decimals, "NA" when undefined.
void write_csv(const GradeReport& r, std::ostream& out);
nlohmann::json to_json(const GradeReport& r);
/// Three gnuplot index blocks (common_sense, arithmetic, hybrid), each with
/// the points sunny, partly_sunny, rainy; undefined accuracies are NaN.
void write_plot_data(const GradeReport& r, std::ostream& out);
/// Gnuplot script that plots plot.dat.
void write_plot_script(std::ostream& out);

/// report.csv, report.json, plot.dat and plot.gp under `dir`. Throws IoError.
void emit_report(const GradeReport& r, const std::filesystem::path& dir);

}  // namespace llmdrive
