#include "llmdrive/report.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <tuple>

#include "llmdrive/error.hpp"
#include "llmdrive/format.hpp"

namespace llmdrive {

namespace fs = std::filesystem;

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::machine: return "machine";
    case Provenance::annotated: return "annotated";
    case Provenance::mixed: return "mixed";
  }
  return "machine";
}

void AnnotationFile::validate() const {
  if (scenario_id.empty()) throw ValidationError("annotation has no scenario id");
  if (sample_index < 0) throw ValidationError("annotation " + scenario_id + ": negative sample index");
  if (total_answers < 0 || wrong_answers < 0) throw ValidationError("annotation " + scenario_id + ": negative count");
  if (wrong_answers > total_answers) {
    throw ValidationError("annotation " + scenario_id + ": wrong_answers exceeds total_answers");
  }
}

nlohmann::json to_json(const AnnotationFile& a) {
  nlohmann::json j;
  j["scenario_id"] = a.scenario_id;
  j["sample_index"] = a.sample_index;
  j["total_answers"] = a.total_answers;
  j["wrong_answers"] = a.wrong_answers;
  if (a.weather) j["weather"] = *a.weather;
  if (a.reasoning_kind) j["reasoning_kind"] = to_string(*a.reasoning_kind);
  j["notes"] = a.notes;
  return j;
}

AnnotationFile annotation_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("annotation: expected a JSON object");
  auto need = [&](const char* name) -> const nlohmann::json& {
    if (!j.contains(name)) throw ParseError(std::string("annotation: missing field '") + name + "'");
    return j.at(name);
  };
  AnnotationFile a;
  try {
    a.scenario_id = need("scenario_id").get<std::string>();
    a.sample_index = need("sample_index").get<int>();
    a.total_answers = need("total_answers").get<int>();
    a.wrong_answers = need("wrong_answers").get<int>();
    if (j.contains("weather")) a.weather = canonical_weather_name(j.at("weather").get<std::string>());
    if (j.contains("reasoning_kind")) {
      const auto k = parse_reasoning_kind(j.at("reasoning_kind").get<std::string>());
      if (!k) throw ParseError("annotation: unknown reasoning_kind");
      a.reasoning_kind = *k;
    }
    if (j.contains("notes")) a.notes = j.at("notes").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("annotation: wrong field type: ") + e.what());
  }
  try {
    a.validate();
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
  return a;
}

AnnotationSet load_annotations(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(dir, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == ".json") files.push_back(it->path());
  }
  if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());
  AnnotationSet set;
  for (const auto& p : files) {
    std::ifstream in(p, std::ios::binary);
    try {
      set.records.push_back(annotation_from_json(nlohmann::json::parse(in)));
    } catch (const nlohmann::json::exception& e) {
      set.errors.emplace_back(p, std::string("invalid JSON: ") + e.what());
    } catch (const ParseError& e) {
      set.errors.emplace_back(p, e.what());
    }
  }
  return set;
}

GradeRecord record_of(const GradedTranscript& g) {
  GradeRecord r;
  r.scenario_id = g.scenario_id;
  r.sample_index = g.sample_index;
  r.weather = g.weather;
  r.reasoning_kind = g.reasoning_kind;
  r.total = g.total;
  r.wrong = g.wrong;
  r.provenance = Provenance::machine;
  for (auto f : g.safety_flags) r.flags.emplace_back(sim::to_string(f));
  return r;
}

GradeRecord record_of(const AnnotationFile& a, const std::vector<Scenario>& scenarios) {
  a.validate();
  GradeRecord r;
  r.scenario_id = a.scenario_id;
  r.sample_index = a.sample_index;
  r.total = a.total_answers;
  r.wrong = a.wrong_answers;
  r.provenance = Provenance::annotated;
  const Scenario* s = find_scenario(scenarios, a.scenario_id);
  if (a.weather) {
    r.weather = *a.weather;
  } else if (s) {
    r.weather = canonical_weather_name(s->weather.name);
  } else {
    throw ValidationError("annotation " + a.scenario_id + ": no weather and no matching scenario");
  }
  if (a.reasoning_kind) {
    r.reasoning_kind = *a.reasoning_kind;
  } else if (s) {
    r.reasoning_kind = s->reasoning_kind;
  } else {
    throw ValidationError("annotation " + a.scenario_id + ": no reasoning kind and no matching scenario");
  }
  return r;
}

std::optional<double> GradeReport::mean_accuracy(ReasoningKind k) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.reasoning_kind == k && r.accuracy) {
      sum += *r.accuracy;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

const ReportRow* GradeReport::row(std::string_view weather, ReasoningKind k) const {
  for (const auto& r : rows) {
    if (r.weather == weather && r.reasoning_kind == k) return &r;
  }
  return nullptr;
}

GradeReport aggregate(const std::vector<GradeRecord>& records) {
  // Annotations win over machine records for the same (scenario, sample).
  std::map<std::pair<std::string, int>, std::vector<const GradeRecord*>> by_key;
  for (const auto& r : records) by_key[{r.scenario_id, r.sample_index}].push_back(&r);

  using GroupKey = std::tuple<int, std::string, int>;  // weather rank, weather, reasoning
  struct Acc {
    long total = 0;
    long wrong = 0;
    bool machine = false;
    bool annotated = false;
    int records = 0;
  };
  std::map<GroupKey, Acc> groups;
  GradeReport report;
  for (auto& [key, recs] : by_key) {
    const bool any_annotation = std::any_of(recs.begin(), recs.end(),
                                            [](const GradeRecord* r) { return r->provenance == Provenance::annotated; });
    for (const GradeRecord* r : recs) {
      if (any_annotation && r->provenance != Provenance::annotated) continue;
      if (r->total < 0 || r->wrong < 0 || r->wrong > r->total) {
        throw ValidationError("record " + r->scenario_id + ": invalid counts");
      }
      Acc& a = groups[{weather_rank(r->weather), r->weather, static_cast<int>(r->reasoning_kind)}];
      a.total += r->total;
      a.wrong += r->wrong;
      a.records += 1;
      (r->provenance == Provenance::annotated ? a.annotated : a.machine) = true;
      for (const auto& f : r->flags) ++report.flag_counts[f];
    }
  }
  for (const auto& [key, a] : groups) {
    ReportRow row;
    row.weather = std::get<1>(key);
    row.reasoning_kind = static_cast<ReasoningKind>(std::get<2>(key));
    row.total = static_cast<int>(a.total);
    row.wrong = static_cast<int>(a.wrong);
    if (a.total > 0) row.accuracy = static_cast<double>(a.total - a.wrong) / static_cast<double>(a.total);
    row.provenance = a.annotated && a.machine ? Provenance::mixed
                     : a.annotated            ? Provenance::annotated
                                              : Provenance::machine;
    row.records = a.records;
    report.rows.push_back(std::move(row));
  }
  // Group map is ordered weather-first; the report lists weather-major rows.
  return report;
}

void write_csv(const GradeReport& r, std::ostream& out) {
  out << "weather,reasoning,total,wrong,accuracy\n";
  for (const auto& row : r.rows) {
    out << row.weather << ',' << to_string(row.reasoning_kind) << ',' << row.total << ',' << row.wrong << ','
        << (row.accuracy ? format_fixed(*row.accuracy, 4) : "NA") << '\n';
  }
}

nlohmann::json to_json(const GradeReport& r) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["tolerance"] = r.tolerance;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    j["rows"].push_back({{"weather", row.weather},
                         {"reasoning", to_string(row.reasoning_kind)},
                         {"total", row.total},
                         {"wrong", row.wrong},
                         {"accuracy", row.accuracy ? nlohmann::json(*row.accuracy) : nlohmann::json(nullptr)},
                         {"provenance", to_string(row.provenance)},
                         {"records", row.records}});
  }
  nlohmann::json means = nlohmann::json::object();
  for (auto k : {ReasoningKind::common_sense, ReasoningKind::arithmetic, ReasoningKind::hybrid}) {
    const auto m = r.mean_accuracy(k);
    means[std::string(to_string(k))] = m ? nlohmann::json(*m) : nlohmann::json(nullptr);
  }
  j["mean_accuracy"] = means;
  j["flag_counts"] = r.flag_counts;
  j["reporting_samples"] = r.reporting_samples;
  return j;
}

void write_plot_data(const GradeReport& r, std::ostream& out) {
  out << "# accuracy by weather; columns: x weather accuracy\n";
  bool first = true;
  for (auto k : {ReasoningKind::common_sense, ReasoningKind::arithmetic, ReasoningKind::hybrid}) {
    if (!first) out << "\n\n";
    first = false;
    out << "# " << to_string(k) << '\n';
    int x = 0;
    for (const auto& w : builtin_presets()) {
      const ReportRow* row = r.row(w.name, k);
      out << x++ << ' ' << w.name << ' '
          << (row && row->accuracy ? format_fixed(*row->accuracy, 4) : std::string("NaN")) << '\n';
    }
  }
}

void write_plot_script(std::ostream& out) {
  out << "# gnuplot -p plot.gp\n"
         "set title 'Accuracy by weather'\n"
         "set ylabel 'accuracy'\n"
         "set yrange [0:1]\n"
         "set xrange [-0.5:2.5]\n"
         "set key outside\n"
         "names = 'common_sense arithmetic hybrid'\n"
         "plot for [i=0:2] 'plot.dat' index i using 1:3:xtic(2) with linespoints title word(names, i+1)\n";
}

namespace {

template <typename Fn>
void write_file(const fs::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  fn(out);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void emit_report(const GradeReport& r, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "report.csv", [&](std::ostream& o) { write_csv(r, o); });
  write_file(dir / "report.json", [&](std::ostream& o) { o << to_json(r).dump(2) << '\n'; });
  write_file(dir / "plot.dat", [&](std::ostream& o) { write_plot_data(r, o); });
  write_file(dir / "plot.gp", [&](std::ostream& o) { write_plot_script(o); });
}

}  // namespace llmdrive
