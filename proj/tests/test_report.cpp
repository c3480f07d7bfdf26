#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "llmdrive/error.hpp"
#include "llmdrive/report.hpp"

using namespace llmdrive;
namespace fs = std::filesystem;

namespace {

GradeRecord rec(std::string id, int idx, std::string weather, ReasoningKind k, int total, int wrong,
                Provenance p = Provenance::machine) {
  GradeRecord r;
  r.scenario_id = std::move(id);
  r.sample_index = idx;
  r.weather = std::move(weather);
  r.reasoning_kind = k;
  r.total = total;
  r.wrong = wrong;
  r.provenance = p;
  return r;
}

std::vector<GradeRecord> published_common_sense() {
  return {rec("cs-rainy", 0, "rainy", ReasoningKind::common_sense, 43, 21, Provenance::annotated),
          rec("cs-sunny", 0, "sunny", ReasoningKind::common_sense, 30, 14, Provenance::annotated),
          rec("cs-partly", 0, "partly_sunny", ReasoningKind::common_sense, 29, 15, Provenance::annotated)};
}

std::string csv_of(const GradeReport& r) {
  std::ostringstream out;
  write_csv(r, out);
  return out.str();
}

}  // namespace

TEST(Aggregate, PublishedCommonSenseCounts) {
  const auto r = aggregate(published_common_sense());
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[0].weather, "sunny");
  EXPECT_EQ(r.rows[1].weather, "partly_sunny");
  EXPECT_EQ(r.rows[2].weather, "rainy");
  EXPECT_NEAR(*r.row("sunny", ReasoningKind::common_sense)->accuracy, 0.5333, 1e-4);
  EXPECT_NEAR(*r.row("partly_sunny", ReasoningKind::common_sense)->accuracy, 0.4828, 1e-4);
  EXPECT_NEAR(*r.row("rainy", ReasoningKind::common_sense)->accuracy, 0.5116, 1e-4);
  EXPECT_EQ(*r.row("sunny", ReasoningKind::common_sense)->accuracy, 16.0 / 30.0);
  for (const auto& row : r.rows) EXPECT_EQ(row.provenance, Provenance::annotated);
  EXPECT_EQ(csv_of(r),
            "weather,reasoning,total,wrong,accuracy\n"
            "sunny,common_sense,30,14,0.5333\n"
            "partly_sunny,common_sense,29,15,0.4828\n"
            "rainy,common_sense,43,21,0.5116\n");
}

TEST(Aggregate, TrivialAndUndefined) {
  auto r = aggregate({rec("a", 0, "sunny", ReasoningKind::arithmetic, 7, 0)});
  EXPECT_EQ(*r.rows[0].accuracy, 1.0);
  r = aggregate({rec("a", 0, "sunny", ReasoningKind::arithmetic, 0, 0),
                 rec("b", 0, "rainy", ReasoningKind::arithmetic, 4, 1)});
  EXPECT_FALSE(r.rows[0].accuracy.has_value());
  EXPECT_EQ(*r.mean_accuracy(ReasoningKind::arithmetic), 0.75);
  EXPECT_FALSE(r.mean_accuracy(ReasoningKind::hybrid).has_value());
  EXPECT_NE(csv_of(r).find("sunny,arithmetic,0,0,NA"), std::string::npos);
  EXPECT_EQ(csv_of(aggregate({})), "weather,reasoning,total,wrong,accuracy\n");
  EXPECT_THROW(aggregate({rec("a", 0, "sunny", ReasoningKind::arithmetic, 3, 4)}), ValidationError);
}

TEST(Aggregate, RowOrder) {
  const auto r = aggregate({rec("h", 0, "rainy", ReasoningKind::hybrid, 5, 1), rec("x", 0, "snow", ReasoningKind::hybrid, 5, 1),
                            rec("a", 0, "sunny", ReasoningKind::hybrid, 5, 1),
                            rec("b", 0, "sunny", ReasoningKind::common_sense, 5, 1)});
  ASSERT_EQ(r.rows.size(), 4u);
  EXPECT_EQ(r.rows[0].reasoning_kind, ReasoningKind::common_sense);
  EXPECT_EQ(r.rows[1].weather, "sunny");
  EXPECT_EQ(r.rows[2].weather, "rainy");
  EXPECT_EQ(r.rows[3].weather, "snow");
}

TEST(Aggregate, AnnotationsReplaceMachineRecords) {
  GradeRecord m = rec("s1", 0, "sunny", ReasoningKind::hybrid, 10, 5);
  m.flags = {"collision"};
  const GradeRecord a = rec("s1", 0, "sunny", ReasoningKind::hybrid, 12, 2, Provenance::annotated);
  const GradeRecord other = rec("s1", 1, "sunny", ReasoningKind::hybrid, 8, 4);
  const auto r = aggregate({m, a, other});
  const ReportRow* row = r.row("sunny", ReasoningKind::hybrid);
  EXPECT_EQ(row->total, 20);
  EXPECT_EQ(row->wrong, 6);
  EXPECT_EQ(row->provenance, Provenance::mixed);
  EXPECT_EQ(row->records, 2);
  EXPECT_TRUE(r.flag_counts.empty());  // the flagged machine record was superseded
}

TEST(Emit, PlotDataHasThreeBlocksInWeatherOrder) {
  const auto r = aggregate(published_common_sense());
  std::ostringstream out;
  write_plot_data(r, out);
  const std::string s = out.str();
  EXPECT_NE(s.find("0 sunny 0.5333\n1 partly_sunny 0.4828\n2 rainy 0.5116\n"), std::string::npos);
  EXPECT_NE(s.find("# arithmetic\n0 sunny NaN\n1 partly_sunny NaN\n2 rainy NaN\n"), std::string::npos);
  // gnuplot index blocks are separated by two blank lines.
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 3 * 4 + 2 * 2);
  std::ostringstream gp;
  write_plot_script(gp);
  EXPECT_NE(gp.str().find("index i"), std::string::npos);
  EXPECT_NE(gp.str().find("'plot.dat'"), std::string::npos);
}

TEST(Emit, FilesAndJson) {
  const fs::path dir = fs::temp_directory_path() / "llmdrive_emit";
  fs::remove_all(dir);
  GradeReport r = aggregate(published_common_sense());
  r.reporting_samples["cs-sunny"] = 3;
  r.tolerance = 0.02;
  emit_report(r, dir);
  for (const char* f : {"report.csv", "report.json", "plot.dat", "plot.gp"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  std::ifstream in(dir / "report.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["rows"].size(), 3u);
  EXPECT_EQ(j["rows"][0]["provenance"], "annotated");
  EXPECT_EQ(j["reporting_samples"]["cs-sunny"], 3);
  EXPECT_EQ(j["tolerance"], 0.02);
  EXPECT_TRUE(j["mean_accuracy"]["hybrid"].is_null());
  fs::remove_all(dir);
}

TEST(Annotations, JsonRoundTripAndValidation) {
  AnnotationFile a;
  a.scenario_id = "common-sense-sunny";
  a.total_answers = 30;
  a.wrong_answers = 14;
  a.notes = {"n"};
  EXPECT_EQ(to_json(annotation_from_json(to_json(a))), to_json(a));
  auto j = to_json(a);
  j["wrong_answers"] = 31;
  EXPECT_THROW(annotation_from_json(j), ParseError);
  j = to_json(a);
  j.erase("total_answers");
  EXPECT_THROW(annotation_from_json(j), ParseError);
  j = to_json(a);
  j["total_answers"] = -1;
  EXPECT_THROW(annotation_from_json(j), ParseError);
}

TEST(Annotations, ResolveAgainstScenarios) {
  const auto set = nine_builtin_scenarios();
  AnnotationFile a;
  a.scenario_id = "arithmetic-partly-sunny";
  a.total_answers = 21;
  a.wrong_answers = 8;
  const auto r = record_of(a, set);
  EXPECT_EQ(r.weather, "partly_sunny");
  EXPECT_EQ(r.reasoning_kind, ReasoningKind::arithmetic);
  EXPECT_EQ(r.provenance, Provenance::annotated);
  a.scenario_id = "elsewhere";
  EXPECT_THROW(record_of(a, set), ValidationError);
  a.weather = "rainy";
  a.reasoning_kind = ReasoningKind::hybrid;
  EXPECT_EQ(record_of(a, set).weather, "rainy");
}

TEST(Annotations, ShippedFixtures) {
  const auto set = load_annotations(fs::path(LLMDRIVE_SOURCE_DIR) / "fixtures/annotations");
  ASSERT_TRUE(set.errors.empty());
  ASSERT_EQ(set.records.size(), 9u);
  std::vector<GradeRecord> records;
  const auto scenarios = nine_builtin_scenarios();
  for (const auto& a : set.records) records.push_back(record_of(a, scenarios));
  const auto r = aggregate(records);
  EXPECT_NEAR(*r.row("sunny", ReasoningKind::common_sense)->accuracy, 0.5333, 1e-4);
  EXPECT_NEAR(*r.row("partly_sunny", ReasoningKind::common_sense)->accuracy, 0.4828, 1e-4);
  EXPECT_NEAR(*r.row("rainy", ReasoningKind::common_sense)->accuracy, 0.5116, 1e-4);
  EXPECT_LT(*r.row("rainy", ReasoningKind::arithmetic)->accuracy, 0.5);
  EXPECT_GT(*r.row("sunny", ReasoningKind::arithmetic)->accuracy, *r.row("sunny", ReasoningKind::common_sense)->accuracy);
  EXPECT_GT(*r.mean_accuracy(ReasoningKind::hybrid), 0.65);
  for (const char* w : {"sunny", "partly_sunny", "rainy"}) {
    const double h = *r.row(w, ReasoningKind::hybrid)->accuracy;
    EXPECT_GT(h, *r.row(w, ReasoningKind::common_sense)->accuracy) << w;
    EXPECT_GT(h, *r.row(w, ReasoningKind::arithmetic)->accuracy) << w;
    EXPECT_GT(r.row(w, ReasoningKind::hybrid)->total, r.row(w, ReasoningKind::arithmetic)->total) << w;
  }
}

TEST(Annotations, LoaderReportsBadFiles) {
  const fs::path dir = fs::temp_directory_path() / "llmdrive_ann";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "good.json") << R"({"scenario_id": "x", "sample_index": 0, "total_answers": 3, "wrong_answers": 1})";
  std::ofstream(dir / "bad.json") << "{";
  std::ofstream(dir / "worse.json") << R"({"scenario_id": "x", "sample_index": 1, "total_answers": 1, "wrong_answers": 2})";
  const auto set = load_annotations(dir);
  EXPECT_EQ(set.records.size(), 1u);
  EXPECT_EQ(set.errors.size(), 2u);
  EXPECT_THROW(load_annotations(dir / "nope"), IoError);
  fs::remove_all(dir);
}

TEST(ReportProperty, PermutationInvariant) {
  std::mt19937_64 rng(21);
  const char* weathers[] = {"sunny", "partly_sunny", "rainy"};
  for (int i = 0; i < 1000; ++i) {
    std::vector<GradeRecord> records;
    const int n = 1 + static_cast<int>(rng() % 30);
    for (int k = 0; k < n; ++k) {
      const int total = static_cast<int>(rng() % 40);
      const int wrong = total == 0 ? 0 : static_cast<int>(rng() % static_cast<unsigned>(total + 1));
      const auto p = rng() % 4 == 0 ? Provenance::annotated : Provenance::machine;
      GradeRecord r = rec("s" + std::to_string(rng() % 6), static_cast<int>(rng() % 3), weathers[rng() % 3],
                          static_cast<ReasoningKind>(rng() % 3), total, wrong, p);
      if (rng() % 5 == 0) r.flags = {"collision"};
      records.push_back(r);
    }
    const auto base = aggregate(records);
    std::shuffle(records.begin(), records.end(), rng);
    const auto shuffled = aggregate(records);
    EXPECT_EQ(to_json(base), to_json(shuffled));
    EXPECT_EQ(csv_of(base), csv_of(shuffled));
  }
}
