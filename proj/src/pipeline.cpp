#include "llmdrive/pipeline.hpp"

#include <fstream>
#include <set>

#include "llmdrive/error.hpp"
#include "llmdrive/format.hpp"
#include "llmdrive/prompt.hpp"
#include "llmdrive/trace.hpp"

#ifndef LLMDRIVE_VERSION
#define LLMDRIVE_VERSION "unknown"
#endif

namespace llmdrive {

namespace fs = std::filesystem;

std::string_view to_string(ScenarioSource s) noexcept {
  switch (s) {
    case ScenarioSource::builtin: return "builtin";
    case ScenarioSource::file: return "file";
    case ScenarioSource::trace: return "trace";
  }
  return "builtin";
}

void RunConfig::validate() const {
  if (source != ScenarioSource::builtin && source_path.empty()) {
    throw ValidationError("scenario source '" + std::string(to_string(source)) + "' needs a path");
  }
  if (backend == BackendKind::replay && replay_dir.empty()) throw ValidationError("replay backend needs a directory");
  if (out_dir.empty()) throw ValidationError("output directory is empty");
  if (!(pedestrian_distance_m >= 0.0)) throw ValidationError("pedestrian distance must be >= 0");
  if (min_accuracy && !(*min_accuracy >= 0.0 && *min_accuracy <= 1.0)) {
    throw ValidationError("min-accuracy must be in [0, 1]");
  }
  gateway.validate();
  grading.validate();
}

nlohmann::json to_json(const RunConfig& c) {
  const auto& g = c.gateway;
  const auto& o = c.grading;
  nlohmann::json j;
  j["scenario_source"] = to_string(c.source);
  j["scenario_path"] = c.source_path.generic_string();
  j["backend"] = to_string(c.backend);
  j["replay_dir"] = c.replay_dir.generic_string();
  j["seed"] = c.seed;
  j["template_dir"] = c.template_dir ? nlohmann::json(c.template_dir->generic_string()) : nlohmann::json(nullptr);
  j["annotations_dir"] =
      c.annotations_dir ? nlohmann::json(c.annotations_dir->generic_string()) : nlohmann::json(nullptr);
  j["pedestrian_distance_m"] = c.pedestrian_distance_m;
  j["min_accuracy"] = c.min_accuracy ? nlohmann::json(*c.min_accuracy) : nlohmann::json(nullptr);
  // The key itself is never recorded, only the variable it is read from.
  j["gateway"] = {{"base_url", g.base_url},
                  {"model_name", g.model_name},
                  {"api_key_env_var", g.api_key_env_var},
                  {"temperature", g.temperature},
                  {"timeout_s", g.timeout_s},
                  {"max_retries", g.max_retries},
                  {"samples_per_scenario", g.samples_per_scenario},
                  {"parallelism_limit", g.parallelism_limit}};
  j["grading"] = {{"tolerance", o.tolerance},
                  {"include_unverifiable", o.include_unverifiable},
                  {"max_decel_at_full_brake", o.brake.max_decel_at_full_brake},
                  {"headway_s", {{"sunny", o.headway.sunny_s},
                                 {"partly_sunny", o.headway.partly_sunny_s},
                                 {"rainy", o.headway.rainy_s}}},
                  {"dt_s", o.sim.dt_s},
                  {"first_only", o.sim.first_only},
                  {"linear_drag_per_s", o.sim.model.linear_drag_per_s},
                  {"speed_tolerance_kmh", o.speed_tolerance_kmh}};
  return j;
}

std::vector<Scenario> load_scenarios(const RunConfig& c) {
  std::vector<Scenario> out;
  switch (c.source) {
    case ScenarioSource::builtin:
      out = nine_builtin_scenarios(c.pedestrian_distance_m);
      break;
    case ScenarioSource::file:
      out = load_scenario_file(c.source_path);
      break;
    case ScenarioSource::trace: {
      std::ifstream in(c.source_path, std::ios::binary);
      if (!in) throw IoError("cannot open trace " + c.source_path.string());
      TraceIngest ing = ingest_trace(in);
      if (!ing.ok()) {
        const auto& e = ing.errors.front();
        throw ParseError(c.source_path.string() + ":" + std::to_string(e.line) + ": " + e.message +
                             (ing.errors.size() > 1 ? " (+" + std::to_string(ing.errors.size() - 1) + " more)" : ""),
                         e.line);
      }
      out = std::move(ing.scenarios);
      break;
    }
  }
  validate_suite(out);
  return out;
}

std::vector<std::string> rows_below(const GradeReport& r, double min_accuracy) {
  std::vector<std::string> out;
  for (const auto& row : r.rows) {
    if (row.accuracy && *row.accuracy < min_accuracy) {
      out.push_back(row.weather + "/" + std::string(to_string(row.reasoning_kind)));
    }
  }
  return out;
}

GradeRun grade_all(const std::vector<Transcript>& transcripts, const std::vector<Scenario>& scenarios,
                   const GradeOptions& opts, const std::vector<AnnotationFile>& annotations, int samples_per_scenario,
                   std::uint64_t seed) {
  GradeRun run;
  std::vector<GradeRecord> records;
  std::set<std::string> seen;
  for (const auto& t : transcripts) {
    const Scenario* s = find_scenario(scenarios, t.scenario_id);
    if (s == nullptr) {
      run.unmatched.push_back(t.scenario_id + "#" + std::to_string(t.sample_index));
      continue;
    }
    if (t.error) continue;  // failed exchange, nothing to grade
    run.graded.push_back(grade_transcript(t, *s, opts));
    records.push_back(record_of(run.graded.back()));
    seen.insert(t.scenario_id);
  }
  for (const auto& a : annotations) records.push_back(record_of(a, scenarios));
  run.report = aggregate(records);
  run.report.tolerance = opts.tolerance;
  for (const auto& id : seen) run.report.reporting_samples[id] = reporting_sample_index(id, samples_per_scenario, seed);
  return run;
}

void store_graded(const std::vector<GradedTranscript>& graded, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& g : graded) {
    const fs::path p = dir / (g.scenario_id + "_" + std::to_string(g.sample_index) + ".json");
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << to_json(g).dump(2) << '\n';
    if (!out) throw IoError("write failed: " + p.string());
  }
}

std::vector<GradeRecord> load_graded_records(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<GradeRecord> out;
  for (const auto& p : files) {
    std::ifstream in(p, std::ios::binary);
    try {
      const auto j = nlohmann::json::parse(in);
      GradeRecord r;
      r.scenario_id = j.at("scenario_id").get<std::string>();
      r.sample_index = j.at("sample_index").get<int>();
      r.weather = j.at("weather").get<std::string>();
      const auto k = parse_reasoning_kind(j.at("reasoning_kind").get<std::string>());
      if (!k) throw ParseError(p.string() + ": unknown reasoning_kind");
      r.reasoning_kind = *k;
      r.total = j.at("total").get<int>();
      r.wrong = j.at("wrong").get<int>();
      for (const auto& f : j.at("safety_flags")) r.flags.push_back(f.get<std::string>());
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(p.string() + ": " + e.what());
    }
  }
  return out;
}

nlohmann::json build_info() {
  return {{"llmdrive", LLMDRIVE_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler",
#if defined(__clang__)
           "clang " __clang_version__
#elif defined(__GNUC__)
           "gcc " __VERSION__
#else
           "unknown"
#endif
          },
          {"transcript_schema", kTranscriptSchemaVersion}};
}

namespace {

std::unique_ptr<ChatBackend> backend_for(const RunConfig& cfg, const std::vector<Scenario>& scenarios) {
  switch (cfg.backend) {
    case BackendKind::live: return make_http_backend(cfg.gateway);
    case BackendKind::mock: return make_mock_backend(scenarios, cfg.seed);
    case BackendKind::replay: {
      TranscriptSet set = load_transcripts(cfg.replay_dir);
      if (!set.errors.empty()) {
        throw ParseError(set.errors.front().path.string() + ": " + set.errors.front().message);
      }
      return make_replay_backend(set);
    }
  }
  throw ValidationError("unknown backend");
}

}  // namespace

RunResult run_pipeline(const RunConfig& cfg, std::unique_ptr<ChatBackend> backend, Gateway::Sleeper sleeper) {
  cfg.validate();
  RunResult res;
  res.scenarios = load_scenarios(cfg);

  const PromptEngine engine = cfg.template_dir ? PromptEngine::from_directory(*cfg.template_dir) : PromptEngine();
  std::vector<RenderedPrompt> prompts;
  for (const auto& s : res.scenarios) {
    if (!eligible(s)) {
      res.skipped.push_back(s.id);
      continue;
    }
    prompts.push_back(engine.render(s));
  }

  std::vector<AnnotationFile> annotations;
  if (cfg.annotations_dir) {
    AnnotationSet set = load_annotations(*cfg.annotations_dir);
    if (!set.errors.empty()) throw ParseError(set.errors.front().first.string() + ": " + set.errors.front().second);
    annotations = std::move(set.records);
  }

  if (!backend) backend = backend_for(cfg, res.scenarios);
  Gateway gateway(cfg.gateway, std::move(backend), std::move(sleeper));
  for (auto& set : gateway.sample_all(prompts)) {
    for (auto& t : set.transcripts) res.transcripts.push_back(std::move(t));
    for (auto& e : set.errors) res.gateway_errors.push_back(std::move(e));
  }

  const fs::path out = cfg.out_dir;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  store_transcripts(res.transcripts, out / "transcripts");

  GradeRun graded = grade_all(res.transcripts, res.scenarios, cfg.grading, annotations,
                              cfg.gateway.samples_per_scenario, cfg.seed);
  res.graded = std::move(graded.graded);
  res.report = std::move(graded.report);
  store_graded(res.graded, out / "graded");
  emit_report(res.report, out);
  if (cfg.min_accuracy) res.below_threshold = rows_below(res.report, *cfg.min_accuracy);

  nlohmann::json manifest;
  manifest["config"] = to_json(cfg);
  manifest["versions"] = build_info();
  manifest["scenarios"] = nlohmann::json::array();
  for (const auto& s : res.scenarios) manifest["scenarios"].push_back(s.id);
  manifest["skipped_ineligible"] = res.skipped;
  manifest["transcripts"] = res.transcripts.size();
  manifest["gateway_errors"] = nlohmann::json::array();
  for (const auto& e : res.gateway_errors) {
    manifest["gateway_errors"].push_back(
        {{"scenario_id", e.scenario_id()}, {"kind", to_string(e.kind())}, {"message", e.what()}});
  }
  manifest["below_threshold"] = res.below_threshold;
  std::ofstream mf(out / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!mf) throw IoError("cannot write " + (out / "manifest.json").string());
  mf << manifest.dump(2) << '\n';
  return res;
}

}  // namespace llmdrive
