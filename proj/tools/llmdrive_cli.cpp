// llmdrive: scenarios -> prompts -> model -> parsed schedule -> simulator -> report.
//
// Exit codes: 0 success, 1 accuracy below --min-accuracy, 2 operational error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "llmdrive/error.hpp"
#include "llmdrive/format.hpp"
#include "llmdrive/pipeline.hpp"
#include "llmdrive/prompt.hpp"
#include "llmdrive/trace.hpp"
#include "llmdrive/vehicle_sim.hpp"

namespace fs = std::filesystem;
using namespace llmdrive;

namespace {

constexpr int kOk = 0;
constexpr int kThreshold = 1;
constexpr int kOperational = 2;

// --builtin / --scenarios builtin|FILE / --trace FILE, shared by every command.
struct SourceOpts {
  bool builtin = false;
  std::string scenarios;
  std::string trace;
  double pedestrian_distance_m = 20.0;

  void add(CLI::App* app) {
    auto* b = app->add_flag("--builtin", builtin, "Use the nine built-in scenarios");
    auto* s = app->add_option("--scenarios", scenarios, "Scenario source: 'builtin' or a scenario JSON file");
    auto* t = app->add_option("--trace", trace, "JSONL trace to ingest as scenarios")->check(CLI::ExistingFile);
    b->excludes(s)->excludes(t);
    s->excludes(t);
    app->add_option("--pedestrian-distance", pedestrian_distance_m,
                    "Distance of the pedestrian in the built-in hybrid-rainy scenario (m)")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
  }

  void apply(RunConfig& c) const {
    c.pedestrian_distance_m = pedestrian_distance_m;
    if (!trace.empty()) {
      c.source = ScenarioSource::trace;
      c.source_path = trace;
    } else if (!scenarios.empty() && scenarios != "builtin") {
      c.source = ScenarioSource::file;
      c.source_path = scenarios;
    } else {
      c.source = ScenarioSource::builtin;
    }
  }

  std::vector<Scenario> load() const {
    RunConfig c;
    apply(c);
    return load_scenarios(c);
  }
};

// Grading knobs shared by run, replay, grade and simulate.
void add_grading_options(CLI::App* app, GradeOptions& g) {
  app->add_option("--tolerance", g.tolerance, "Relative tolerance for numeric claims")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app->add_flag("--include-unverifiable", g.include_unverifiable, "Count unverifiable claims in totals");
  app->add_option("--dt", g.sim.dt_s, "Simulator step (s); must divide one second")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_flag("--first-only", g.sim.first_only, "Apply only the first brake entry");
  app->add_option("--max-decel", g.brake.max_decel_at_full_brake, "Deceleration at full brake (m/s^2)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--speed-tolerance", g.speed_tolerance_kmh, "Speed-limit tolerance for safety flags (km/h)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
}

void add_gateway_options(CLI::App* app, GatewayConfig& g) {
  app->add_option("--samples", g.samples_per_scenario, "Replies sampled per scenario")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--parallel", g.parallelism_limit, "Maximum requests in flight")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--base-url", g.base_url, "Chat-completions endpoint base URL")->capture_default_str();
  app->add_option("--model", g.model_name, "Model name sent to the endpoint")->capture_default_str();
  app->add_option("--api-key-env", g.api_key_env_var, "Environment variable holding the API key")
      ->capture_default_str();
  app->add_option("--temperature", g.temperature, "Sampling temperature")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app->add_option("--timeout", g.timeout_s, "Per-request timeout (s)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--max-retries", g.max_retries, "Retries on transient failures")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app->add_option("--system-prompt", g.system_prompt, "System message")->capture_default_str();
}

const Scenario& require_scenario(const std::vector<Scenario>& set, const std::string& id) {
  const Scenario* s = find_scenario(set, id);
  if (s == nullptr) throw ValidationError("unknown scenario id '" + id + "'");
  return *s;
}

void print_rows(const GradeReport& r) {
  write_csv(r, std::cout);
  for (auto k : {ReasoningKind::common_sense, ReasoningKind::arithmetic, ReasoningKind::hybrid}) {
    if (auto m = r.mean_accuracy(k)) std::cout << "# mean " << to_string(k) << " " << format_fixed(*m, 4) << "\n";
  }
}

void print_problems(const std::vector<GradedTranscript>& graded) {
  for (const auto& g : graded) {
    for (const auto& v : g.verdicts) {
      if (v.status != VerdictStatus::incorrect) continue;
      std::cout << g.scenario_id << "#" << g.sample_index << " " << v.claim_ref << " "
                << parse::to_string(v.kind) << ": claimed " << format_shortest(v.claimed.value) << " "
                << unit_name(v.claimed.unit);
      if (v.oracle_value) {
        std::cout << ", oracle " << format_fixed(v.oracle_value->value, 6) << " " << unit_name(v.oracle_value->unit);
      }
      if (v.relative_error) std::cout << ", rel.err " << format_fixed(*v.relative_error * 100.0, 2) << "%";
      if (!v.reason.empty()) std::cout << " (" << v.reason << ")";
      std::cout << "\n";
    }
    for (const auto& d : g.defects) std::cout << g.scenario_id << "#" << g.sample_index << " defect: " << d << "\n";
    for (auto f : g.safety_flags) {
      std::cout << g.scenario_id << "#" << g.sample_index << " safety: " << sim::to_string(f) << "\n";
    }
  }
}

int finish_run(const RunResult& res, const RunConfig& cfg) {
  for (const auto& id : res.skipped) std::cerr << "skipped ineligible scenario " << id << "\n";
  for (const auto& e : res.gateway_errors) std::cerr << "gateway: " << e.what() << "\n";
  print_rows(res.report);
  std::cerr << res.transcripts.size() << " transcripts, " << res.graded.size() << " graded, output in "
            << cfg.out_dir.string() << "\n";
  if (res.threshold_failed()) {
    for (const auto& row : res.below_threshold) std::cerr << "below min accuracy: " << row << "\n";
    return kThreshold;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LLM driving-advice harness: render prompts, sample a model, grade replies, simulate schedules"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option values; flags override it");
  app.set_version_flag("--version", std::string(build_info()["llmdrive"]));

  // scenario list|show|export
  auto* scenario_cmd = app.add_subcommand("scenario", "Inspect and export scenarios");
  scenario_cmd->require_subcommand(1);
  SourceOpts sc_src;
  auto* sc_list = scenario_cmd->add_subcommand("list", "One line per scenario");
  sc_src.add(sc_list);
  SourceOpts sc_show_src;
  std::string sc_show_id;
  auto* sc_show = scenario_cmd->add_subcommand("show", "Print one scenario as JSON");
  sc_show_src.add(sc_show);
  sc_show->add_option("id", sc_show_id, "Scenario id")->required();
  SourceOpts sc_exp_src;
  std::string sc_exp_out = "-";
  std::string sc_exp_format = "json";
  auto* sc_export = scenario_cmd->add_subcommand("export", "Write scenarios as a scenario file or a JSONL trace");
  sc_exp_src.add(sc_export);
  sc_export->add_option("--out", sc_exp_out, "Output file, '-' for stdout")->capture_default_str();
  sc_export->add_option("--format", sc_exp_format, "json or trace")
      ->capture_default_str()
      ->check(CLI::IsMember({"json", "trace"}));

  // prompt render
  auto* prompt_cmd = app.add_subcommand("prompt", "Prompt rendering");
  prompt_cmd->require_subcommand(1);
  SourceOpts pr_src;
  std::string pr_id;
  std::string pr_templates;
  auto* pr_render = prompt_cmd->add_subcommand("render", "Print the prompt for a scenario");
  pr_src.add(pr_render);
  pr_render->add_option("--scenario", pr_id, "Scenario id")->required();
  pr_render->add_option("--template-dir", pr_templates, "Directory with {common_sense,arithmetic,hybrid}.txt")
      ->check(CLI::ExistingDirectory);

  // run
  RunConfig run_cfg;
  SourceOpts run_src;
  bool run_mock = false;
  bool run_live = false;
  std::string run_replay;
  std::string run_templates;
  std::string run_annotations;
  std::string run_out = "out";
  double run_min_acc = -1.0;
  auto* run_cmd = app.add_subcommand("run", "Full pipeline: prompts, samples, grading, report");
  run_src.add(run_cmd);
  {
    auto* m = run_cmd->add_flag("--mock", run_mock, "Deterministic mock model");
    auto* l = run_cmd->add_flag("--live", run_live, "Live chat-completions endpoint (key from --api-key-env)");
    auto* r = run_cmd->add_option("--replay", run_replay, "Serve replies from stored transcripts")
                  ->check(CLI::ExistingDirectory);
    m->excludes(l)->excludes(r);
    l->excludes(r);
  }
  run_cmd->add_option("--seed", run_cfg.seed, "Run seed (mock replies, reporting sample)")->capture_default_str();
  run_cmd->add_option("--out", run_out, "Output directory")->capture_default_str();
  run_cmd->add_option("--template-dir", run_templates, "Prompt template overrides")->check(CLI::ExistingDirectory);
  run_cmd->add_option("--annotations", run_annotations, "Annotation files; they replace machine grades per sample")
      ->check(CLI::ExistingDirectory);
  run_cmd->add_option("--min-accuracy", run_min_acc, "Exit 1 when any row falls below this accuracy")
      ->check(CLI::Range(0.0, 1.0));
  add_gateway_options(run_cmd, run_cfg.gateway);
  add_grading_options(run_cmd, run_cfg.grading);

  // replay: run through stored transcripts
  RunConfig rp_cfg;
  SourceOpts rp_src;
  std::string rp_dir;
  std::string rp_out = "out";
  std::string rp_annotations;
  double rp_min_acc = -1.0;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run the pipeline on stored transcripts");
  rp_src.add(replay_cmd);
  replay_cmd->add_option("--transcripts", rp_dir, "Transcript directory")->required()->check(CLI::ExistingDirectory);
  replay_cmd->add_option("--seed", rp_cfg.seed, "Run seed (reporting sample)")->capture_default_str();
  replay_cmd->add_option("--out", rp_out, "Output directory")->capture_default_str();
  replay_cmd->add_option("--annotations", rp_annotations, "Annotation files")->check(CLI::ExistingDirectory);
  replay_cmd->add_option("--min-accuracy", rp_min_acc, "Exit 1 when any row falls below this accuracy")
      ->check(CLI::Range(0.0, 1.0));
  replay_cmd->add_option("--samples", rp_cfg.gateway.samples_per_scenario, "Replies per scenario")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  add_grading_options(replay_cmd, rp_cfg.grading);

  // grade: transcripts already on disk, no gateway involved
  GradeOptions gr_opts;
  SourceOpts gr_src;
  std::string gr_dir;
  std::string gr_annotations;
  std::string gr_out;
  std::uint64_t gr_seed = 0;
  int gr_samples = 5;
  double gr_min_acc = -1.0;
  auto* grade_cmd = app.add_subcommand("grade", "Grade stored transcripts against their scenarios");
  gr_src.add(grade_cmd);
  grade_cmd->add_option("--transcripts", gr_dir, "Transcript directory")->required()->check(CLI::ExistingDirectory);
  grade_cmd->add_option("--annotations", gr_annotations, "Annotation files")->check(CLI::ExistingDirectory);
  grade_cmd->add_option("--out", gr_out, "Write graded/ and the report files here");
  grade_cmd->add_option("--seed", gr_seed, "Seed for the reporting sample")->capture_default_str();
  grade_cmd->add_option("--samples", gr_samples, "Samples per scenario (reporting sample range)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  grade_cmd->add_option("--min-accuracy", gr_min_acc, "Exit 1 when any row falls below this accuracy")
      ->check(CLI::Range(0.0, 1.0));
  add_grading_options(grade_cmd, gr_opts);

  // simulate
  SourceOpts sim_src;
  std::string sim_id;
  std::vector<double> sim_brakes;
  std::string sim_csv;
  GradeOptions sim_opts;
  auto* sim_cmd = app.add_subcommand("simulate", "Replay a brake schedule in the longitudinal simulator");
  sim_src.add(sim_cmd);
  sim_cmd->add_option("--scenario", sim_id, "Scenario id")->required();
  sim_cmd->add_option("--brake", sim_brakes, "Brake entries, one per second (comma separated)")
      ->delimiter(',')
      ->required();
  sim_cmd->add_option("--csv", sim_csv, "Write the trajectory as CSV ('-' for stdout)");
  add_grading_options(sim_cmd, sim_opts);

  // report
  SourceOpts rep_src;
  std::string rep_graded;
  std::string rep_annotations;
  std::string rep_out = "report";
  double rep_tolerance = 0.01;
  auto* report_cmd = app.add_subcommand("report", "Aggregate graded records and/or annotations");
  rep_src.add(report_cmd);
  report_cmd->add_option("--graded", rep_graded, "graded/ directory from a run")->check(CLI::ExistingDirectory);
  report_cmd->add_option("--annotations", rep_annotations, "Annotation files")->check(CLI::ExistingDirectory);
  report_cmd->add_option("--out", rep_out, "Output directory")->capture_default_str();
  report_cmd->add_option("--tolerance", rep_tolerance, "Tolerance recorded in report.json")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kOperational;
  }

  try {
    if (sc_list->parsed()) {
      for (const auto& s : sc_src.load()) {
        const Detection& d = s.primary();
        std::cout << s.id << "\t" << to_string(s.reasoning_kind) << "\t" << s.weather.name << "\t"
                  << format_shortest(s.ego.speed_kmh) << " km/h\t" << d.label() << " " << format_shortest(d.distance_m)
                  << " m " << to_string(d.location) << (s.synthetic ? "\tsynthetic" : "")
                  << (eligible(s) ? "" : "\tineligible") << "\n";
      }
      return kOk;
    }
    if (sc_show->parsed()) {
      std::cout << to_json(require_scenario(sc_show_src.load(), sc_show_id)).dump(2) << "\n";
      return kOk;
    }
    if (sc_export->parsed()) {
      const auto set = sc_exp_src.load();
      if (sc_exp_format == "json" && sc_exp_out != "-") {
        save_scenario_file(set, sc_exp_out);
        return kOk;
      }
      std::ostringstream buf;
      if (sc_exp_format == "trace") {
        export_trace(set, buf);
      } else {
        nlohmann::json j{{"schema_version", 1}, {"scenarios", nlohmann::json::array()}};
        for (const auto& s : set) j["scenarios"].push_back(to_json(s));
        buf << j.dump(2) << "\n";
      }
      if (sc_exp_out == "-") {
        std::cout << buf.str();
      } else {
        std::ofstream out(sc_exp_out, std::ios::binary | std::ios::trunc);
        if (!(out << buf.str())) throw IoError("cannot write " + sc_exp_out);
      }
      return kOk;
    }
    if (pr_render->parsed()) {
      const auto set = pr_src.load();
      const PromptEngine engine = pr_templates.empty() ? PromptEngine() : PromptEngine::from_directory(pr_templates);
      std::cout << engine.render(require_scenario(set, pr_id)).text;
      return kOk;
    }
    if (run_cmd->parsed()) {
      run_src.apply(run_cfg);
      if (run_live) {
        run_cfg.backend = BackendKind::live;
      } else if (!run_replay.empty()) {
        run_cfg.backend = BackendKind::replay;
        run_cfg.replay_dir = run_replay;
      } else {
        run_cfg.backend = BackendKind::mock;
      }
      run_cfg.out_dir = run_out;
      if (!run_templates.empty()) run_cfg.template_dir = run_templates;
      if (!run_annotations.empty()) run_cfg.annotations_dir = run_annotations;
      if (run_min_acc >= 0.0) run_cfg.min_accuracy = run_min_acc;
      return finish_run(run_pipeline(run_cfg), run_cfg);
    }
    if (replay_cmd->parsed()) {
      rp_src.apply(rp_cfg);
      rp_cfg.backend = BackendKind::replay;
      rp_cfg.replay_dir = rp_dir;
      rp_cfg.out_dir = rp_out;
      if (!rp_annotations.empty()) rp_cfg.annotations_dir = rp_annotations;
      if (rp_min_acc >= 0.0) rp_cfg.min_accuracy = rp_min_acc;
      return finish_run(run_pipeline(rp_cfg), rp_cfg);
    }
    if (grade_cmd->parsed()) {
      gr_opts.validate();
      const auto scenarios = gr_src.load();
      const TranscriptSet ts = load_transcripts(gr_dir);
      for (const auto& e : ts.errors) std::cerr << "skipped " << e.path.string() << ": " << e.message << "\n";
      std::vector<AnnotationFile> annotations;
      if (!gr_annotations.empty()) {
        AnnotationSet set = load_annotations(gr_annotations);
        for (const auto& [p, msg] : set.errors) std::cerr << "skipped " << p.string() << ": " << msg << "\n";
        annotations = std::move(set.records);
      }
      GradeRun run = grade_all(ts.records, scenarios, gr_opts, annotations, gr_samples, gr_seed);
      for (const auto& u : run.unmatched) std::cerr << "no scenario for transcript " << u << "\n";
      print_problems(run.graded);
      print_rows(run.report);
      if (!gr_out.empty()) {
        store_graded(run.graded, fs::path(gr_out) / "graded");
        emit_report(run.report, gr_out);
      }
      if (gr_min_acc >= 0.0 && !rows_below(run.report, gr_min_acc).empty()) return kThreshold;
      return kOk;
    }
    if (sim_cmd->parsed()) {
      sim_opts.validate();
      const auto set = sim_src.load();
      const Scenario& s = require_scenario(set, sim_id);
      sim::SimOptions so = sim_opts.sim;
      so.model.brake = sim_opts.brake;
      const sim::Trajectory traj = sim::run_brake_schedule(s, sim_brakes, so);
      sim::SafetyOptions safety;
      safety.brake = sim_opts.brake;
      safety.speed_tolerance_kmh = sim_opts.speed_tolerance_kmh;
      const auto flags = sim::check_safety(traj, s, safety);
      std::cout << "outcome " << sim::to_string(traj.outcome) << "\n";
      if (traj.collided_at_s) std::cout << "collided_at_s " << format_fixed(*traj.collided_at_s, 4) << "\n";
      std::cout << "final_speed_kmh " << format_fixed(traj.final_speed_ms() * 3.6, 4) << "\n";
      for (auto f : flags) std::cout << "flag " << sim::to_string(f) << "\n";
      if (sim_csv == "-") {
        sim::write_trajectory_csv(traj, std::cout);
      } else if (!sim_csv.empty()) {
        std::ofstream out(sim_csv, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + sim_csv);
        sim::write_trajectory_csv(traj, out);
      }
      return kOk;
    }
    if (report_cmd->parsed()) {
      if (rep_graded.empty() && rep_annotations.empty()) {
        throw ValidationError("report needs --graded and/or --annotations");
      }
      std::vector<GradeRecord> records;
      if (!rep_graded.empty()) records = load_graded_records(rep_graded);
      if (!rep_annotations.empty()) {
        const auto scenarios = rep_src.load();
        AnnotationSet set = load_annotations(rep_annotations);
        for (const auto& [p, msg] : set.errors) std::cerr << "skipped " << p.string() << ": " << msg << "\n";
        for (const auto& a : set.records) records.push_back(record_of(a, scenarios));
      }
      GradeReport r = aggregate(records);
      r.tolerance = rep_tolerance;
      emit_report(r, rep_out);
      print_rows(r);
      return kOk;
    }
  } catch (const GatewayError& e) {
    std::cerr << "error: gateway (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return kOperational;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOperational;
  }
  return kOk;
}
