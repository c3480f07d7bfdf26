// Acceptance checks 1-7. One PASS/FAIL line each; exit status 1 if any fail.
// Usage: llmdrive_acceptance [path/to/llmdrive] [source dir]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "llmdrive/embedded.hpp"
#include "llmdrive/error.hpp"
#include "llmdrive/grader.hpp"
#include "llmdrive/kinematics.hpp"
#include "llmdrive/parser.hpp"
#include "llmdrive/pipeline.hpp"
#include "llmdrive/report.hpp"
#include "llmdrive/vehicle_sim.hpp"

using namespace llmdrive;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Collects failed expectations for one criterion.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    if (!(std::fabs(got - want) <= tol)) {
      std::ostringstream s;
      s.precision(10);
      s << what << ": got " << got << ", want " << want << " +- " << tol;
      failures.push_back(s.str());
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string answer(const std::string& id) { return std::string(*embedded::find("fixtures/recorded/answers/" + id + ".txt")); }

const Scenario& builtin(const std::string& id) {
  static const auto set = nine_builtin_scenarios();
  return *find_scenario(set, id);
}

GradedTranscript grade_fixture(const std::string& id) {
  Transcript t;
  t.scenario_id = id;
  t.response_text = answer(id);
  t.backend = BackendKind::replay;
  return grade_transcript(t, builtin(id));
}

const Verdict* find_verdict(const GradedTranscript& g, const std::function<bool(const Verdict&)>& pred) {
  auto it = std::find_if(g.verdicts.begin(), g.verdicts.end(), pred);
  return it == g.verdicts.end() ? nullptr : &*it;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void oracle_fidelity(Check& c) {
  const auto t0 = Clock::now();
  c.near(kinematics::kmh_to_ms(40.0), 11.1111, 1e-3, "kmh_to_ms(40)");
  c.near(kinematics::required_decel(12.5556, 11.1111, 5.0), -0.288900, 1e-5, "required_decel(12.5556, 11.1111, 5)");
  c.expect(kinematics::decel_from_brake(0.2889) == 0.2889, "decel_from_brake(0.2889) is exact");
  c.expect(seconds_since(t0) < 1.0, "runtime under 1 s");
}

void parser_fidelity(Check& c) {
  using namespace parse;
  auto spans_ok = [&](const std::string& id) {
    const std::string text = answer(id);
    for (const auto& cl : extract_claims(text).claims) {
      const bool ok = cl.source_span.begin <= cl.source_span.end && cl.source_span.end <= text.size() &&
                      cl.source_span.slice(text).find(cl.claimed_text) != std::string_view::npos;
      c.expect(ok, id + ": span of claim '" + cl.claimed_text + "'");
    }
  };
  for (const char* id : {"common-sense-rainy", "arithmetic-rainy", "hybrid-rainy"}) spans_ok(id);

  c.expect(extract_advisories(answer("common-sense-rainy")).size() == 8, "common-sense fixture has 8 advisories");

  auto has = [](const std::vector<NumericClaim>& cs, ClaimKind k, double v, Unit u) {
    return std::any_of(cs.begin(), cs.end(),
                       [&](const NumericClaim& x) { return x.kind == k && x.claimed.value == v && x.claimed.unit == u; });
  };
  const auto ar = extract_claims(answer("arithmetic-rainy")).claims;
  c.expect(has(ar, ClaimKind::conversion, 11.1111, Unit::ms), "arithmetic: 40 km/h -> 11.1111 m/s");
  c.expect(has(ar, ClaimKind::conversion, 12.5694, Unit::ms), "arithmetic: current speed -> 12.5694 m/s");
  c.expect(has(ar, ClaimKind::speed_at_time, 8.1945, Unit::ms), "arithmetic: t=2 speed 8.1945 m/s");
  const auto hy = extract_claims(answer("hybrid-rainy")).claims;
  c.expect(has(hy, ClaimKind::conversion, 11.1111, Unit::ms), "hybrid: 40 km/h -> 11.1111 m/s");
  c.expect(has(hy, ClaimKind::conversion, 12.5556, Unit::ms), "hybrid: current speed -> 12.5556 m/s");
  c.expect(has(hy, ClaimKind::deceleration, -0.28889999999999993, Unit::ms2), "hybrid: deceleration -0.28890 m/s^2");

  const auto sched = extract_control_lists(answer("hybrid-rainy"));
  c.expect(sched.has_value(), "hybrid: control lists found");
  if (sched) {
    c.expect(sched->brake_entries() == std::vector<double>(5, 0.2889), "BRAKE list is [0.2889] x 5");
    c.expect(sched->speed_entries().size() == 4, "SPEED list has 4 entries");
    c.expect(sched->speed && sched->speed->truncated, "SPEED list is truncated");
  }
}

void erratum_detection(Check& c) {
  const auto ar = grade_fixture("arithmetic-rainy");
  const Verdict* t2 = find_verdict(ar, [](const Verdict& v) {
    return v.kind == parse::ClaimKind::speed_at_time && v.claimed.value == 8.1945;
  });
  c.expect(t2 && t2->status == VerdictStatus::incorrect, "arithmetic t=2 speed 8.1945 flagged incorrect");
  if (t2 && t2->oracle_value) c.near(t2->oracle_value->value, 10.5694, 1e-3, "arithmetic t=2 oracle");

  const auto hy = grade_fixture("hybrid-rainy");
  const Verdict* s0 = find_verdict(hy, [](const Verdict& v) { return v.claim_ref == "SPEED_LIST[0]"; });
  c.expect(s0 && s0->claimed.value == 44.9388, "hybrid SPEED_LIST[0] is 44.9388");
  c.expect(s0 && s0->status == VerdictStatus::incorrect, "hybrid SPEED_LIST[0] flagged incorrect");
  if (s0 && s0->oracle_value) c.near(s0->oracle_value->value, 44.18767, 1e-4, "SPEED_LIST[0] oracle");
  if (s0 && s0->relative_error) {
    c.near(*s0->relative_error, 0.017, 0.0005, "SPEED_LIST[0] relative error");
    c.expect(*s0->relative_error > 0.01, "SPEED_LIST[0] error exceeds 1% tolerance");
  }
  const Verdict* d = find_verdict(hy, [](const Verdict& v) {
    return v.kind == parse::ClaimKind::deceleration && v.claimed.value == -0.28889999999999993;
  });
  c.expect(d && d->status == VerdictStatus::correct, "hybrid -0.28890 deceleration accepted at 1%");
}

void closed_loop(Check& c) {
  const auto t0 = Clock::now();
  const std::vector<double> brakes(5, 0.2889);
  Scenario open = *find_scenario(nine_builtin_scenarios(1e6), "hybrid-rainy");
  c.expect(open.ego.speed_kmh == 45.22770823152422, "hybrid scenario speed");
  const auto free = sim::run_brake_schedule(open, brakes);
  c.near(free.final_speed_ms() * 3.6, 40.03, 0.5, "final speed after BRAKE list (km/h)");

  const Scenario near = *find_scenario(nine_builtin_scenarios(20.0), "hybrid-rainy");
  const auto hit = sim::run_brake_schedule(near, brakes);
  c.expect(hit.outcome == sim::Outcome::collided, "pedestrian at 20 m: outcome collided");
  const auto flags = sim::check_safety(hit, near);
  c.expect(std::find(flags.begin(), flags.end(), sim::SafetyFlag::collision) != flags.end(),
           "pedestrian at 20 m: collision flag raised");
  c.expect(seconds_since(t0) < 1.0, "runtime under 1 s");
}

void aggregation(Check& c, const fs::path& source_dir) {
  const auto scenarios = nine_builtin_scenarios();
  const auto set = load_annotations(source_dir / "fixtures/annotations");
  c.expect(set.errors.empty(), "annotation fixtures load cleanly");
  std::vector<GradeRecord> records;
  for (const auto& a : set.records) records.push_back(record_of(a, scenarios));
  const auto r = aggregate(records);

  const struct {
    const char* weather;
    int total, wrong;
    double acc;
  } expected[] = {{"sunny", 30, 14, 0.5333}, {"partly_sunny", 29, 15, 0.4828}, {"rainy", 43, 21, 0.5116}};
  for (const auto& e : expected) {
    const ReportRow* row = r.row(e.weather, ReasoningKind::common_sense);
    c.expect(row && row->total == e.total && row->wrong == e.wrong, std::string("common_sense counts ") + e.weather);
    if (row && row->accuracy) c.near(*row->accuracy, e.acc, 1e-4, std::string("common_sense accuracy ") + e.weather);
  }

  std::ostringstream plot;
  write_plot_data(r, plot);
  std::istringstream lines(plot.str());
  std::string line, order;
  int points = 0;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream f(line);
    std::string x, w;
    f >> x >> w;
    if (points < 3) order += w + " ";
    ++points;
  }
  c.expect(order == "sunny partly_sunny rainy ", "plot points ordered sunny, partly_sunny, rainy (got '" + order + "')");
  c.expect(points == 9, "plot data has three points per block");

  const ReportRow* ar = r.row("rainy", ReasoningKind::arithmetic);
  c.expect(ar && ar->accuracy && *ar->accuracy < 0.50, "arithmetic rainy < 0.50");
  const auto hm = r.mean_accuracy(ReasoningKind::hybrid);
  c.expect(hm && *hm > 0.65, "hybrid mean > 0.65");
}

bool run_cli(const std::string& cli, const fs::path& out) {
  const std::string cmd = "\"" + cli + "\" run --builtin --mock --seed 7 --out \"" + out.string() + "\" > /dev/null 2>&1";
  return std::system(cmd.c_str()) == 0;
}

void determinism(Check& c, const std::string& cli) {
  const auto t0 = Clock::now();
  const fs::path base = fs::temp_directory_path() / "llmdrive_acceptance";
  fs::remove_all(base);
  const fs::path a = base / "a", b = base / "b";
  if (!cli.empty()) {
    c.expect(run_cli(cli, a), "first CLI run exits 0");
    c.expect(run_cli(cli, b), "second CLI run exits 0");
  } else {
    RunConfig cfg;
    cfg.seed = 7;
    cfg.out_dir = a;
    run_pipeline(cfg);
    cfg.out_dir = b;
    run_pipeline(cfg);
  }
  for (const char* f : {"report.csv", "report.json", "plot.dat"}) {
    const std::string x = read_file(a / f);
    c.expect(!x.empty(), std::string(f) + " written");
    c.expect(x == read_file(b / f), std::string(f) + " byte-identical across runs");
  }
  c.expect(seconds_since(t0) < 10.0, "two runs under 10 s");
  fs::remove_all(base);
}

// Each property runs `n` randomized cases and counts violations.
void properties(Check& c) {
  constexpr int n = 1000;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> speed(0.0, 300.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  int bad = 0;
  for (int i = 0; i < n; ++i) {
    const double v = speed(rng);
    const double back = kinematics::ms_to_kmh(kinematics::kmh_to_ms(v));
    if (std::fabs(back - v) > 1e-12 * std::max(1.0, v)) ++bad;
  }
  c.expect(bad == 0, "unit round trip: " + std::to_string(bad) + " violations");

  bad = 0;
  for (int i = 0; i < n; ++i) {
    const double v0 = speed(rng) / 3.6, a = unit(rng) * 8.0;
    const auto s = kinematics::speed_schedule(v0, a, 1 + static_cast<int>(rng() % 20), 0.5);
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (s[k] < 0.0 || s[k] > v0 || (k > 0 && s[k] > s[k - 1])) ++bad;
    }
  }
  c.expect(bad == 0, "schedule monotone and clamped: " + std::to_string(bad) + " violations");

  bad = 0;
  for (int i = 0; i < n; ++i) {
    Scenario s = *find_scenario(nine_builtin_scenarios(1e6), "hybrid-rainy");
    s.ego.speed_kmh = speed(rng) / 5.0;
    std::vector<double> list(rng() % 11);
    for (auto& b : list) b = unit(rng);
    sim::SimOptions coarse, fine;
    coarse.dt_s = 1.0;
    fine.dt_s = 0.1;
    const auto x = sim::run_brake_schedule(s, list, coarse);
    const auto y = sim::run_brake_schedule(s, list, fine);
    const double px = x.samples.back().position_m, py = y.samples.back().position_m;
    if (std::fabs(x.final_speed_ms() - y.final_speed_ms()) > 1e-9 || std::fabs(px - py) > 1e-9 * std::max(1.0, px)) ++bad;
  }
  c.expect(bad == 0, "dt refinement: " + std::to_string(bad) + " violations");

  bad = 0;
  const std::string corpus = answer("hybrid-rainy") + answer("arithmetic-rainy");
  for (int i = 0; i < n; ++i) {
    std::string text = corpus.substr(rng() % corpus.size(), 1 + rng() % 600);
    for (int k = 0; k < 20 && !text.empty(); ++k) text[rng() % text.size()] = static_cast<char>(rng() % 256);
    try {
      const auto e = parse::extract_all(text);
      for (const auto& cl : e.claims.claims) {
        if (cl.source_span.end > text.size() || cl.source_span.begin > cl.source_span.end) ++bad;
      }
    } catch (...) {
      ++bad;
    }
  }
  c.expect(bad == 0, "parser fuzz: " + std::to_string(bad) + " crashes or bad spans");

  bad = 0;
  const Scenario& ar = builtin("arithmetic-rainy");
  for (int i = 0; i < n; ++i) {
    parse::NumericClaim cl;
    cl.kind = parse::ClaimKind::conversion;
    const double kmh = speed(rng);
    cl.inputs = {Quantity::make(kmh, Unit::kmh)};
    cl.claimed = Quantity::make(kmh / 3.6 * (1.0 + (unit(rng) - 0.5) * 0.2), Unit::ms);
    cl.claimed_text = "x";
    const double t1 = unit(rng) * 0.1, t2 = t1 + unit(rng) * 0.1;
    const bool ok1 = verify_claim(cl, ar, t1).status == VerdictStatus::correct;
    const bool ok2 = verify_claim(cl, ar, t2).status == VerdictStatus::correct;
    if (ok1 && !ok2) ++bad;
  }
  c.expect(bad == 0, "tolerance monotonicity: " + std::to_string(bad) + " violations");

  bad = 0;
  const char* weathers[] = {"sunny", "partly_sunny", "rainy"};
  for (int i = 0; i < n; ++i) {
    std::vector<GradeRecord> records(1 + rng() % 25);
    for (auto& r : records) {
      r.scenario_id = "s" + std::to_string(rng() % 5);
      r.sample_index = static_cast<int>(rng() % 3);
      r.weather = weathers[rng() % 3];
      r.reasoning_kind = static_cast<ReasoningKind>(rng() % 3);
      r.total = static_cast<int>(rng() % 30);
      r.wrong = r.total ? static_cast<int>(rng() % static_cast<unsigned>(r.total + 1)) : 0;
      r.provenance = rng() % 3 == 0 ? Provenance::annotated : Provenance::machine;
    }
    const auto before = to_json(aggregate(records));
    std::shuffle(records.begin(), records.end(), rng);
    if (to_json(aggregate(records)) != before) ++bad;
  }
  c.expect(bad == 0, "aggregation permutation invariance: " + std::to_string(bad) + " violations");
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  const fs::path source_dir = argc > 2 ? fs::path(argv[2]) : fs::path(LLMDRIVE_SOURCE_DIR);

  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"1 oracle fidelity", oracle_fidelity},
      {"2 parser fidelity on recorded answers", parser_fidelity},
      {"3 erratum detection", erratum_detection},
      {"4 closed-loop check", closed_loop},
      {"5 aggregation of annotations", [&](Check& c) { aggregation(c, source_dir); }},
      {"6 end-to-end determinism", [&](Check& c) { determinism(c, cli); }},
      {"7 property suites (1000 cases each)", properties},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    std::cout << (c.failures.empty() ? "PASS " : "FAIL ") << name << '\n';
    for (const auto& f : c.failures) std::cout << "    " << f << '\n';
    failed += !c.failures.empty();
  }
  return failed == 0 ? 0 : 1;
}
