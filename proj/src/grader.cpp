#include "llmdrive/grader.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "llmdrive/error.hpp"
#include "llmdrive/format.hpp"

namespace llmdrive {

namespace kin = kinematics;
using parse::ClaimKind;
using parse::DistanceRole;
using parse::NumericClaim;

std::string_view to_string(VerdictStatus s) noexcept {
  switch (s) {
    case VerdictStatus::correct: return "correct";
    case VerdictStatus::incorrect: return "incorrect";
    case VerdictStatus::unverifiable: return "unverifiable";
  }
  return "unverifiable";
}

void GradeOptions::validate() const {
  if (!(tolerance >= 0.0) || !std::isfinite(tolerance)) throw ValidationError("tolerance must be finite and >= 0");
  if (!(speed_tolerance_kmh >= 0.0)) throw ValidationError("speed tolerance must be >= 0");
  brake.validate();
}

int GradedTranscript::count(VerdictStatus s) const {
  return static_cast<int>(std::count_if(verdicts.begin(), verdicts.end(), [s](const Verdict& v) { return v.status == s; }));
}

namespace {

Verdict unverifiable(Verdict v, std::string reason) {
  v.status = VerdictStatus::unverifiable;
  v.reason = std::move(reason);
  return v;
}

Verdict violation(Verdict v, std::string reason) {
  v.status = VerdictStatus::incorrect;
  v.rule_violation = true;
  v.reason = std::move(reason);
  return v;
}

std::string percent(double x) { return format_fixed(x * 100.0, 2) + "%"; }

// Compares claimed against oracle (both already in the claimed unit).
Verdict compare(Verdict v, double oracle, Unit unit, double tolerance, std::string note = {}) {
  v.oracle_value = Quantity::make(oracle, unit);
  const double diff = std::fabs(v.claimed.value - oracle);
  double rel = 0.0;
  if (diff > 0.0) rel = std::fabs(oracle) > 0.0 ? diff / std::fabs(oracle) : std::numeric_limits<double>::max();
  v.relative_error = rel;
  const bool ok = rel <= tolerance;
  v.status = ok ? VerdictStatus::correct : VerdictStatus::incorrect;
  v.reason = ok ? "within tolerance" : "relative error " + percent(rel) + " exceeds " + percent(tolerance);
  if (!note.empty()) v.reason += "; " + note;
  return v;
}

std::optional<double> input_value(const NumericClaim& c, Unit u) {
  if (auto q = c.input(u)) return q->value;
  return std::nullopt;
}

}  // namespace

Verdict verify_claim(const NumericClaim& c, const Scenario& s, double tolerance, const GradeOptions& opts) {
  if (!(tolerance >= 0.0) || !std::isfinite(tolerance)) throw ValidationError("tolerance must be finite and >= 0");
  Verdict v;
  v.kind = c.kind;
  v.claimed = c.claimed;
  v.span = c.source_span;

  const double v0 = kin::kmh_to_ms(s.ego.speed_kmh);
  const double limit = kin::kmh_to_ms(s.speed_limit_kmh);
  const Unit u = c.claimed.unit;

  switch (c.kind) {
    case ClaimKind::conversion: {
      if (c.inputs.empty() || !is_speed(c.inputs[0].unit) || !is_speed(u)) {
        return violation(v, "conversion between non-speed units");
      }
      const Quantity in = c.inputs[0];
      if (in.unit == u) return violation(v, "conversion to the same unit");
      const double oracle = in.unit == Unit::kmh ? kin::kmh_to_ms(in.value) : kin::ms_to_kmh(in.value);
      return compare(v, oracle, u, tolerance);
    }

    case ClaimKind::deceleration: {
      if (u != Unit::ms2) return violation(v, "deceleration not stated in m/s^2");
      if (c.assumed) return unverifiable(v, "stated as an assumption");
      const auto t = input_value(c, Unit::s);
      if (!t || *t <= 0.0) return unverifiable(v, "no duration stated");
      double oracle = kin::required_decel(v0, limit, *t);
      if (c.claimed.value >= 0.0) oracle = std::fabs(oracle);  // a positive rate of slowing
      return compare(v, oracle, u, tolerance);
    }

    case ClaimKind::speed_at_time: {
      if (!is_speed(u)) return violation(v, "speed not stated in a speed unit");
      if (c.assumed) return unverifiable(v, "stated as an assumption");
      const auto t = input_value(c, Unit::s);
      const auto a = input_value(c, Unit::ms2);
      if (!t) return unverifiable(v, "no time stated");
      if (!a) return unverifiable(v, "no deceleration in effect");
      const double ms = std::max(0.0, v0 - std::fabs(*a) * *t);
      const double oracle = u == Unit::kmh ? kin::ms_to_kmh(ms) : ms;
      if (c.mixes_units) {
        Verdict out = compare(v, oracle, u, tolerance);
        out.status = VerdictStatus::incorrect;
        out.rule_violation = true;
        out.reason = "subtracts an m/s^2 * s change from a km/h value; " + out.reason;
        return out;
      }
      return compare(v, oracle, u, tolerance);
    }

    case ClaimKind::brake_value: {
      if (u != Unit::dimensionless) return violation(v, "brake value carries a unit");
      if (c.claimed.value < 0.0 || c.claimed.value > 1.0) return violation(v, "brake value outside [0, 1]");
      if (c.assumed) return unverifiable(v, "stated as an assumption");
      const auto t = input_value(c, Unit::s);
      if (!t || *t <= 0.0) return unverifiable(v, "no duration stated");
      const double need = std::fabs(kin::required_decel(v0, limit, *t));
      const double oracle = need / opts.brake.max_decel_at_full_brake;
      return compare(v, oracle, u, tolerance, oracle > 1.0 ? "required braking exceeds a full brake" : "");
    }

    case ClaimKind::duration: {
      if (u != Unit::s) return violation(v, "duration not stated in seconds");
      if (c.assumed) return unverifiable(v, "stated as an assumption");
      const auto a = input_value(c, Unit::ms2);
      if (!a || *a == 0.0) return unverifiable(v, "no deceleration in effect");
      const double oracle = std::max(0.0, v0 - limit) / std::fabs(*a);
      return compare(v, oracle, u, tolerance);
    }

    case ClaimKind::distance: {
      if (u != Unit::m) return violation(v, "distance not stated in meters");
      if (c.assumed) return unverifiable(v, "stated as an assumption");
      switch (c.distance_role) {
        case DistanceRole::detection: {
          if (s.detections.empty()) return unverifiable(v, "scenario has no detection");
          return compare(v, s.primary().distance_m, u, tolerance, "detected distance");
        }
        case DistanceRole::stopping: {
          const auto a = input_value(c, Unit::ms2);
          if (!a || *a == 0.0) return unverifiable(v, "no deceleration in effect");
          return compare(v, kin::stopping_distance(v0, std::fabs(*a)), u, tolerance, "stopping distance");
        }
        case DistanceRole::following:
          return compare(v, kin::safe_following_distance(v0, s.weather, opts.headway), u, tolerance,
                         "following distance");
      }
      break;
    }
  }
  return unverifiable(v, "unsupported claim kind");
}

GradedTranscript grade_transcript(const Transcript& t, const Scenario& s, const GradeOptions& opts) {
  opts.validate();
  GradedTranscript g;
  g.scenario_id = t.scenario_id;
  g.sample_index = t.sample_index;
  g.reasoning_kind = s.reasoning_kind;
  g.weather = canonical_weather_name(s.weather.name);
  g.extraction = parse::extract_all(t.response_text);
  const auto& claims = g.extraction.claims.claims;

  for (std::size_t i = 0; i < claims.size(); ++i) {
    Verdict v = verify_claim(claims[i], s, opts.tolerance, opts);
    v.claim_ref = "claims[" + std::to_string(i) + "]";
    g.verdicts.push_back(std::move(v));
  }

  if (g.extraction.schedule_error) g.defects.push_back("malformed control list: " + *g.extraction.schedule_error);

  std::vector<double> brake_entries;
  if (const auto& sched = g.extraction.schedule) {
    brake_entries = sched->brake_entries();
    if (sched->interpretation == parse::SpeedInterpretation::ambiguous) {
      g.defects.push_back(sched->speed->name + " mixes throttle fractions and speeds");
    }
    if (sched->interpretation == parse::SpeedInterpretation::target_speed_kmh) {
      const auto& list = *sched->speed;
      const auto decel = parse::deceleration_in_effect(claims, list.span.begin);
      for (std::size_t i = 0; i < list.entries.size(); ++i) {
        NumericClaim c;
        c.kind = ClaimKind::speed_at_time;
        c.claimed = Quantity::make(list.entries[i], Unit::kmh);
        c.source_span = list.span;
        c.inputs.push_back(Quantity::make(static_cast<double>(i + 1), Unit::s));
        if (decel) {
          c.inputs.push_back(Quantity::make(*decel, Unit::ms2));
        } else if (i < brake_entries.size() && brake_entries[i] >= 0.0 && brake_entries[i] <= 1.0) {
          c.inputs.push_back(Quantity::make(kin::decel_from_brake(brake_entries[i], opts.brake), Unit::ms2));
        }
        Verdict v = verify_claim(c, s, opts.tolerance, opts);
        v.claim_ref = list.name + "[" + std::to_string(i) + "]";
        g.verdicts.push_back(std::move(v));
      }
    }
    if (sched->brake) {
      const auto& list = *sched->brake;
      for (std::size_t i = 0; i < list.entries.size(); ++i) {
        NumericClaim c;
        c.kind = ClaimKind::brake_value;
        c.claimed = Quantity::make(list.entries[i], Unit::dimensionless);
        c.source_span = list.span;
        c.inputs.push_back(Quantity::make(static_cast<double>(list.entries.size()), Unit::s));
        Verdict v = verify_claim(c, s, opts.tolerance, opts);
        v.claim_ref = list.name + "[" + std::to_string(i) + "]";
        g.verdicts.push_back(std::move(v));
      }
    }
  }

  const bool in_range = std::all_of(brake_entries.begin(), brake_entries.end(),
                                    [](double b) { return b >= 0.0 && b <= 1.0; });
  if (!brake_entries.empty() && in_range) {
    sim::SimOptions so = opts.sim;
    so.model.brake = opts.brake;
    const sim::Trajectory traj = sim::run_brake_schedule(s, brake_entries, so);
    sim::SafetyOptions safety;
    safety.speed_tolerance_kmh = opts.speed_tolerance_kmh;
    safety.brake = opts.brake;
    for (const auto& c : claims) {
      if (c.kind == ClaimKind::deceleration && !c.assumed) safety.requested_decels_ms2.push_back(std::fabs(c.claimed.value));
    }
    g.safety_flags = sim::check_safety(traj, s, safety);
    SimulationSummary sum;
    sum.outcome = traj.outcome;
    sum.collided_at_s = traj.collided_at_s;
    sum.final_speed_kmh = kin::ms_to_kmh(traj.final_speed_ms());
    sum.duration_s = traj.samples.empty() ? 0.0 : traj.samples.back().t_s;
    g.simulation = sum;
  }

  const int incorrect = g.count(VerdictStatus::incorrect);
  const int penalties = static_cast<int>(g.safety_flags.size() + g.defects.size());
  if (s.reasoning_kind == ReasoningKind::common_sense) {
    g.total = static_cast<int>(g.extraction.advisories.size());
    g.wrong = std::min(g.total, incorrect + penalties);
  } else {
    const int counted = opts.include_unverifiable ? static_cast<int>(g.verdicts.size())
                                                  : static_cast<int>(g.verdicts.size()) - g.count(VerdictStatus::unverifiable);
    g.total = counted + penalties;
    g.wrong = incorrect + penalties;
  }
  return g;
}

nlohmann::json to_json(const Verdict& v) {
  auto q = [](const Quantity& x) { return nlohmann::json{{"value", x.value}, {"unit", unit_name(x.unit)}}; };
  nlohmann::json j;
  j["claim_ref"] = v.claim_ref;
  j["kind"] = parse::to_string(v.kind);
  j["status"] = to_string(v.status);
  j["claimed"] = q(v.claimed);
  j["oracle"] = v.oracle_value ? q(*v.oracle_value) : nlohmann::json(nullptr);
  j["relative_error"] = v.relative_error ? nlohmann::json(*v.relative_error) : nlohmann::json(nullptr);
  j["rule_violation"] = v.rule_violation;
  j["reason"] = v.reason;
  j["span"] = {v.span.begin, v.span.end};
  return j;
}

nlohmann::json to_json(const GradedTranscript& g) {
  nlohmann::json j;
  j["scenario_id"] = g.scenario_id;
  j["sample_index"] = g.sample_index;
  j["reasoning_kind"] = to_string(g.reasoning_kind);
  j["weather"] = g.weather;
  j["total"] = g.total;
  j["wrong"] = g.wrong;
  j["counts"] = {{"correct", g.count(VerdictStatus::correct)},
                 {"incorrect", g.count(VerdictStatus::incorrect)},
                 {"unverifiable", g.count(VerdictStatus::unverifiable)}};
  j["verdicts"] = nlohmann::json::array();
  for (const auto& v : g.verdicts) j["verdicts"].push_back(to_json(v));
  j["defects"] = g.defects;
  j["safety_flags"] = nlohmann::json::array();
  for (auto f : g.safety_flags) j["safety_flags"].push_back(sim::to_string(f));
  if (g.simulation) {
    j["simulation"] = {{"outcome", sim::to_string(g.simulation->outcome)},
                       {"collided_at_s", g.simulation->collided_at_s ? nlohmann::json(*g.simulation->collided_at_s)
                                                                     : nlohmann::json(nullptr)},
                       {"final_speed_kmh", g.simulation->final_speed_kmh},
                       {"duration_s", g.simulation->duration_s}};
  } else {
    j["simulation"] = nullptr;
  }
  j["extraction"] = parse::to_json(g.extraction);
  return j;
}

}  // namespace llmdrive
