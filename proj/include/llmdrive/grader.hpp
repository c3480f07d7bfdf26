#pragma once

// Claim verification against the kinematics oracle and per-transcript grading.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmdrive/kinematics.hpp"
#include "llmdrive/parser.hpp"
#include "llmdrive/scenario.hpp"
#include "llmdrive/transcript.hpp"
#include "llmdrive/vehicle_sim.hpp"

namespace llmdrive {

enum class VerdictStatus { correct, incorrect, unverifiable };
std::string_view to_string(VerdictStatus s) noexcept;

struct Verdict {
  std::string claim_ref;  // "claims[3]", "BRAKE_LIST[1]", ...
  parse::ClaimKind kind = parse::ClaimKind::conversion;
  VerdictStatus status = VerdictStatus::unverifiable;
  Quantity claimed;
  std::optional<Quantity> oracle_value;
  std::optional<double> relative_error;
  bool rule_violation = false;  // incorrect regardless of tolerance
  std::string reason;
  parse::Span span;
};

struct GradeOptions {
  double tolerance = 0.01;              // relative
  bool include_unverifiable = false;    // count unverifiable claims in totals
  kinematics::BrakeModel brake;
  kinematics::HeadwayPolicy headway;
  sim::SimOptions sim;                  // dt, first_only, vehicle model
  double speed_tolerance_kmh = 0.5;

  void validate() const;
};

/// Recomputes the claim from the scenario's ground values. Claims stated as
/// assumptions, or missing an input the oracle needs, are unverifiable.
/// Throws ValidationError for a negative or non-finite tolerance.
Verdict verify_claim(const parse::NumericClaim& c, const Scenario& s, double tolerance,
                     const GradeOptions& opts = {});

struct SimulationSummary {
  sim::Outcome outcome = sim::Outcome::completed;
  std::optional<double> collided_at_s;
  double final_speed_kmh = 0.0;
  double duration_s = 0.0;
};

struct GradedTranscript {
  std::string scenario_id;
  int sample_index = 0;
  ReasoningKind reasoning_kind = ReasoningKind::common_sense;
  std::string weather;
  parse::Extraction extraction;
  std::vector<Verdict> verdicts;       // prose claims, then list entries
  std::vector<std::string> defects;    // malformed/ambiguous lists
  std::optional<SimulationSummary> simulation;
  std::vector<sim::SafetyFlag> safety_flags;
  int total = 0;
  int wrong = 0;

  int count(VerdictStatus s) const;
};

/// Parses the reply, verifies every claim and list entry, replays a brake
/// schedule in the simulator and counts totals:
///   common_sense: total = advisories; wrong = incorrect + flags + defects (capped)
///   arithmetic/hybrid: total = verifiable verdicts + flags + defects; wrong = incorrect + flags + defects
/// Parse problems become defects; this never throws on reply content.
GradedTranscript grade_transcript(const Transcript& t, const Scenario& s, const GradeOptions& opts = {});

nlohmann::json to_json(const Verdict& v);
nlohmann::json to_json(const GradedTranscript& g);

}  // namespace llmdrive
