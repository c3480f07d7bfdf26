#pragma once

// Extraction of structured content from free-form model replies: the
// SPEED/BRAKE control lists, unit-tagged numeric claims, and numbered
// advisory items. Everything here is a pure function of the input text and
// never throws on arbitrary bytes except where documented (malformed lists).

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmdrive/quantity.hpp"

namespace llmdrive::parse {

/// Half-open byte range [begin, end) into the parsed text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::string_view slice(std::string_view text) const { return text.substr(begin, end - begin); }
  friend bool operator==(const Span&, const Span&) = default;
};

enum class SpeedInterpretation { throttle_fraction, target_speed_kmh, ambiguous };
std::string_view to_string(SpeedInterpretation i) noexcept;

struct ControlList {
  std::string name;  // as written, e.g. "SPEED_LIST"
  std::vector<double> entries;
  bool truncated = false;  // ended in "..."
  Span span;               // name through closing bracket
};

struct ControlSchedule {
  std::optional<ControlList> speed;
  std::optional<ControlList> brake;
  std::optional<SpeedInterpretation> interpretation;  // set when speed entries exist
  std::vector<std::string> range_violations;          // brake entries outside [0, 1]

  bool truncated() const {
    return (speed && speed->truncated) || (brake && brake->truncated);
  }
  std::vector<double> speed_entries() const { return speed ? speed->entries : std::vector<double>{}; }
  std::vector<double> brake_entries() const { return brake ? brake->entries : std::vector<double>{}; }
};

/// Finds the last bracketed list after each of SPEED_CONTROL/SPEED_LIST and
/// BRAKE_CONTROL/BRAKE_LIST. Mentions without a bracket are ignored. Returns
/// none when neither list is present; throws ParseError (offset = byte
/// position) when a bracket is opened but the list is malformed.
std::optional<ControlSchedule> extract_control_lists(std::string_view text);

/// All in [0, 1] -> throttle_fraction; all above 1 -> target_speed_kmh;
/// anything else -> ambiguous. Throws ValidationError on empty input.
SpeedInterpretation classify_speed_entries(std::span<const double> entries);

enum class ClaimKind { conversion, deceleration, speed_at_time, brake_value, distance, duration };
std::string_view to_string(ClaimKind k) noexcept;

/// What a distance claim refers to.
enum class DistanceRole { detection, stopping, following };

struct NumericClaim {
  ClaimKind kind = ClaimKind::conversion;
  // conversion: [source speed]; deceleration: [duration]?; speed_at_time:
  // [t (s), deceleration in effect]?; brake_value: [duration]?; duration:
  // [deceleration in effect]?; distance: [].
  std::vector<Quantity> inputs;
  Quantity claimed;
  std::string claimed_text;  // the numeral exactly as written
  Span source_span;
  bool assumed = false;          // stated as an assumption, not derived
  bool mixes_units = false;      // combines km/h with m/s^2 * s in one expression
  DistanceRole distance_role = DistanceRole::detection;

  std::optional<Quantity> input(Unit u) const;
};

struct ClaimExtraction {
  std::vector<NumericClaim> claims;
  std::size_t tagged_numerals = 0;  // numerals carrying a unit
  std::size_t claimed_numerals = 0; // of those, how many a claim consumed

  /// claimed / tagged, or 1 when there are no tagged numerals.
  double coverage() const;
};

ClaimExtraction extract_claims(std::string_view text);

/// Deceleration in effect at `offset`: the value of the last deceleration
/// claim that ends before it, as a magnitude.
std::optional<double> deceleration_in_effect(const std::vector<NumericClaim>& claims, std::size_t offset);

struct Advisory {
  int index = 0;
  std::string title;
  std::string body;
  Span span;
};

/// Numbered items ("N." at line start, emphasis markers stripped). Titles are
/// the text before the first colon. Item numbers must increase strictly;
/// out-of-sequence numbers are not items.
std::vector<Advisory> extract_advisories(std::string_view text);

struct Extraction {
  std::optional<ControlSchedule> schedule;
  std::optional<std::string> schedule_error;  // malformed list, with offset
  ClaimExtraction claims;
  std::vector<Advisory> advisories;
};

/// Runs all three extractors; a malformed list is recorded, not thrown.
Extraction extract_all(std::string_view text);

nlohmann::json to_json(const NumericClaim& c);
nlohmann::json to_json(const ControlSchedule& s);
nlohmann::json to_json(const Advisory& a);
nlohmann::json to_json(const Extraction& e);

}  // namespace llmdrive::parse
