#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmdrive/weather.hpp"

namespace llmdrive {

enum class ObjectClass { vehicle, person, bike, speed_limit_sign, other };
enum class RelativeLocation { left, right, front };
enum class ReasoningKind { common_sense, arithmetic, hybrid };

std::string_view to_string(ObjectClass c) noexcept;
std::string_view to_string(RelativeLocation l) noexcept;
std::string_view to_string(ReasoningKind k) noexcept;

std::optional<RelativeLocation> parse_location(std::string_view s);
/// Accepts "common_sense", "common-sense", "arithmetic", "hybrid".
std::optional<ReasoningKind> parse_reasoning_kind(std::string_view s);

struct Detection {
  ObjectClass object_class = ObjectClass::vehicle;
  std::string other_label;  // only meaningful for ObjectClass::other
  double confidence_pct = 0.0;
  double distance_m = 0.0;
  RelativeLocation location = RelativeLocation::front;

  /// Label used in prompts and files: "vehicle", "person", ... or other_label.
  std::string label() const;
  void validate() const;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Any label that is not one of the four named classes becomes `other`.
ObjectClass parse_object_class(std::string_view label, std::string* other_label);

struct EgoState {
  double speed_kmh = 0.0;
  std::string heading;      // free-form direction as reported by the simulator
  double position_m = 0.0;  // longitudinal coordinate

  friend bool operator==(const EgoState&, const EgoState&) = default;
};

struct Scenario {
  std::string id;
  ReasoningKind reasoning_kind = ReasoningKind::common_sense;
  WeatherPreset weather;
  EgoState ego;
  std::vector<Detection> detections;
  std::size_t primary_detection = 0;  // index into detections used for prompts
  double speed_limit_kmh = 40.0;
  std::int64_t seed = 0;
  bool synthetic = false;                   // whole scenario is authored, not recorded
  std::vector<std::string> synthetic_fields;  // authored fields of a recorded scenario

  /// Throws ValidationError when an invariant is broken.
  void validate() const;
  /// Throws ValidationError when there is no primary detection.
  const Detection& primary() const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// False iff the ego is below the speed limit and some detection is a vehicle.
bool eligible(const Scenario& s);

/// Three reasoning kinds x three weathers. The three recorded cases carry the
/// recorded values; the rest are authored and flagged `synthetic`.
std::vector<Scenario> nine_builtin_scenarios(double hybrid_pedestrian_distance_m = 20.0);

const Scenario* find_scenario(const std::vector<Scenario>& set, std::string_view id);

nlohmann::json to_json(const Scenario& s);
/// Throws ParseError naming the offending field.
Scenario scenario_from_json(const nlohmann::json& j);

/// Scenario file: {"schema_version": 1, "scenarios": [...]} or a bare array.
std::vector<Scenario> load_scenario_file(const std::filesystem::path& path);
void save_scenario_file(const std::vector<Scenario>& scenarios, const std::filesystem::path& path);

/// Throws ValidationError on duplicate ids.
void validate_suite(const std::vector<Scenario>& scenarios);

}  // namespace llmdrive
