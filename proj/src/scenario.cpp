#include "llmdrive/scenario.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include "llmdrive/error.hpp"

namespace llmdrive {

using nlohmann::json;

std::string_view to_string(ObjectClass c) noexcept {
  switch (c) {
    case ObjectClass::vehicle: return "vehicle";
    case ObjectClass::person: return "person";
    case ObjectClass::bike: return "bike";
    case ObjectClass::speed_limit_sign: return "speed_limit_sign";
    case ObjectClass::other: return "other";
  }
  return "other";
}

std::string_view to_string(RelativeLocation l) noexcept {
  switch (l) {
    case RelativeLocation::left: return "left";
    case RelativeLocation::right: return "right";
    case RelativeLocation::front: return "front";
  }
  return "front";
}

std::string_view to_string(ReasoningKind k) noexcept {
  switch (k) {
    case ReasoningKind::common_sense: return "common_sense";
    case ReasoningKind::arithmetic: return "arithmetic";
    case ReasoningKind::hybrid: return "hybrid";
  }
  return "common_sense";
}

std::optional<RelativeLocation> parse_location(std::string_view s) {
  if (s == "left") return RelativeLocation::left;
  if (s == "right") return RelativeLocation::right;
  if (s == "front") return RelativeLocation::front;
  return std::nullopt;
}

std::optional<ReasoningKind> parse_reasoning_kind(std::string_view s) {
  if (s == "common_sense" || s == "common-sense") return ReasoningKind::common_sense;
  if (s == "arithmetic") return ReasoningKind::arithmetic;
  if (s == "hybrid") return ReasoningKind::hybrid;
  return std::nullopt;
}

ObjectClass parse_object_class(std::string_view label, std::string* other_label) {
  if (label == "vehicle") return ObjectClass::vehicle;
  if (label == "person") return ObjectClass::person;
  if (label == "bike") return ObjectClass::bike;
  if (label == "speed_limit_sign") return ObjectClass::speed_limit_sign;
  if (other_label) *other_label = std::string(label);
  return ObjectClass::other;
}

std::string Detection::label() const {
  if (object_class == ObjectClass::other) return other_label.empty() ? "object" : other_label;
  return std::string(to_string(object_class));
}

void Detection::validate() const {
  if (!std::isfinite(confidence_pct) || confidence_pct < 0.0 || confidence_pct > 100.0) {
    throw ValidationError("detection confidence must be in [0, 100]");
  }
  if (!std::isfinite(distance_m) || distance_m < 0.0) {
    throw ValidationError("detection distance must be finite and >= 0");
  }
}

void Scenario::validate() const {
  if (id.empty()) throw ValidationError("scenario id must be nonempty");
  weather.validate();
  if (!std::isfinite(ego.speed_kmh) || ego.speed_kmh < 0.0) {
    throw ValidationError("scenario '" + id + "': ego speed must be finite and >= 0");
  }
  if (!std::isfinite(ego.position_m)) {
    throw ValidationError("scenario '" + id + "': ego position must be finite");
  }
  if (!std::isfinite(speed_limit_kmh) || speed_limit_kmh <= 0.0) {
    throw ValidationError("scenario '" + id + "': speed limit must be > 0");
  }
  for (const auto& d : detections) d.validate();
  if (primary_detection >= detections.size()) {
    throw ValidationError("scenario '" + id + "': no primary detection");
  }
}

const Detection& Scenario::primary() const {
  if (primary_detection >= detections.size()) {
    throw ValidationError("scenario '" + id + "': no primary detection");
  }
  return detections[primary_detection];
}

bool eligible(const Scenario& s) {
  if (s.ego.speed_kmh >= s.speed_limit_kmh) return true;
  for (const auto& d : s.detections) {
    if (d.object_class == ObjectClass::vehicle) return false;
  }
  return true;
}

namespace {

Scenario make_builtin(std::string id, ReasoningKind kind, const WeatherPreset& weather,
                      double speed_kmh, std::string heading, Detection primary,
                      std::int64_t seed) {
  Scenario s;
  s.id = std::move(id);
  s.reasoning_kind = kind;
  s.weather = weather;
  s.ego = EgoState{speed_kmh, std::move(heading), 0.0};
  s.detections.push_back(std::move(primary));
  s.seed = seed;
  return s;
}

}  // namespace

std::vector<Scenario> nine_builtin_scenarios(double hybrid_pedestrian_distance_m) {
  const auto& presets = builtin_presets();
  const WeatherPreset& sunny = presets[0];
  const WeatherPreset& partly = presets[1];
  const WeatherPreset& rainy = presets[2];
  using enum ObjectClass;
  using enum RelativeLocation;
  using enum ReasoningKind;

  std::vector<Scenario> out;
  out.reserve(9);

  auto synth = [&out](Scenario s) {
    s.synthetic = true;
    out.push_back(std::move(s));
  };

  // Authored scenarios keep speeds in (40, 50] so every one is eligible.
  synth(make_builtin("common-sense-sunny", common_sense, sunny, 44.83, "right",
                     {vehicle, "", 94.0, 25.4, front}, 1));
  synth(make_builtin("common-sense-partly-sunny", common_sense, partly, 46.12, "left",
                     {vehicle, "", 92.0, 21.7, front}, 2));
  {
    Scenario s = make_builtin("common-sense-rainy", common_sense, rainy, 43.216779923988035,
                              "right", {vehicle, "", 91.0, 15.282174193286437, front}, 3);
    out.push_back(std::move(s));
  }
  synth(make_builtin("arithmetic-sunny", arithmetic, sunny, 47.35, "right",
                     {bike, "", 89.0, 24.5, front}, 4));
  synth(make_builtin("arithmetic-partly-sunny", arithmetic, partly, 42.68, "right",
                     {vehicle, "", 90.0, 19.6, left}, 5));
  {
    Scenario s = make_builtin("arithmetic-rainy", arithmetic, rainy, 45.25227775733768, "right",
                              {bike, "", 86.0, 18.2, front}, 6);
    s.synthetic_fields = {"detections[0].confidence_pct", "ego.heading"};
    out.push_back(std::move(s));
  }
  synth(make_builtin("hybrid-sunny", hybrid, sunny, 48.41, "right",
                     {person, "", 93.0, 30.0, front}, 7));
  synth(make_builtin("hybrid-partly-sunny", hybrid, partly, 44.57, "left",
                     {vehicle, "", 92.0, 26.3, front}, 8));
  {
    Scenario s = make_builtin("hybrid-rainy", hybrid, rainy, 45.22770823152422, "right",
                              {person, "", 88.0, hybrid_pedestrian_distance_m, front}, 9);
    s.synthetic_fields = {"detections[0].confidence_pct", "detections[0].distance_m",
                          "ego.heading"};
    out.push_back(std::move(s));
  }
  return out;
}

const Scenario* find_scenario(const std::vector<Scenario>& set, std::string_view id) {
  for (const auto& s : set) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

json to_json(const Scenario& s) {
  json dets = json::array();
  for (const auto& d : s.detections) {
    dets.push_back({{"object_class", d.label()},
                    {"confidence_pct", d.confidence_pct},
                    {"distance_m", d.distance_m},
                    {"relative_location", to_string(d.location)}});
  }
  return json{
      {"id", s.id},
      {"reasoning_kind", to_string(s.reasoning_kind)},
      {"weather",
       {{"name", s.weather.name},
        {"sun_azimuth_deg", s.weather.sun_azimuth_deg},
        {"sun_altitude_deg", s.weather.sun_altitude_deg},
        {"cloudiness_pct", s.weather.cloudiness_pct},
        {"precipitation_pct", s.weather.precipitation_pct},
        {"fog_density_pct", s.weather.fog_density_pct}}},
      {"ego",
       {{"speed_kmh", s.ego.speed_kmh},
        {"heading", s.ego.heading},
        {"position_m", s.ego.position_m}}},
      {"detections", std::move(dets)},
      {"primary_detection", s.primary_detection},
      {"speed_limit_kmh", s.speed_limit_kmh},
      {"seed", s.seed},
      {"synthetic", s.synthetic},
      {"synthetic_fields", s.synthetic_fields},
  };
}

namespace {

const json& require(const json& j, const char* field, const std::string& where) {
  auto it = j.find(field);
  if (it == j.end()) throw ParseError(where + ": missing field '" + field + "'");
  return *it;
}

double require_number(const json& j, const char* field, const std::string& where) {
  const json& v = require(j, field, where);
  if (!v.is_number()) throw ParseError(where + ": field '" + field + "' must be a number");
  return v.get<double>();
}

std::string require_string(const json& j, const char* field, const std::string& where) {
  const json& v = require(j, field, where);
  if (!v.is_string()) throw ParseError(where + ": field '" + field + "' must be a string");
  return v.get<std::string>();
}

WeatherPreset weather_from_json(const json& j, const std::string& where) {
  if (j.is_string()) {
    auto p = find_preset(j.get<std::string>());
    if (!p) throw ParseError(where + ": unknown weather '" + j.get<std::string>() + "'");
    return *p;
  }
  if (!j.is_object()) throw ParseError(where + ": weather must be a name or an object");
  WeatherPreset w;
  w.name = require_string(j, "name", where + ".weather");
  w.sun_azimuth_deg = require_number(j, "sun_azimuth_deg", where + ".weather");
  w.sun_altitude_deg = require_number(j, "sun_altitude_deg", where + ".weather");
  w.cloudiness_pct = require_number(j, "cloudiness_pct", where + ".weather");
  w.precipitation_pct = require_number(j, "precipitation_pct", where + ".weather");
  w.fog_density_pct = require_number(j, "fog_density_pct", where + ".weather");
  return w;
}

}  // namespace

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("scenario must be a JSON object");
  Scenario s;
  s.id = require_string(j, "id", "scenario");
  const std::string where = "scenario '" + s.id + "'";

  const std::string kind = require_string(j, "reasoning_kind", where);
  auto k = parse_reasoning_kind(kind);
  if (!k) throw ParseError(where + ": unknown reasoning_kind '" + kind + "'");
  s.reasoning_kind = *k;

  s.weather = weather_from_json(require(j, "weather", where), where);

  const json& ego = require(j, "ego", where);
  s.ego.speed_kmh = require_number(ego, "speed_kmh", where + ".ego");
  s.ego.heading = ego.value("heading", std::string{});
  s.ego.position_m = ego.value("position_m", 0.0);

  const json& dets = require(j, "detections", where);
  if (!dets.is_array()) throw ParseError(where + ": detections must be an array");
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const std::string dwhere = where + ".detections[" + std::to_string(i) + "]";
    Detection d;
    d.object_class = parse_object_class(require_string(dets[i], "object_class", dwhere), &d.other_label);
    d.confidence_pct = require_number(dets[i], "confidence_pct", dwhere);
    d.distance_m = require_number(dets[i], "distance_m", dwhere);
    const std::string loc = require_string(dets[i], "relative_location", dwhere);
    auto l = parse_location(loc);
    if (!l) throw ParseError(dwhere + ": unknown relative_location '" + loc + "'");
    d.location = *l;
    s.detections.push_back(std::move(d));
  }

  s.primary_detection = j.value("primary_detection", std::size_t{0});
  s.speed_limit_kmh = j.value("speed_limit_kmh", 40.0);
  s.seed = j.value("seed", std::int64_t{0});
  s.synthetic = j.value("synthetic", false);
  s.synthetic_fields = j.value("synthetic_fields", std::vector<std::string>{});

  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
  return s;
}

void validate_suite(const std::vector<Scenario>& scenarios) {
  std::set<std::string> seen;
  for (const auto& s : scenarios) {
    s.validate();
    if (!seen.insert(s.id).second) throw ValidationError("duplicate scenario id '" + s.id + "'");
  }
}

std::vector<Scenario> load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  const json* list = &doc;
  if (doc.is_object()) {
    if (!doc.contains("scenarios")) throw ParseError(path.string() + ": missing 'scenarios'");
    list = &doc["scenarios"];
  }
  if (!list->is_array()) throw ParseError(path.string() + ": scenarios must be an array");

  std::vector<Scenario> out;
  for (const auto& item : *list) out.push_back(scenario_from_json(item));
  try {
    validate_suite(out);
  } catch (const ValidationError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return out;
}

void save_scenario_file(const std::vector<Scenario>& scenarios, const std::filesystem::path& path) {
  json doc{{"schema_version", 1}, {"scenarios", json::array()}};
  for (const auto& s : scenarios) doc["scenarios"].push_back(to_json(s));
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scenario file " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing scenario file " + path.string());
}

}  // namespace llmdrive
