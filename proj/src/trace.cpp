#include "llmdrive/trace.hpp"

#include <istream>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "llmdrive/error.hpp"

namespace llmdrive {

using nlohmann::json;

namespace {

constexpr const char* kRequired[] = {"speed_kmh", "object_class", "confidence_pct", "distance_m",
                                     "location",  "direction",    "weather"};

Scenario record_to_scenario(const json& rec, long line) {
  if (!rec.is_object()) throw ParseError("record is not a JSON object");
  for (const char* f : kRequired) {
    if (!rec.contains(f)) throw ParseError(std::string("missing field '") + f + "'");
  }
  auto number = [&rec](const char* f) {
    if (!rec[f].is_number()) throw ParseError(std::string("field '") + f + "' must be a number");
    return rec[f].get<double>();
  };
  auto text = [&rec](const char* f) {
    if (!rec[f].is_string()) throw ParseError(std::string("field '") + f + "' must be a string");
    return rec[f].get<std::string>();
  };

  Scenario s;
  s.id = rec.contains("id") ? text("id") : "trace-" + std::to_string(line);

  const std::string weather = text("weather");
  auto preset = find_preset(weather);
  if (!preset) throw ParseError("unknown weather '" + weather + "'");
  s.weather = *preset;

  s.reasoning_kind = ReasoningKind::hybrid;
  if (rec.contains("reasoning_kind")) {
    auto k = parse_reasoning_kind(text("reasoning_kind"));
    if (!k) throw ParseError("unknown reasoning_kind '" + rec["reasoning_kind"].get<std::string>() + "'");
    s.reasoning_kind = *k;
  }

  s.ego.speed_kmh = number("speed_kmh");
  s.ego.heading = text("direction");

  Detection d;
  d.object_class = parse_object_class(text("object_class"), &d.other_label);
  d.confidence_pct = number("confidence_pct");
  d.distance_m = number("distance_m");
  if (d.distance_m < 0.0) throw ParseError("negative distance_m");
  const std::string loc = text("location");
  auto l = parse_location(loc);
  if (!l) throw ParseError("unknown location '" + loc + "'");
  d.location = *l;
  s.detections.push_back(std::move(d));

  if (rec.contains("speed_limit_kmh")) s.speed_limit_kmh = number("speed_limit_kmh");
  if (rec.contains("seed")) {
    if (!rec["seed"].is_number_integer()) throw ParseError("field 'seed' must be an integer");
    s.seed = rec["seed"].get<std::int64_t>();
  }

  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
  return s;
}

}  // namespace

TraceIngest ingest_trace(std::istream& in) {
  TraceIngest out;
  std::set<std::string> ids;
  std::string text;
  long line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json rec = json::parse(text);
      Scenario s = record_to_scenario(rec, line);
      if (!ids.insert(s.id).second) throw ParseError("duplicate id '" + s.id + "'");
      out.scenarios.push_back(std::move(s));
    } catch (const json::exception& e) {
      out.errors.push_back({line, std::string("invalid JSON: ") + e.what()});
    } catch (const ParseError& e) {
      out.errors.push_back({line, e.what()});
    }
  }
  return out;
}

void export_trace(const std::vector<Scenario>& scenarios, std::ostream& out) {
  for (const auto& s : scenarios) {
    const Detection& d = s.primary();
    json rec{{"id", s.id},
             {"reasoning_kind", to_string(s.reasoning_kind)},
             {"speed_kmh", s.ego.speed_kmh},
             {"object_class", d.label()},
             {"confidence_pct", d.confidence_pct},
             {"distance_m", d.distance_m},
             {"location", to_string(d.location)},
             {"direction", s.ego.heading},
             {"weather", s.weather.name},
             {"speed_limit_kmh", s.speed_limit_kmh},
             {"seed", s.seed}};
    out << rec.dump() << '\n';
  }
}

}  // namespace llmdrive
