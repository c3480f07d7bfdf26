#include "llmdrive/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include "llmdrive/embedded.hpp"
#include "llmdrive/error.hpp"
#include "llmdrive/format.hpp"

namespace llmdrive {

namespace {

constexpr std::array<std::string_view, 7> kPlaceholders = {
    "current_speed", "detected_object", "confidence", "distance",
    "location",      "direction",       "weather_clause"};

const std::regex& placeholder_re() {
  static const std::regex re(R"(\{([A-Za-z_][A-Za-z0-9_]*)\})");
  return re;
}

std::string_view template_file(ReasoningKind k) {
  switch (k) {
    case ReasoningKind::common_sense: return "common_sense.txt";
    case ReasoningKind::arithmetic: return "arithmetic.txt";
    case ReasoningKind::hybrid: return "hybrid.txt";
  }
  return "common_sense.txt";
}

std::size_t slot(ReasoningKind k) { return static_cast<std::size_t>(k); }

}  // namespace

void PromptTemplate::validate() const {
  if (body.empty()) throw ValidationError("prompt template body is empty");
  for (std::sregex_iterator it(body.begin(), body.end(), placeholder_re()), end; it != end; ++it) {
    const std::string name = (*it)[1].str();
    if (std::find(kPlaceholders.begin(), kPlaceholders.end(), name) == kPlaceholders.end()) {
      throw ValidationError("prompt template uses unknown placeholder {" + name + "}");
    }
  }
}

std::string weather_clause(const WeatherPreset& w) {
  const std::string key = canonical_weather_name(w.name);
  if (key == "rainy") return "fully cloudy and foggy conditions without sunlight, experiencing heavy precipitation";
  if (key == "sunny") return "clear sunny conditions with full visibility";
  if (key == "partly_sunny") return "partly sunny conditions with light cloud cover";
  throw ValidationError("no weather clause for preset '" + w.name + "'");
}

PromptEngine::PromptEngine() {
  for (ReasoningKind k : {ReasoningKind::common_sense, ReasoningKind::arithmetic, ReasoningKind::hybrid}) {
    auto text = embedded::find("templates/" + std::string(template_file(k)));
    if (!text) throw IoError("built-in template missing: " + std::string(template_file(k)));
    templates_[slot(k)] = PromptTemplate{k, std::string(*text)};
  }
}

PromptEngine PromptEngine::from_directory(const std::filesystem::path& dir) {
  PromptEngine engine;
  for (ReasoningKind k : {ReasoningKind::common_sense, ReasoningKind::arithmetic, ReasoningKind::hybrid}) {
    const auto path = dir / template_file(k);
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read template " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    engine.set_template(PromptTemplate{k, ss.str()});
  }
  return engine;
}

const PromptTemplate& PromptEngine::template_for(ReasoningKind kind) const { return templates_[slot(kind)]; }

void PromptEngine::set_template(PromptTemplate t) {
  t.validate();
  templates_[slot(t.reasoning_kind)] = std::move(t);
}

RenderedPrompt PromptEngine::render(const Scenario& s) const {
  s.validate();
  if (!eligible(s)) {
    throw ValidationError("scenario '" + s.id + "' is not eligible (below the limit with a vehicle detected)");
  }
  const Detection& d = s.primary();

  auto value_of = [&](std::string_view name) -> std::string {
    if (name == "current_speed") return format_shortest(s.ego.speed_kmh);
    if (name == "detected_object") return d.label();
    if (name == "confidence") return format_shortest(d.confidence_pct);
    if (name == "distance") return format_shortest(d.distance_m);
    if (name == "location") return std::string(to_string(d.location));
    if (name == "direction") return s.ego.heading;
    if (name == "weather_clause") return weather_clause(s.weather);
    throw ValidationError("unknown placeholder {" + std::string(name) + "}");
  };

  const std::string& body = template_for(s.reasoning_kind).body;
  std::string text;
  text.reserve(body.size() + 128);
  std::size_t last = 0;
  for (std::sregex_iterator it(body.begin(), body.end(), placeholder_re()), end; it != end; ++it) {
    text.append(body, last, static_cast<std::size_t>(it->position()) - last);
    text += value_of((*it)[1].str());
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  text.append(body, last);

  return RenderedPrompt{s.id, s.reasoning_kind, std::move(text), utc_now_iso8601()};
}

}  // namespace llmdrive
