#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

#include "llmdrive/scenario.hpp"

namespace llmdrive {

/// Placeholders a template body may use: {current_speed}, {detected_object},
/// {confidence}, {distance}, {location}, {direction}, {weather_clause}.
struct PromptTemplate {
  ReasoningKind reasoning_kind = ReasoningKind::common_sense;
  std::string body;

  /// Throws ValidationError on an unknown `{placeholder}` or empty body.
  void validate() const;
};

struct RenderedPrompt {
  std::string scenario_id;
  ReasoningKind reasoning_kind = ReasoningKind::common_sense;
  std::string text;
  std::string rendered_at;  // ISO-8601 UTC
};

/// Sentence fragment describing the weather, chosen by preset name only.
/// Throws ValidationError for names that are not built-in presets.
std::string weather_clause(const WeatherPreset& w);

class PromptEngine {
 public:
  /// The built-in templates (compiled in from templates/*.txt).
  PromptEngine();

  /// Built-ins overridden by `<dir>/{common_sense,arithmetic,hybrid}.txt`
  /// where those files exist.
  static PromptEngine from_directory(const std::filesystem::path& dir);

  const PromptTemplate& template_for(ReasoningKind kind) const;
  void set_template(PromptTemplate t);

  /// Throws ValidationError when the scenario is invalid, ineligible, has no
  /// primary detection, or names an unknown weather.
  RenderedPrompt render(const Scenario& s) const;

 private:
  std::array<PromptTemplate, 3> templates_;
};

}  // namespace llmdrive
