#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace llmdrive {

/// The five CARLA WeatherParameters the experiments vary. Percentages are
/// in [0, 100]; angles are in degrees.
struct WeatherPreset {
  std::string name;
  double sun_azimuth_deg = 0.0;
  double sun_altitude_deg = 0.0;
  double cloudiness_pct = 0.0;
  double precipitation_pct = 0.0;
  double fog_density_pct = 0.0;

  /// Throws ValidationError on an empty name or a percentage outside [0, 100].
  void validate() const;

  friend bool operator==(const WeatherPreset&, const WeatherPreset&) = default;
};

/// sunny, partly_sunny, rainy, in that order.
const std::array<WeatherPreset, 3>& builtin_presets();

/// Lookup by name. Case, spaces and dashes are folded, so "Partly Sunny"
/// and "partly-sunny" both resolve to partly_sunny.
std::optional<WeatherPreset> find_preset(std::string_view name);

/// Folded form used for name matching ("Partly Sunny" -> "partly_sunny").
std::string canonical_weather_name(std::string_view name);

/// Position of a weather name in the sunny -> partly_sunny -> rainy order;
/// unknown names sort after the built-ins.
int weather_rank(std::string_view name);

}  // namespace llmdrive
