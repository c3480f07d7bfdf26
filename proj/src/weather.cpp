#include "llmdrive/weather.hpp"

#include <cctype>
#include <cmath>

#include "llmdrive/error.hpp"

namespace llmdrive {

void WeatherPreset::validate() const {
  if (name.empty()) throw ValidationError("weather preset name must be nonempty");
  auto check = [this](double v, const char* field) {
    if (!std::isfinite(v) || v < 0.0 || v > 100.0) {
      throw ValidationError("weather preset '" + name + "': " + field + " must be in [0, 100]");
    }
  };
  check(cloudiness_pct, "cloudiness_pct");
  check(precipitation_pct, "precipitation_pct");
  check(fog_density_pct, "fog_density_pct");
  if (!std::isfinite(sun_azimuth_deg) || !std::isfinite(sun_altitude_deg)) {
    throw ValidationError("weather preset '" + name + "': sun angles must be finite");
  }
}

const std::array<WeatherPreset, 3>& builtin_presets() {
  static const std::array<WeatherPreset, 3> presets{{
      {"sunny", 100.0, 100.0, 0.0, 0.0, 0.0},
      {"partly_sunny", 50.0, 50.0, 30.0, 0.0, 0.0},
      {"rainy", 0.0, 0.0, 100.0, 100.0, 100.0},
  }};
  return presets;
}

std::string canonical_weather_name(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    if (c == ' ' || c == '-') {
      out.push_back('_');
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

std::optional<WeatherPreset> find_preset(std::string_view name) {
  const std::string key = canonical_weather_name(name);
  for (const auto& p : builtin_presets()) {
    if (p.name == key) return p;
  }
  return std::nullopt;
}

int weather_rank(std::string_view name) {
  const std::string key = canonical_weather_name(name);
  const auto& presets = builtin_presets();
  for (std::size_t i = 0; i < presets.size(); ++i) {
    if (presets[i].name == key) return static_cast<int>(i);
  }
  return static_cast<int>(presets.size());
}

}  // namespace llmdrive
