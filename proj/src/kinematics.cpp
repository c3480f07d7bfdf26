#include "llmdrive/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "llmdrive/error.hpp"

namespace llmdrive::kinematics {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw ValidationError(std::string(what) + " must be finite");
}

}  // namespace

void BrakeModel::validate() const {
  if (!std::isfinite(max_decel_at_full_brake) || max_decel_at_full_brake <= 0.0) {
    throw ValidationError("max_decel_at_full_brake must be > 0");
  }
}

double HeadwayPolicy::headway_s(const WeatherPreset& weather) const {
  const std::string key = canonical_weather_name(weather.name);
  if (key == "sunny") return sunny_s;
  if (key == "partly_sunny") return partly_sunny_s;
  if (key == "rainy") return rainy_s;
  const double severity = std::max(weather.precipitation_pct, weather.fog_density_pct) / 100.0;
  return 2.0 + 2.0 * std::clamp(severity, 0.0, 1.0);
}

double kmh_to_ms(double kmh) {
  require_finite(kmh, "speed");
  return kmh / 3.6;
}

double ms_to_kmh(double ms) {
  require_finite(ms, "speed");
  return ms * 3.6;
}

double required_decel(double v_initial_ms, double v_final_ms, double duration_s) {
  require_finite(v_initial_ms, "initial speed");
  require_finite(v_final_ms, "final speed");
  if (!std::isfinite(duration_s) || duration_s <= 0.0) {
    throw ValidationError("duration must be > 0");
  }
  return (v_final_ms - v_initial_ms) / duration_s;
}

std::vector<double> speed_schedule(double v0_ms, double decel_ms2, int steps, double dt_s) {
  require_finite(v0_ms, "initial speed");
  if (steps < 1) throw ValidationError("steps must be >= 1");
  if (!std::isfinite(dt_s) || dt_s <= 0.0) throw ValidationError("dt must be > 0");
  if (!std::isfinite(decel_ms2) || decel_ms2 < 0.0) throw ValidationError("decel must be >= 0");

  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (int k = 1; k <= steps; ++k) {
    out.push_back(std::max(0.0, v0_ms - decel_ms2 * k * dt_s));
  }
  return out;
}

double decel_from_brake(double brake, const BrakeModel& model) {
  model.validate();
  if (!std::isfinite(brake) || brake < 0.0 || brake > 1.0) {
    throw ValidationError("brake must be in [0, 1]");
  }
  return brake * model.max_decel_at_full_brake;
}

std::optional<double> brake_from_decel(double decel_ms2, const BrakeModel& model) {
  model.validate();
  if (!std::isfinite(decel_ms2) || decel_ms2 < 0.0) {
    throw ValidationError("deceleration must be >= 0");
  }
  const double brake = decel_ms2 / model.max_decel_at_full_brake;
  if (brake > 1.0) return std::nullopt;
  return brake;
}

double stopping_distance(double v_ms, double decel_ms2) {
  if (!std::isfinite(v_ms) || v_ms < 0.0) throw ValidationError("speed must be >= 0");
  if (!std::isfinite(decel_ms2) || decel_ms2 <= 0.0) throw ValidationError("decel must be > 0");
  return v_ms * v_ms / (2.0 * decel_ms2);
}

double safe_following_distance(double v_ms, const WeatherPreset& weather,
                               const HeadwayPolicy& policy) {
  if (!std::isfinite(v_ms) || v_ms < 0.0) throw ValidationError("speed must be >= 0");
  return v_ms * policy.headway_s(weather);
}

}  // namespace llmdrive::kinematics
