#include "llmdrive/detection.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "llmdrive/error.hpp"

namespace llmdrive {

double DetectionModel::base_confidence(ObjectClass c) const {
  switch (c) {
    case ObjectClass::vehicle: return base_vehicle_pct;
    case ObjectClass::person: return base_person_pct;
    case ObjectClass::bike: return base_bike_pct;
    case ObjectClass::speed_limit_sign: return base_sign_pct;
    case ObjectClass::other: return base_other_pct;
  }
  return base_other_pct;
}

double DetectionModel::visibility_range_m(const WeatherPreset& w) const {
  const double fog = std::clamp(w.fog_density_pct, 0.0, 100.0) / 100.0;
  return clear_range_m + (fog_range_m - clear_range_m) * fog;
}

std::optional<Detection> emulate_detection(double true_distance_m, ObjectClass true_class,
                                           const WeatherPreset& weather, std::uint64_t seed,
                                           RelativeLocation location,
                                           const DetectionModel& model) {
  if (!std::isfinite(true_distance_m) || true_distance_m < 0.0) {
    throw ValidationError("true distance must be finite and >= 0");
  }
  const double range = model.visibility_range_m(weather);
  if (true_distance_m > range) return std::nullopt;

  const double visibility = 1.0 - model.range_falloff * (true_distance_m / range);

  // Mix the inputs into the stream so nearby objects do not share jitter.
  std::uint64_t key = seed ^ (std::bit_cast<std::uint64_t>(true_distance_m) * 0x9E3779B97F4A7C15ull);
  key ^= static_cast<std::uint64_t>(true_class) << 56;
  std::mt19937_64 rng(key);
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
  const double jitter = (2.0 * unit - 1.0) * model.jitter_pct;

  Detection d;
  d.object_class = true_class;
  d.confidence_pct = std::clamp(model.base_confidence(true_class) * visibility + jitter, 0.0, 100.0);
  d.distance_m = true_distance_m;
  d.location = location;
  return d;
}

}  // namespace llmdrive
