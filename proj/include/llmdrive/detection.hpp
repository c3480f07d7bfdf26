#pragma once

#include <cstdint>
#include <optional>

#include "llmdrive/scenario.hpp"
#include "llmdrive/weather.hpp"

namespace llmdrive {

/// Synthetic stand-in for the object detector. The constants are authored,
/// not measured; they are calibrated so a vehicle ~15.3 m ahead in the rainy
/// preset scores ~91% confidence.
struct DetectionModel {
  double base_vehicle_pct = 95.0;
  double base_person_pct = 92.0;
  double base_bike_pct = 88.0;
  double base_sign_pct = 90.0;
  double base_other_pct = 75.0;
  double clear_range_m = 200.0;  // visibility range at 0% fog
  double fog_range_m = 40.0;     // visibility range at 100% fog
  double range_falloff = 0.11;   // confidence lost at the edge of the range
  double jitter_pct = 0.5;       // seeded uniform jitter, +/- this much

  double base_confidence(ObjectClass c) const;
  /// Linear in fog density between clear_range_m and fog_range_m.
  double visibility_range_m(const WeatherPreset& w) const;
};

/// None when the object lies beyond the visibility range. Pure function of
/// its arguments (including `seed`).
std::optional<Detection> emulate_detection(double true_distance_m, ObjectClass true_class,
                                           const WeatherPreset& weather, std::uint64_t seed,
                                           RelativeLocation location = RelativeLocation::front,
                                           const DetectionModel& model = {});

}  // namespace llmdrive
