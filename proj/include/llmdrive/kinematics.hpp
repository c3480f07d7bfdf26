#pragma once

// Reference longitudinal kinematics. Every function here is a pure function
// of its arguments; these values are the ground truth claims are graded
// against, so nothing in this file may depend on parsed transcript text.

#include <optional>
#include <vector>

#include "llmdrive/weather.hpp"

namespace llmdrive::kinematics {

/// Linear brake pedal model: pedal 1.0 produces `max_decel_at_full_brake`.
struct BrakeModel {
  double max_decel_at_full_brake = 1.0;  // m/s^2

  /// Throws ValidationError unless max_decel_at_full_brake > 0 and finite.
  void validate() const;
};

/// Time headway (seconds of travel at the current speed) per weather preset.
/// Presets not named here fall back to 2 s + 2 s * max(precipitation, fog) / 100.
struct HeadwayPolicy {
  double sunny_s = 2.0;
  double partly_sunny_s = 2.5;
  double rainy_s = 4.0;

  double headway_s(const WeatherPreset& weather) const;
};

/// Exact conversion (divides by 3.6). Throws ValidationError on non-finite input.
double kmh_to_ms(double kmh);
double ms_to_kmh(double ms);

/// Signed acceleration (v_final - v_initial) / duration; negative means slowing.
/// Throws ValidationError unless duration > 0.
double required_decel(double v_initial_ms, double v_final_ms, double duration_s);

/// Speeds at t = dt, 2dt, ..., steps*dt under constant deceleration, clamped
/// at standstill. Requires steps >= 1, dt > 0, decel >= 0.
std::vector<double> speed_schedule(double v0_ms, double decel_ms2, int steps, double dt_s);

/// Deceleration produced by a brake pedal value in [0, 1].
double decel_from_brake(double brake, const BrakeModel& model = {});

/// Pedal value that produces `decel_ms2`, or nullopt when it would need more
/// than a full brake. Throws ValidationError for negative decel.
std::optional<double> brake_from_decel(double decel_ms2, const BrakeModel& model = {});

/// v^2 / (2 a). Requires v >= 0 and decel > 0.
double stopping_distance(double v_ms, double decel_ms2);

/// v * headway(weather). Requires v >= 0.
double safe_following_distance(double v_ms, const WeatherPreset& weather,
                               const HeadwayPolicy& policy = {});

}  // namespace llmdrive::kinematics
