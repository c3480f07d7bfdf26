#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "llmdrive/kinematics.hpp"
#include "llmdrive/scenario.hpp"

namespace llmdrive::sim {

/// Pedal positions, each in [0, 1]. When both are pressed the brake wins and
/// the throttle is ignored.
struct ControlInput {
  double throttle = 0.0;
  double brake = 0.0;

  void validate() const;
};

struct VehicleModel {
  double max_accel_ms2 = 3.0;      // acceleration at full throttle
  kinematics::BrakeModel brake;    // deceleration at full brake
  double linear_drag_per_s = 0.0;  // dv/dt gains -k*v when > 0; off by default
};

struct KinematicState {
  double position_m = 0.0;
  double speed_ms = 0.0;
};

/// Advances one step of length dt with the input held constant. Integration
/// is exact for the piecewise-constant input and stops at standstill (the
/// vehicle never reverses).
KinematicState step(const KinematicState& state, const ControlInput& input, double dt_s,
                    const VehicleModel& model = {});

/// Same as above on the scenario's ego state (speed in km/h).
EgoState step(const EgoState& state, const ControlInput& input, double dt_s,
              const VehicleModel& model = {});

struct Sample {
  double t_s = 0.0;
  double position_m = 0.0;
  double speed_ms = 0.0;
};

enum class Outcome { completed, collided, stopped };
std::string_view to_string(Outcome o) noexcept;

struct Trajectory {
  std::vector<Sample> samples;
  Outcome outcome = Outcome::completed;
  std::optional<double> collided_at_s;

  double final_speed_ms() const { return samples.empty() ? 0.0 : samples.back().speed_ms; }
};

struct SimOptions {
  double dt_s = 0.1;        // must divide one second evenly
  bool first_only = false;  // apply only the first schedule entry
  VehicleModel model;
};

/// Applies one brake entry per second (zero-order hold over dt steps),
/// starting from the ego state. Detections in front of the ego are static
/// obstacles; reaching the nearest one ends the run as `collided` at the
/// exact crossing time. Throws ValidationError for entries outside [0, 1] or
/// a dt that does not divide one second.
Trajectory run_brake_schedule(const Scenario& s, std::span<const double> brake_list,
                              const SimOptions& opts = {});

enum class SafetyFlag { collision, exceeds_speed_limit_at_end, never_reaches_limit, infeasible_brake_request };
std::string_view to_string(SafetyFlag f) noexcept;

struct SafetyOptions {
  double speed_tolerance_kmh = 0.5;
  kinematics::BrakeModel brake;
  std::vector<double> requested_decels_ms2;  // magnitudes the controller asked for
};

/// A collided trajectory reports only `collision`; speed-limit flags are
/// judged on trajectories that ran to completion.
std::vector<SafetyFlag> check_safety(const Trajectory& traj, const Scenario& s,
                                     const SafetyOptions& opts = {});

/// CSV with header `t,position_m,speed_ms`.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

}  // namespace llmdrive::sim
