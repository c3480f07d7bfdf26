#include "llmdrive/vehicle_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "llmdrive/error.hpp"
#include "llmdrive/format.hpp"

namespace llmdrive::sim {

namespace {

// Constant commanded acceleration `u` plus optional linear drag, starting at
// speed v0 >= 0. Closed-form in both cases; the vehicle halts at v = 0 when u < 0.
struct Segment {
  double v0;
  double u;
  double k;

  double stop_time() const {
    if (u >= 0.0) return std::numeric_limits<double>::infinity();
    if (v0 <= 0.0) return 0.0;
    if (k == 0.0) return v0 / -u;
    const double vinf = u / k;
    return std::log((v0 - vinf) / -vinf) / k;
  }

  KinematicState at(double tau) const {
    const double ts = stop_time();
    const double t = std::min(tau, ts);
    double v;
    double x;
    if (k == 0.0) {
      v = v0 + u * t;
      x = v0 * t + 0.5 * u * t * t;
    } else {
      const double vinf = u / k;
      const double e = std::exp(-k * t);
      v = vinf + (v0 - vinf) * e;
      x = vinf * t + (v0 - vinf) * (1.0 - e) / k;
    }
    if (tau >= ts) v = 0.0;
    return {x, std::max(0.0, v)};
  }
};

double commanded_accel(const ControlInput& in, const VehicleModel& model) {
  if (in.brake > 0.0) return -kinematics::decel_from_brake(in.brake, model.brake);
  return in.throttle * model.max_accel_ms2;
}

}  // namespace

void ControlInput::validate() const {
  if (!std::isfinite(throttle) || throttle < 0.0 || throttle > 1.0) {
    throw ValidationError("throttle must be in [0, 1]");
  }
  if (!std::isfinite(brake) || brake < 0.0 || brake > 1.0) {
    throw ValidationError("brake must be in [0, 1]");
  }
}

KinematicState step(const KinematicState& state, const ControlInput& input, double dt_s,
                    const VehicleModel& model) {
  if (!std::isfinite(dt_s) || dt_s <= 0.0) throw ValidationError("dt must be > 0");
  input.validate();
  if (model.linear_drag_per_s < 0.0) throw ValidationError("drag must be >= 0");
  const Segment seg{std::max(0.0, state.speed_ms), commanded_accel(input, model), model.linear_drag_per_s};
  KinematicState next = seg.at(dt_s);
  next.position_m += state.position_m;
  return next;
}

EgoState step(const EgoState& state, const ControlInput& input, double dt_s, const VehicleModel& model) {
  const KinematicState next =
      step(KinematicState{state.position_m, kinematics::kmh_to_ms(state.speed_kmh)}, input, dt_s, model);
  return EgoState{kinematics::ms_to_kmh(next.speed_ms), state.heading, next.position_m};
}

std::string_view to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::completed: return "completed";
    case Outcome::collided: return "collided";
    case Outcome::stopped: return "stopped";
  }
  return "completed";
}

std::string_view to_string(SafetyFlag f) noexcept {
  switch (f) {
    case SafetyFlag::collision: return "collision";
    case SafetyFlag::exceeds_speed_limit_at_end: return "exceeds_speed_limit_at_end";
    case SafetyFlag::never_reaches_limit: return "never_reaches_limit";
    case SafetyFlag::infeasible_brake_request: return "infeasible_brake_request";
  }
  return "collision";
}

Trajectory run_brake_schedule(const Scenario& s, std::span<const double> brake_list, const SimOptions& opts) {
  if (!std::isfinite(opts.dt_s) || opts.dt_s <= 0.0 || opts.dt_s > 1.0) {
    throw ValidationError("dt must be in (0, 1] s");
  }
  const double per_second = 1.0 / opts.dt_s;
  const long steps_per_entry = std::lround(per_second);
  if (std::abs(per_second - static_cast<double>(steps_per_entry)) > 1e-9) {
    throw ValidationError("dt must divide one second evenly");
  }
  for (double b : brake_list) {
    if (!std::isfinite(b) || b < 0.0 || b > 1.0) {
      throw ValidationError("brake schedule entry " + format_shortest(b) + " outside [0, 1]");
    }
  }
  if (opts.first_only && !brake_list.empty()) brake_list = brake_list.first(1);

  std::optional<double> obstacle_m;
  for (const auto& d : s.detections) {
    if (d.location != RelativeLocation::front) continue;
    const double x = s.ego.position_m + d.distance_m;
    if (!obstacle_m || x < *obstacle_m) obstacle_m = x;
  }

  Trajectory traj;
  KinematicState state{s.ego.position_m, kinematics::kmh_to_ms(s.ego.speed_kmh)};
  traj.samples.push_back({0.0, state.position_m, state.speed_ms});
  if (brake_list.empty()) return traj;

  if (obstacle_m && state.position_m >= *obstacle_m) {
    traj.outcome = Outcome::collided;
    traj.collided_at_s = 0.0;
    return traj;
  }

  const VehicleModel& model = opts.model;
  long index = 0;
  for (double brake : brake_list) {
    const ControlInput input{0.0, brake};
    for (long k = 0; k < steps_per_entry; ++k, ++index) {
      const double t0 = static_cast<double>(index) * opts.dt_s;
      const Segment seg{state.speed_ms, commanded_accel(input, model), model.linear_drag_per_s};
      KinematicState end = seg.at(opts.dt_s);
      end.position_m += state.position_m;

      if (obstacle_m && end.position_m >= *obstacle_m) {
        // Position is monotone in tau, so bisection finds the crossing.
        double lo = 0.0;
        double hi = opts.dt_s;
        for (int it = 0; it < 100; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (state.position_m + seg.at(mid).position_m >= *obstacle_m) hi = mid; else lo = mid;
        }
        const KinematicState hit = seg.at(hi);
        traj.samples.push_back({t0 + hi, state.position_m + hit.position_m, hit.speed_ms});
        traj.outcome = Outcome::collided;
        traj.collided_at_s = t0 + hi;
        return traj;
      }

      state = end;
      traj.samples.push_back({static_cast<double>(index + 1) * opts.dt_s, state.position_m, state.speed_ms});
    }
  }
  traj.outcome = state.speed_ms == 0.0 ? Outcome::stopped : Outcome::completed;
  return traj;
}

std::vector<SafetyFlag> check_safety(const Trajectory& traj, const Scenario& s, const SafetyOptions& opts) {
  std::vector<SafetyFlag> flags;
  if (traj.outcome == Outcome::collided) {
    flags.push_back(SafetyFlag::collision);
  } else if (traj.samples.size() > 1) {
    const double limit_ms = kinematics::kmh_to_ms(s.speed_limit_kmh + opts.speed_tolerance_kmh);
    double min_speed = traj.samples.front().speed_ms;
    for (const auto& smp : traj.samples) min_speed = std::min(min_speed, smp.speed_ms);
    if (min_speed > limit_ms) {
      flags.push_back(SafetyFlag::never_reaches_limit);
    } else if (traj.final_speed_ms() > limit_ms) {
      flags.push_back(SafetyFlag::exceeds_speed_limit_at_end);
    }
  }
  for (double a : opts.requested_decels_ms2) {
    if (!kinematics::brake_from_decel(std::abs(a), opts.brake)) {
      flags.push_back(SafetyFlag::infeasible_brake_request);
      break;
    }
  }
  return flags;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  out << "t,position_m,speed_ms\n";
  for (const auto& s : traj.samples) {
    out << format_shortest(s.t_s) << ',' << format_shortest(s.position_m) << ','
        << format_shortest(s.speed_ms) << '\n';
  }
}

}  // namespace llmdrive::sim
