#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "llmdrive/error.hpp"
#include "llmdrive/vehicle_sim.hpp"

using namespace llmdrive;
using namespace llmdrive::sim;

namespace {

Scenario hybrid_rainy(double distance_m = 20.0) {
  return *find_scenario(nine_builtin_scenarios(distance_m), "hybrid-rainy");
}

// Far-away obstacle so the schedule runs to completion.
Scenario open_road(double speed_kmh) {
  Scenario s = hybrid_rainy(1e6);
  s.ego.speed_kmh = speed_kmh;
  return s;
}

const std::vector<double> kRecordedBrakes(5, 0.2889);

}  // namespace

TEST(Step, OneSecondBrake) {
  const auto next = step(KinematicState{0.0, 12.563252}, ControlInput{0.0, 0.2889}, 1.0);
  EXPECT_NEAR(next.speed_ms, 12.274352, 1e-9);
  EXPECT_NEAR(next.position_m, (12.563252 + 12.274352) / 2.0, 1e-9);
}

TEST(Step, StandstillAndCoast) {
  EXPECT_EQ(step(KinematicState{3.0, 0.0}, ControlInput{0.0, 1.0}, 1.0).speed_ms, 0.0);
  EXPECT_EQ(step(KinematicState{3.0, 0.0}, ControlInput{0.0, 1.0}, 1.0).position_m, 3.0);
  const auto coast = step(KinematicState{0.0, 10.0}, ControlInput{}, 1.0);
  EXPECT_EQ(coast.speed_ms, 10.0);
  EXPECT_EQ(coast.position_m, 10.0);
}

TEST(Step, StopsMidStepWithoutReversing) {
  // 2 m/s at 4 m/s^2 stops after 0.5 s having travelled 0.5 m.
  const auto s = step(KinematicState{0.0, 2.0}, ControlInput{0.0, 1.0}, 1.0, VehicleModel{3.0, {4.0}, 0.0});
  EXPECT_EQ(s.speed_ms, 0.0);
  EXPECT_NEAR(s.position_m, 0.5, 1e-12);
}

TEST(Step, BrakeDominatesThrottle) {
  const auto both = step(KinematicState{0.0, 10.0}, ControlInput{1.0, 0.5}, 1.0);
  const auto brake = step(KinematicState{0.0, 10.0}, ControlInput{0.0, 0.5}, 1.0);
  EXPECT_EQ(both.speed_ms, brake.speed_ms);
}

TEST(Step, ThrottleAndRanges) {
  EXPECT_NEAR(step(KinematicState{0.0, 10.0}, ControlInput{0.5, 0.0}, 1.0).speed_ms, 11.5, 1e-12);
  EXPECT_THROW(step(KinematicState{0.0, 10.0}, ControlInput{1.5, 0.0}, 1.0), ValidationError);
  EXPECT_THROW(step(KinematicState{0.0, 10.0}, ControlInput{0.0, -0.1}, 1.0), ValidationError);
  EXPECT_THROW(step(KinematicState{0.0, 10.0}, ControlInput{}, 0.0), ValidationError);
}

TEST(Step, EgoStateInKmh) {
  EgoState e{45.22770823152422, "right", 0.0};
  const EgoState n = step(e, ControlInput{0.0, 0.2889}, 1.0);
  EXPECT_NEAR(n.speed_kmh, (45.22770823152422 / 3.6 - 0.2889) * 3.6, 1e-9);
  EXPECT_EQ(n.heading, "right");
}

TEST(BrakeSchedule, RecordedListEndsNearLimit) {
  const auto traj = run_brake_schedule(open_road(45.22770823152422), kRecordedBrakes);
  EXPECT_EQ(traj.outcome, Outcome::completed);
  const double expected = (45.22770823152422 / 3.6 - 5 * 0.2889) * 3.6;  // 40.028 km/h
  EXPECT_NEAR(traj.final_speed_ms() * 3.6, expected, 1e-9);
  EXPECT_NEAR(traj.final_speed_ms() * 3.6, 40.03, 0.5);
  EXPECT_TRUE(check_safety(traj, open_road(45.22770823152422)).empty());
}

TEST(BrakeSchedule, PedestrianAtTwentyMetresCollides) {
  const Scenario s = hybrid_rainy(20.0);
  const auto traj = run_brake_schedule(s, kRecordedBrakes);
  EXPECT_EQ(traj.outcome, Outcome::collided);
  ASSERT_TRUE(traj.collided_at_s.has_value());
  // Crossing time solves 20 = v0 t - a t^2 / 2.
  const double v0 = 45.22770823152422 / 3.6, a = 0.2889;
  const double t = (v0 - std::sqrt(v0 * v0 - 2.0 * a * 20.0)) / a;
  EXPECT_NEAR(*traj.collided_at_s, t, 1e-9);
  EXPECT_NEAR(traj.samples.back().position_m, 20.0, 1e-9);
  EXPECT_EQ(check_safety(traj, s), (std::vector<SafetyFlag>{SafetyFlag::collision}));

  // Without the obstacle the car covers roughly 59 to 60 m in the five seconds.
  const auto free = run_brake_schedule(open_road(45.22770823152422), kRecordedBrakes);
  EXPECT_NEAR(free.samples.back().position_m, v0 * 5.0 - a * 25.0 / 2.0, 1e-9);
  EXPECT_NEAR(free.samples.back().position_m, 59.6, 0.5);
}

TEST(BrakeSchedule, EmptyAndInvalid) {
  const auto traj = run_brake_schedule(open_road(45.0), {});
  EXPECT_EQ(traj.samples.size(), 1u);
  EXPECT_EQ(traj.outcome, Outcome::completed);
  const std::vector<double> bad{0.2, 1.3};
  EXPECT_THROW(run_brake_schedule(open_road(45.0), bad), ValidationError);
  SimOptions o;
  o.dt_s = 0.3;
  EXPECT_THROW(run_brake_schedule(open_road(45.0), kRecordedBrakes, o), ValidationError);
}

TEST(BrakeSchedule, StopsAndFirstOnly) {
  const std::vector<double> full(10, 1.0);
  const auto stop = run_brake_schedule(open_road(18.0), full);  // 5 m/s, stops after 5 s
  EXPECT_EQ(stop.outcome, Outcome::stopped);
  EXPECT_EQ(stop.final_speed_ms(), 0.0);

  SimOptions o;
  o.first_only = true;
  const std::vector<double> list{0.5, 0.0, 0.0};
  const auto first = run_brake_schedule(open_road(36.0), list, o);
  EXPECT_NEAR(first.final_speed_ms(), 9.5, 1e-12);
  EXPECT_NEAR(first.samples.back().t_s, 1.0, 1e-12);
}

TEST(BrakeSchedule, SamplesWellFormed) {
  const auto traj = run_brake_schedule(open_road(45.0), kRecordedBrakes);
  ASSERT_EQ(traj.samples.size(), 51u);
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    EXPECT_GT(traj.samples[i].t_s, traj.samples[i - 1].t_s);
    EXPECT_GE(traj.samples[i].position_m, traj.samples[i - 1].position_m);
    EXPECT_GE(traj.samples[i].speed_ms, 0.0);
  }
  std::ostringstream csv;
  write_trajectory_csv(traj, csv);
  EXPECT_EQ(csv.str().rfind("t,position_m,speed_ms\n", 0), 0u);
}

TEST(Safety, SpeedLimitFlags) {
  const Scenario s = open_road(50.0);
  const std::vector<double> light{0.1};
  // Never within the limit: one flag, not two.
  auto flags = check_safety(run_brake_schedule(s, light), s);
  EXPECT_EQ(flags, (std::vector<SafetyFlag>{SafetyFlag::never_reaches_limit}));

  // Dipped under the limit, then ended above it.
  Trajectory back_up;
  back_up.samples = {{0.0, 0.0, 14.0}, {1.0, 12.0, 10.0}, {2.0, 24.0, 13.0}};
  EXPECT_EQ(check_safety(back_up, s), (std::vector<SafetyFlag>{SafetyFlag::exceeds_speed_limit_at_end}));

  // 40.028 km/h against a 40 km/h limit is inside the 0.5 km/h tolerance.
  EXPECT_TRUE(check_safety(run_brake_schedule(open_road(45.22770823152422), kRecordedBrakes), s).empty());

  SafetyOptions opts;
  opts.requested_decels_ms2 = {4.341};
  flags = check_safety(run_brake_schedule(s, kRecordedBrakes), s, opts);
  EXPECT_NE(std::find(flags.begin(), flags.end(), SafetyFlag::infeasible_brake_request), flags.end());
}

// dt refinement: piecewise-constant inputs are integrated exactly, so 1 s and
// 0.1 s steps agree to rounding.
TEST(SimProperty, DtRefinementStable) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> speed(0.0, 60.0);
  std::uniform_real_distribution<double> pedal(0.0, 1.0);
  std::uniform_int_distribution<int> len(0, 10);
  for (int i = 0; i < 1000; ++i) {
    const Scenario s = open_road(speed(rng));
    std::vector<double> list(static_cast<std::size_t>(len(rng)));
    for (auto& b : list) b = pedal(rng);
    SimOptions coarse, fine;
    coarse.dt_s = 1.0;
    fine.dt_s = 0.1;
    const auto a = run_brake_schedule(s, list, coarse);
    const auto b = run_brake_schedule(s, list, fine);
    EXPECT_NEAR(a.final_speed_ms(), b.final_speed_ms(), 1e-9);
    EXPECT_NEAR(a.samples.back().position_m, b.samples.back().position_m, 1e-9 * std::max(1.0, a.samples.back().position_m));
  }
}

TEST(SimProperty, DeterministicAndNonIncreasingWithoutThrottle) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> speed(0.0, 60.0);
  std::uniform_real_distribution<double> pedal(0.0, 1.0);
  std::uniform_real_distribution<double> dist(1.0, 80.0);
  for (int i = 0; i < 1000; ++i) {
    Scenario s = hybrid_rainy(dist(rng));
    s.ego.speed_kmh = speed(rng);
    std::vector<double> list(6);
    for (auto& b : list) b = pedal(rng);
    const auto a = run_brake_schedule(s, list);
    const auto b = run_brake_schedule(s, list);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
      EXPECT_EQ(a.samples[k].speed_ms, b.samples[k].speed_ms);
      EXPECT_EQ(a.samples[k].position_m, b.samples[k].position_m);
      if (k > 0) EXPECT_LE(a.samples[k].speed_ms, a.samples[k - 1].speed_ms);
    }
  }
}
