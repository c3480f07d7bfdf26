// Deterministic model stand-in. Replies are synthesized so that they exercise
// the parser and grader the way real replies do: mostly right, with the kinds
// of slips seen in recorded answers (misquoted distances, weather-blind
// headways, km/h minus m/s arithmetic, rounding drift).

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "llmdrive/error.hpp"
#include "llmdrive/format.hpp"
#include "llmdrive/gateway.hpp"
#include "llmdrive/kinematics.hpp"

namespace llmdrive {

namespace {

namespace kin = kinematics;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double uniform() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return uniform() < p; }
  int between(int lo, int hi) { return lo + static_cast<int>(g_() % static_cast<std::uint64_t>(hi - lo + 1)); }

 private:
  std::mt19937_64 g_;
};

std::string f4(double v) { return format_fixed(v, 4); }
std::string f1(double v) { return format_fixed(v, 1); }

struct Item {
  std::string title;
  std::string body;
};

std::string common_sense_reply(const Scenario& s, Rng& rng) {
  const Detection& d = s.primary();
  const std::string obj = d.label();
  const double v_ms = kin::kmh_to_ms(s.ego.speed_kmh);
  const std::string limit = format_shortest(s.speed_limit_kmh);

  std::vector<Item> items;
  items.push_back({"Reduce Speed", "You are driving at " + format_shortest(s.ego.speed_kmh) +
                                       " kilometers per hour while the posted limit is " + limit +
                                       " km/h. Ease off the accelerator and slow down to the limit."});
  {
    const double quoted = rng.chance(0.75) ? d.distance_m : d.distance_m * (1.2 + 0.3 * rng.uniform());
    const std::string where = d.location == RelativeLocation::front
                                  ? "ahead of you"
                                  : "on your " + std::string(to_string(d.location));
    items.push_back({"Watch the " + obj, "The " + obj + " " + where + " is approximately " + f1(quoted) +
                                              " meters away. Keep it in view and be ready to react."});
  }
  if (rng.chance(0.7)) {
    const double headway = rng.chance(0.6) ? kin::HeadwayPolicy{}.headway_s(s.weather) : 2.0;
    items.push_back({"Increase Following Distance",
                     "In these conditions a safe following distance at your speed is about " + f1(v_ms * headway) +
                         " meters. Leave more room than usual."});
  }
  if (rng.chance(0.5)) {
    const double from = rng.chance(0.7) ? v_ms : kin::kmh_to_ms(s.speed_limit_kmh);
    items.push_back({"Plan Your Stop", "Braking gently at 1 m/s², your stopping distance from the current speed is about " +
                                           f1(kin::stopping_distance(from, 1.0)) + " meters, so start slowing early."});
  }
  std::vector<Item> pool = {
      {"Stay Alert", "Keep scanning the road and the " + obj + " ahead; conditions can change quickly."},
      {"Avoid Sudden Movements", "Steer and brake smoothly so other road users can anticipate you."},
      {"Stay in Your Lane", "Keep to your lane and signal well before any lane change."},
      {"Be Prepared to Stop", "Cover the brake pedal so you can stop if the " + obj + " slows down."},
      {"Check Your Mirrors", "Know what is behind you before you brake."},
      {"Use Your Lights", "Turn on your headlights so you are visible to others."},
  };
  const std::string w = canonical_weather_name(s.weather.name);
  if (w == "rainy") {
    pool.push_back({"Use Fog Lights", "Fog lights improve visibility in dense fog and heavy rain."});
    pool.push_back({"Use Windshield Wipers", "Keep the wipers and defrosters running to keep the glass clear."});
  } else if (w == "sunny") {
    pool.push_back({"Watch for Glare", "Use the sun visor; low sun can hide the " + obj + " for a moment."});
  } else {
    pool.push_back({"Expect Changing Light", "Passing clouds change the light quickly; adjust your attention."});
  }
  const int extra = rng.between(3, static_cast<int>(std::min<std::size_t>(6, pool.size())));
  for (int k = 0; k < extra; ++k) {
    const auto pick = static_cast<std::size_t>(rng.between(0, static_cast<int>(pool.size()) - 1));
    items.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }

  std::ostringstream out;
  out << "Here is what you should do in this situation:\n\n";
  for (std::size_t i = 0; i < items.size(); ++i) {
    out << i + 1 << ". **" << items[i].title << "**: " << items[i].body << "\n\n";
  }
  out << "Driving cautiously and within the limit keeps you and others safe.";
  return out.str();
}

struct Plan {
  double v_ms = 0.0;     // as the reply states it
  double limit_ms = 0.0;
  int seconds = 5;
  double decel = 0.0;    // signed, as stated
};

Plan plan_deceleration(const Scenario& s, Rng& rng, std::ostringstream& out) {
  Plan p;
  const std::string v = format_shortest(s.ego.speed_kmh);
  const std::string lim = format_shortest(s.speed_limit_kmh);
  p.limit_ms = s.speed_limit_kmh * 0.277778;
  p.v_ms = s.ego.speed_kmh * 0.277778;
  if (rng.chance(0.15)) p.v_ms *= 1.03;  // arithmetic slip
  p.seconds = rng.between(3, 6);
  p.decel = (p.limit_ms - p.v_ms) / p.seconds;
  if (rng.chance(0.15)) p.decel *= 1.1;

  out << "First, convert the speeds to meters per second.\n\n";
  out << "1 km/h = 0.277778 m/s\n\n";
  out << lim << " km/h = " << lim << " × 0.277778 = " << f4(p.limit_ms) << " m/s\n\n";
  out << v << " km/h = " << v << " × 0.277778 = " << f4(p.v_ms) << " m/s\n\n";
  out << "To reach the speed limit in " << p.seconds << " seconds, the required deceleration is a = ("
      << f4(p.limit_ms) << " - " << f4(p.v_ms) << ") / " << p.seconds << " s = " << f4(p.decel) << " m/s².\n\n";
  return p;
}

std::string arithmetic_reply(const Scenario& s, Rng& rng) {
  std::ostringstream out;
  const Plan p = plan_deceleration(s, rng, out);
  const double a = std::fabs(p.decel);
  out << "Using v = u - a · t, the speed for every subsequent second is:\n\n";
  for (int k = 1; k <= p.seconds; ++k) {
    double vk = std::max(0.0, p.v_ms - a * k);
    if (rng.chance(0.12)) vk -= a;  // subtracted twice
    out << "t = " << k << " s: " << f4(vk) << " m/s\n";
  }
  out << "\nAfter " << p.seconds << " seconds you will be travelling at about " << format_shortest(s.speed_limit_kmh)
      << " km/h, which complies with the limit.";
  return out.str();
}

std::string hybrid_reply(const Scenario& s, Rng& rng) {
  std::ostringstream out;
  out << "Slow down to the speed limit and keep the " << s.primary().label() << " in view.\n\n";
  const Plan p = plan_deceleration(s, rng, out);
  const double a = std::fabs(p.decel);
  const bool mixes = rng.chance(0.4);
  out << "For each second, the speed is:\n\n";
  std::vector<std::string> speeds;
  double prev = s.ego.speed_kmh;
  for (int k = 1; k <= p.seconds; ++k) {
    const double next = mixes ? prev - a : prev - a * 3.6;
    if (mixes) {
      out << "v_" << k << " = " << f4(prev) << " km/h - " << f4(a) << " m/s² · 1 s = " << f4(next) << " km/h\n";
    } else {
      out << "v_" << k << " = " << f4(prev) << " km/h - " << f4(a * 3.6) << " km/h = " << f4(next) << " km/h\n";
    }
    speeds.push_back(f4(next));
    prev = next;
  }
  const bool truncate = rng.chance(0.2) && speeds.size() > 2;
  out << "\nThe SPEED_LIST would be [";
  const std::size_t shown = truncate ? speeds.size() - 1 : speeds.size();
  for (std::size_t i = 0; i < shown; ++i) out << (i ? ", " : "") << speeds[i];
  out << (truncate ? ", ...]" : "]") << ".\n\n";

  const double brake = std::min(1.0, a / 1.0);
  out << "Assuming a full brake gives 1 m/s², apply a brake value of " << f4(brake) << " for each of the "
      << p.seconds << " seconds.\n\n";
  out << "So the BRAKE_LIST would be [";
  for (int k = 0; k < p.seconds; ++k) out << (k ? ", " : "") << f4(brake);
  out << "]";
  return out.str();
}

class MockBackend final : public ChatBackend {
 public:
  MockBackend(std::vector<Scenario> scenarios, std::uint64_t seed) : scenarios_(std::move(scenarios)), seed_(seed) {}

  BackendKind kind() const override { return BackendKind::mock; }

  std::string complete(const ChatRequest& req) override {
    const Scenario* s = find_scenario(scenarios_, req.scenario_id);
    if (s == nullptr) {
      throw GatewayError(GatewayErrorKind::missing_record, req.scenario_id, "mock backend has no such scenario");
    }
    if (req.sample_index == 0) {
      if (auto recorded = recorded_answer(req.scenario_id)) return std::string(*recorded);
    }
    Rng rng(seed_ ^ fnv1a64(req.scenario_id) ^
            (static_cast<std::uint64_t>(req.sample_index) + 1) * 0x9E3779B97F4A7C15ull);
    switch (s->reasoning_kind) {
      case ReasoningKind::common_sense: return common_sense_reply(*s, rng);
      case ReasoningKind::arithmetic: return arithmetic_reply(*s, rng);
      case ReasoningKind::hybrid: return hybrid_reply(*s, rng);
    }
    return common_sense_reply(*s, rng);
  }

 private:
  std::vector<Scenario> scenarios_;
  std::uint64_t seed_;
};

}  // namespace

std::unique_ptr<ChatBackend> make_mock_backend(std::vector<Scenario> scenarios, std::uint64_t seed) {
  return std::make_unique<MockBackend>(std::move(scenarios), seed);
}

}  // namespace llmdrive
