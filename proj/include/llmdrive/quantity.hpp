#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace llmdrive {

enum class Unit { kmh, ms, ms2, m, s, dimensionless };

/// Canonical spelling: "km/h", "m/s", "m/s^2", "m", "s", "1".
std::string_view unit_name(Unit u) noexcept;
std::optional<Unit> unit_from_name(std::string_view name) noexcept;

/// A finite value tagged with one of the six supported units.
struct Quantity {
  double value = 0.0;
  Unit unit = Unit::dimensionless;

  /// Throws ValidationError when `value` is NaN or infinite.
  static Quantity make(double value, Unit unit);

  friend bool operator==(const Quantity&, const Quantity&) = default;
};

/// True for units that measure speed (km/h, m/s).
constexpr bool is_speed(Unit u) noexcept { return u == Unit::kmh || u == Unit::ms; }

}  // namespace llmdrive
