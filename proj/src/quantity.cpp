#include "llmdrive/quantity.hpp"

#include <cmath>

#include "llmdrive/error.hpp"

namespace llmdrive {

std::string_view unit_name(Unit u) noexcept {
  switch (u) {
    case Unit::kmh: return "km/h";
    case Unit::ms: return "m/s";
    case Unit::ms2: return "m/s^2";
    case Unit::m: return "m";
    case Unit::s: return "s";
    case Unit::dimensionless: return "1";
  }
  return "1";
}

std::optional<Unit> unit_from_name(std::string_view name) noexcept {
  for (Unit u : {Unit::kmh, Unit::ms, Unit::ms2, Unit::m, Unit::s, Unit::dimensionless}) {
    if (unit_name(u) == name) return u;
  }
  if (name == "m/s²") return Unit::ms2;
  return std::nullopt;
}

Quantity Quantity::make(double value, Unit unit) {
  if (!std::isfinite(value)) {
    throw ValidationError("quantity value must be finite");
  }
  return Quantity{value, unit};
}

}  // namespace llmdrive
