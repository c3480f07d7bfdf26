#pragma once

#include <string>

namespace llmdrive {

/// Shortest decimal text that parses back to exactly `v` ("40", "43.216779923988035").
std::string format_shortest(double v);

/// Fixed notation with `digits` decimals ("0.5333").
std::string format_fixed(double v, int digits);

/// Current wall-clock time as "2026-01-31T12:34:56Z".
std::string utc_now_iso8601();

}  // namespace llmdrive
