#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "llmdrive/scenario.hpp"

namespace llmdrive {

// JSONL trace: one UTF-8 JSON object per line with the fields
//   speed_kmh, object_class, confidence_pct, distance_m, location, direction, weather
// and optionally id, reasoning_kind (default "hybrid"), speed_limit_kmh, seed.
// Blank lines are ignored. `weather` must name a built-in preset.

struct TraceError {
  long line = 0;  // 1-based
  std::string message;
};

struct TraceIngest {
  std::vector<Scenario> scenarios;
  std::vector<TraceError> errors;

  bool ok() const noexcept { return errors.empty(); }
};

/// Single pass; valid records become scenarios, malformed ones are reported
/// with their line number and skipped.
TraceIngest ingest_trace(std::istream& in);

/// Writes each scenario's primary detection as one trace record.
void export_trace(const std::vector<Scenario>& scenarios, std::ostream& out);

}  // namespace llmdrive
