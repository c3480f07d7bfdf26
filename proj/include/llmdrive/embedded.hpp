#pragma once

#include <optional>
#include <string_view>
#include <vector>

namespace llmdrive::embedded {

// Text resources compiled into the library (prompt templates and the
// recorded answer fixtures). Keys are paths relative to the source tree,
// e.g. "templates/hybrid.txt".

std::optional<std::string_view> find(std::string_view key);
std::vector<std::string_view> keys();

}  // namespace llmdrive::embedded
