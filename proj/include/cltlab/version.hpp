#pragma once

#include <array>
#include <string_view>
#include <utility>

namespace cltlab {

inline constexpr std::string_view kVersion = "0.1.0";

/// Per-module revision numbers, bumped whenever a module's numerical output
/// can change. Recorded in every CLI output header.
inline constexpr std::array<std::pair<std::string_view, int>, 6> kModuleVersions{{
    {"dioph", 1}, {"distkit", 1}, {"edgeworth", 1}, {"charfn", 1}, {"bounds", 1}, {"rates", 1}}};

}  // namespace cltlab
