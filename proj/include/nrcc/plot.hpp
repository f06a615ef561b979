#pragma once

#include <string>

#include "nrcc/sweep.hpp"

namespace nrcc {

/// Peak cap and downward rating against the budget increment, next to the
/// rebound bound of each governance variant.
std::string render_frontier_svg(const ProductMenu& menu);

/// Substation netload under the sustained down-call for each variant against
/// the baseline, with the service, protected and rebound sets shaded. Uses the
/// last tier with a solved profile when `tier` is negative.
std::string render_profiles_svg(const ProductMenu& menu, int tier = -1);

}  // namespace nrcc
