#include "adsim/ads/plan.hpp"

#include "adsim/core/error.hpp"

namespace adsim::ads {

const Region& MovementPlan::region_at(double t) const {
  if (entries.empty()) throw InvalidArgument("region_at on an empty movement plan");
  for (const auto& e : entries) {
    if (e.from <= t && t < e.to) return e.region;
  }
  return entries.back().region;
}

std::vector<std::string> MovementPlan::problems() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (!(e.to > e.from)) out.push_back("plan entry " + std::to_string(i) + " has an empty interval");
    if (!(e.region.radius > 0.0)) out.push_back("plan entry " + std::to_string(i) + " has a non-positive radius");
    if (i > 0) {
      const auto& prev = entries[i - 1];
      if (e.from < prev.to) out.push_back("plan entry " + std::to_string(i) + " overlaps its predecessor");
      if (e.from > prev.to) out.push_back("plan entry " + std::to_string(i) + " leaves a gap after its predecessor");
    }
  }
  return out;
}

}  // namespace adsim::ads
