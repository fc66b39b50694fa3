#include "adsim/market/selection.hpp"

#include <algorithm>

#include "adsim/core/error.hpp"

namespace adsim::market {

bool merge_descriptor(Directory& dir, const MarketDescriptor& d) {
  auto [it, inserted] = dir.emplace(d.market_id, d);
  if (inserted) return true;
  if (d.advertised_at > it->second.advertised_at) {
    it->second = d;
    return true;
  }
  return false;
}

double selection_score(const std::set<ads::Category>& categories, const MarketDescriptor& m, Position from,
                       double d_max, SelectionWeights w) {
  double overlap = 0.0;
  for (const auto& c : categories) overlap += m.categories.count(c) != 0 ? 1.0 : 0.0;
  const double fit = categories.empty() ? 0.0 : overlap / static_cast<double>(categories.size());
  const double nd = d_max > 0.0 ? distance(from, m.region.center) / d_max : 0.0;
  return w.w_cat * fit - w.w_dist * nd;
}

const MarketDescriptor& select_market(const std::set<ads::Category>& categories, Position from,
                                      std::span<const MarketDescriptor> known, SelectionWeights w) {
  if (known.empty()) throw NoKnownMarket("no market descriptor known");
  double d_max = 0.0;
  for (const auto& m : known) d_max = std::max(d_max, distance(from, m.region.center));
  const MarketDescriptor* best = nullptr;
  double best_score = 0.0;
  for (const auto& m : known) {
    const double s = selection_score(categories, m, from, d_max, w);
    if (best == nullptr || s > best_score + 1e-12 ||
        (s >= best_score - 1e-12 && m.market_id < best->market_id)) {
      best = &m;
      best_score = s;
    }
  }
  return *best;
}

}  // namespace adsim::market
