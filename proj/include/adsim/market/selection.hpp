#pragma once

#include <optional>
#include <set>
#include <span>

#include "adsim/market/descriptor.hpp"

namespace adsim::market {

struct SelectionWeights {
  double w_cat = 1.0;
  double w_dist = 0.5;
};

/// Score of one candidate: w_cat * overlap / |categories| - w_dist * d / d_max,
/// where d is the distance from `from` to the market centre and d_max the
/// largest such distance among the candidates (0 when all coincide).
double selection_score(const std::set<ads::Category>& categories, const MarketDescriptor& m, Position from,
                       double d_max, SelectionWeights w);

/// Best-fitting market; ties (within 1e-12) go to the smallest market id.
/// Throws NoKnownMarket when `known` is empty.
const MarketDescriptor& select_market(const std::set<ads::Category>& categories, Position from,
                                      std::span<const MarketDescriptor> known, SelectionWeights w = {});

}  // namespace adsim::market
