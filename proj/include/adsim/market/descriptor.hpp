#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "adsim/ads/item.hpp"
#include "adsim/core/geometry.hpp"
#include "adsim/core/ids.hpp"

namespace adsim::market {

/// What a market advertises about itself.
struct MarketDescriptor {
  MarketId market_id;
  Region region;
  std::map<ads::Category, std::uint32_t> categories;  // category -> pooled item count
  double advertised_at = 0.0;

  friend bool operator==(const MarketDescriptor&, const MarketDescriptor&) = default;
};

using Directory = std::map<MarketId, MarketDescriptor>;

/// Keeps the descriptor with the newer advertised_at. Returns true when
/// `dir` changed.
bool merge_descriptor(Directory& dir, const MarketDescriptor& d);

}  // namespace adsim::market
