#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "adsim/ads/store.hpp"
#include "adsim/market/descriptor.hpp"
#include "adsim/sim/kernel.hpp"
#include "adsim/wire/messages.hpp"

namespace adsim::market {
class Market;
}

namespace adsim::support {

struct SupportParams {
  std::uint32_t density_threshold = 3;  // members below this trigger absorption
  std::uint32_t recovery_ticks = 2;     // ticks at or above threshold before re-seeding
};

/// Stationary storage-only device: backs up market pools when density drops
/// and serves the market directory to devices passing by. Never routes.
class SupportNode {
 public:
  SupportNode(NodeId self, sim::Kernel& kernel, SupportParams params = {});

  NodeId id() const { return self_; }
  const ads::ItemStore& store() const { return store_; }
  const market::Directory& directory() const { return directory_; }

  /// Newest descriptor per market.
  std::vector<market::MarketDescriptor> lookup_markets() const;
  bool learn(const market::MarketDescriptor& d, NodeId from);

  /// Called by each market the node sits in, once per tick after membership
  /// and replica repair. Returns the number of items absorbed this tick.
  std::size_t observe(market::Market& m);

  /// Pool items absorbed while density was low and not yet re-seeded.
  const std::set<ads::ItemId>& absorbed(MarketId m) const;

  void receive(NodeId from, const wire::Message& msg);

 private:
  struct Watch {
    std::set<ads::ItemId> absorbed;
    std::uint32_t ticks_above = 0;
  };

  NodeId self_;
  sim::Kernel& kernel_;
  SupportParams params_;
  ads::ItemStore store_;
  market::Directory directory_;
  std::map<MarketId, Watch> watch_;
};

}  // namespace adsim::support
