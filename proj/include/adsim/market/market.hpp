#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "adsim/ads/node.hpp"
#include "adsim/ads/query.hpp"
#include "adsim/market/descriptor.hpp"
#include "adsim/routing/geo.hpp"
#include "adsim/sim/kernel.hpp"

namespace adsim::support {
class SupportNode;
}

namespace adsim::market {

struct MarketParams {
  std::uint32_t k = 3;             // replication factor
  std::uint32_t chunk_size = 5;    // items per result chunk
  double refresh_interval = 300.0; // periodic descriptor refresh
  std::uint32_t hop_limit = 32;
};

/// One information market. Its state is spread over the member devices;
/// this object is the tick-synchronous model of their 1-hop gossip: it
/// tracks membership, the pool, replica placement, the query registry and
/// the descriptor. Items physically live in member stores.
class Market {
 public:
  struct Hooks {
    std::function<ads::Node*(NodeId)> node;  // null for non-ADS nodes
    /// Hands a routed message to `from`'s router (msg_id and origin are filled in there).
    std::function<void(NodeId from, routing::RoutedMessage)> originate;
  };

  struct Registered {
    ads::Asrq asrq;
    double registered_at = 0.0;
    std::set<ads::ItemId> sent;
    std::uint32_t next_seq = 0;
    bool closed = false;
    std::uint64_t serviced_rev = ~0ULL;
  };

  Market(MarketId id, Region region, sim::Kernel& kernel, MarketParams params, Hooks hooks,
         std::set<ads::Category> advertised = {});

  MarketId id() const { return id_; }
  const Region& region() const { return region_; }
  const MarketParams& params() const { return params_; }

  void attach_support(support::SupportNode* s) { supports_.push_back(s); }

  /// Per mobility tick: membership, replica repair, support back-up,
  /// query service and descriptor dissemination. `candidates` are all ADS
  /// nodes, ascending.
  void tick(std::span<const NodeId> candidates);

  /// A publication arrived at `at` (a member, or the publisher itself when
  /// already inside the region).
  void ingest(NodeId at, const ads::InfoItem& item);

  /// Returns false when the query had already expired or was registered before.
  bool register_query(NodeId at, const ads::Asrq& q);

  /// Re-inserts items held by a support node and places their replicas.
  /// Returns how many of them are held by members afterwards.
  std::size_t reseed(const std::vector<ads::InfoItem>& items);

  /// Freshest visible copy held in the region (members and attached
  /// support nodes).
  std::optional<ads::InfoItem> copy_of(const ads::ItemId& id) const;

  /// Merges another market's descriptor into what this market piggybacks.
  void learn(const MarketDescriptor& d);

  const std::vector<NodeId>& members() const { return members_; }
  const std::map<ads::ItemId, ads::Category>& pool() const { return pool_; }
  /// Members currently assigned (and holding) each pooled item.
  const std::map<ads::ItemId, std::vector<NodeId>>& holders() const { return holders_; }
  const MarketDescriptor& descriptor() const { return descriptor_; }
  const std::map<ads::QueryId, Registered>& registry() const { return registry_; }
  /// Whether every pooled item had its full replica set at the end of the last tick.
  bool healthy() const { return healthy_; }

 private:
  void update_membership(std::span<const NodeId> candidates);
  void place(const ads::ItemId& id, const std::vector<NodeId>& leavers);
  std::optional<ads::InfoItem> source_copy(const ads::ItemId& id, const std::vector<NodeId>& leavers) const;
  void service(Registered& r);
  void refresh_descriptor();
  void trace(std::optional<NodeId> node, std::string_view kind, sim::Fields& f);
  std::vector<MarketDescriptor> piggyback() const;

  MarketId id_;
  Region region_;
  sim::Kernel& kernel_;
  MarketParams params_;
  Hooks hooks_;
  std::set<ads::Category> advertised_;
  std::vector<support::SupportNode*> supports_;

  std::vector<NodeId> members_;
  bool membership_changed_ = false;
  std::map<ads::ItemId, ads::Category> pool_;
  std::uint64_t pool_rev_ = 0;
  std::map<ads::ItemId, std::vector<NodeId>> holders_;
  std::map<ads::QueryId, Registered> registry_;
  Directory known_;
  MarketDescriptor descriptor_;
  bool advertised_once_ = false;
  bool healthy_ = true;
  bool degraded_ = false;
};

}  // namespace adsim::market
