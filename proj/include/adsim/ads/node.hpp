#pragma once

#include <cstdint>
#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "adsim/ads/query.hpp"
#include "adsim/ads/store.hpp"
#include "adsim/market/descriptor.hpp"
#include "adsim/market/selection.hpp"
#include "adsim/routing/router.hpp"
#include "adsim/sim/kernel.hpp"
#include "adsim/wire/messages.hpp"

namespace adsim::ads {

struct Profile {
  NodeId node;
  std::set<Category> interests;
  std::uint32_t exchange_budget = 10;  // max items accepted per encounter
};

struct NodeParams {
  double exchange_interval = 30.0;  // min seconds between exchanges with one peer
  std::uint32_t hop_limit = 32;
  double publish_ttl = 1800.0;  // carry deadline for publications
  market::SelectionWeights weights;
};

enum class QueryState { Pending, Expired };

struct ResultStatus {
  std::vector<InfoItem> items;
  std::uint32_t chunks = 0;
  QueryState state = QueryState::Pending;
};

/// The ADS middleware instance running on one device.
class Node {
 public:
  using SyncCallback = std::function<void(std::vector<InfoItem>)>;

  Node(NodeId self, sim::Kernel& kernel, routing::Router& router, Profile profile, NodeParams params = {});
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  NodeId id() const { return self_; }
  const Profile& profile() const { return profile_; }
  ItemStore& store() { return store_; }
  const ItemStore& store() const { return store_; }
  const market::Directory& known_markets() const { return known_; }

  /// Restricts which neighbors take part in exchanges and neighborhood queries.
  void set_peer_filter(std::function<bool(NodeId)> is_peer) { is_peer_ = std::move(is_peer); }

  // --- local data ------------------------------------------------------------
  /// Creates a fresh item originated here (version 0) and stores it. A
  /// `counter` pins the item id; later automatic ids skip past it.
  InfoItem create_item(Category category, Attributes payload, std::optional<std::uint32_t> counter = std::nullopt);
  /// Keeps automatic item counters at or above `n` (ids below are pinned by a script).
  void reserve_item_ids(std::uint32_t n) { next_item_ = std::max(next_item_, n); }
  /// New version of an item originated here. Throws InvalidArgument otherwise.
  InfoItem update_item(const ItemId& id, Attributes payload);
  PutOutcome put_local(const InfoItem& item, std::string_view via = "local");
  std::vector<InfoItem> query_local(const Selector& sel) const { return store_.query(sel); }

  // --- synchronous neighborhood query -----------------------------------------
  /// Local results merged with replies from nodes within `hop_radius` hops
  /// that arrive before `timeout` elapses; `done` fires at the timeout.
  QueryId query_sync(const Selector& sel, double timeout, std::uint32_t hop_radius, SyncCallback done);

  // --- en-passant exchange ------------------------------------------------------
  bool exchange_due(NodeId peer) const;
  void start_exchange(NodeId peer);

  // --- asynchronous smart remote queries -------------------------------------
  /// Throws NoKnownMarket when no descriptor is known.
  QueryId launch_asrq(const Selector& sel, double ttl, const MovementPlan& plan,
                      std::optional<std::uint32_t> expected_results = std::nullopt);
  void accept_chunk(const ResultChunk& chunk);
  /// Routes `item` to the best fitting known market. Throws NoKnownMarket.
  MarketId publish(const InfoItem& item);
  /// Throws UnknownQuery for ids not launched here.
  ResultStatus collect_results(const QueryId& id) const;

  // --- market knowledge -----------------------------------------------------------
  /// Merges a descriptor; on news, floods it to neighbors other than `from`.
  bool learn_descriptor(const market::MarketDescriptor& d, std::string_view source,
                        std::optional<NodeId> from = std::nullopt);
  void on_link_gained(NodeId peer, bool peer_is_support);

  void receive(NodeId from, const wire::Message& m);

 private:
  struct SyncQuery {
    Selector selector;
    std::map<ItemId, InfoItem> remote;
    SyncCallback done;
    bool finished = false;
  };
  struct Relay {
    NodeId parent;
    double deadline = 0.0;
  };
  struct Pending {
    Asrq asrq;
    MarketId market;
    std::set<ItemId> items;
    std::set<std::pair<MarketId, std::uint32_t>> chunks;
  };

  bool send(NodeId to, const wire::Message& m) { return wire::transmit(kernel_, self_, to, m); }
  bool peer_ok(NodeId n) const { return !is_peer_ || is_peer_(n); }
  void trace(std::string_view kind, const sim::Fields& f);
  void send_profile(NodeId to, bool reply_requested);
  void send_items_paced(NodeId peer, std::vector<ItemId> ids);

  void on_profile(NodeId from, const wire::ProfileMsg& m);
  void on_digest(NodeId from, const wire::DigestMsg& m);
  void on_items(NodeId from, const wire::ItemsMsg& m);
  void on_sync_query(NodeId from, const wire::SyncQueryMsg& m);
  void on_sync_reply(NodeId from, const wire::SyncReplyMsg& m);
  void finish_sync(const QueryId& id);

  NodeId self_;
  sim::Kernel& kernel_;
  routing::Router& router_;
  Profile profile_;
  NodeParams params_;
  std::function<bool(NodeId)> is_peer_;

  ItemStore store_;
  market::Directory known_;
  std::uint32_t next_item_ = 0;
  std::uint32_t next_query_ = 0;

  std::map<NodeId, Profile> peer_profiles_;
  std::map<NodeId, double> last_exchange_;
  /// Per peer, fingerprints of copies the peer is known to hold (or to
  /// dominate): sent with a link-layer ack, or received equal to ours.
  std::map<NodeId, std::map<ItemId, std::uint64_t>> peer_has_;

  std::map<QueryId, SyncQuery> sync_;
  std::map<QueryId, Relay> relays_;
  std::map<QueryId, Pending> asrqs_;
};

}  // namespace adsim::ads
