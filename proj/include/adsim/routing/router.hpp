#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "adsim/routing/geo.hpp"
#include "adsim/routing/lru.hpp"
#include "adsim/sim/kernel.hpp"

namespace adsim::routing {

enum class Delivery { Consumed, Hold };

/// Per-node custody buffer for routed messages: greedy forwarding with
/// hop-by-hop acknowledgement, falling back to store-carry-forward.
class Router {
 public:
  struct Hooks {
    std::function<void(NodeId to, const RoutedMessage&)> transmit;
    std::function<void(NodeId to, const MsgId&, std::uint32_t hop)> acknowledge;
    std::function<Delivery(NodeId at, const RoutedMessage&)> deliver;
    std::function<bool(NodeId)> relay_ok;
  };

  Router(NodeId self, sim::Kernel& kernel, Hooks hooks, std::size_t seen_capacity = 4096);

  MsgId next_msg_id() { return MsgId{self_, next_seq_++}; }

  void originate(RoutedMessage msg);
  void receive(NodeId from, RoutedMessage msg);
  void on_ack(const MsgId& id, std::uint32_t hop);
  /// Re-evaluates every buffered message (carried, held, or unacknowledged).
  void tick();

  std::size_t buffered() const { return buffer_.size(); }
  bool holds(const MsgId& id) const { return buffer_.count(id) != 0; }

 private:
  enum class State { Carry, Held, AwaitAck };
  struct Custody {
    RoutedMessage msg;
    State state = State::Carry;
    NodeId sent_to{};
    double sent_at = 0.0;
  };

  void process(RoutedMessage msg, std::optional<State> previous);
  std::vector<std::pair<NodeId, Position>> relay_neighbors() const;
  void drop(const RoutedMessage& msg, std::string_view reason);

  NodeId self_;
  sim::Kernel& kernel_;
  Hooks hooks_;
  std::uint32_t next_seq_ = 0;
  std::map<MsgId, Custody> buffer_;
  LruSet<std::pair<MsgId, std::uint32_t>> seen_;
  LruSet<MsgId> delivered_;
};

}  // namespace adsim::routing
