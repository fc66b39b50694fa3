#include "adsim/routing/router.hpp"

namespace adsim::routing {

namespace {
sim::Fields describe(const RoutedMessage& m) {
  sim::Fields f;
  f.add("msg", to_string(m.msg_id)).add("inner", inner_name(m.inner)).add("hops", m.hop_count);
  return f;
}
}  // namespace

Router::Router(NodeId self, sim::Kernel& kernel, Hooks hooks, std::size_t seen_capacity)
    : self_(self), kernel_(kernel), hooks_(std::move(hooks)), seen_(seen_capacity), delivered_(seen_capacity) {}

std::vector<std::pair<NodeId, Position>> Router::relay_neighbors() const {
  std::vector<std::pair<NodeId, Position>> out;
  for (NodeId n : kernel_.neighbors(self_)) {
    if (!hooks_.relay_ok || hooks_.relay_ok(n)) out.emplace_back(n, kernel_.position(n));
  }
  return out;
}

void Router::drop(const RoutedMessage& msg, std::string_view reason) {
  kernel_.trace().record(kernel_.now(), self_, "DROP", describe(msg).add("reason", reason));
}

void Router::originate(RoutedMessage msg) {
  const Region& r = msg.dest_region;
  kernel_.trace().record(kernel_.now(), self_, "ROUTE",
                         describe(msg).add("cx", r.center.x).add("cy", r.center.y).add("r", r.radius));
  process(std::move(msg), std::nullopt);
}

void Router::receive(NodeId from, RoutedMessage msg) {
  if (hooks_.acknowledge) hooks_.acknowledge(from, msg.msg_id, msg.hop_count);
  if (seen_.touch({msg.msg_id, msg.hop_count})) return;  // retransmission after a lost ACK
  if (delivered_.contains(msg.msg_id) || buffer_.count(msg.msg_id) != 0) {
    drop(msg, "duplicate");
    return;
  }
  process(std::move(msg), std::nullopt);
}

void Router::on_ack(const MsgId& id, std::uint32_t hop) {
  auto it = buffer_.find(id);
  if (it != buffer_.end() && it->second.state == State::AwaitAck && it->second.msg.hop_count + 1 == hop) {
    buffer_.erase(it);
  }
}

void Router::process(RoutedMessage msg, std::optional<State> previous) {
  const auto nbrs = relay_neighbors();
  const Decision d = decide(msg, self_, kernel_.position(self_), kernel_.now(), nbrs);
  const MsgId id = msg.msg_id;
  switch (d.action) {
    case Action::DropExpired:
    case Action::DropHopLimit:
      drop(msg, action_name(d.action));
      buffer_.erase(id);
      return;
    case Action::Deliver: {
      const Delivery result = hooks_.deliver ? hooks_.deliver(self_, msg) : Delivery::Consumed;
      if (result == Delivery::Consumed) {
        delivered_.touch(id);
        kernel_.trace().record(kernel_.now(), self_, "DELIVER", describe(msg));
        buffer_.erase(id);
        return;
      }
      if (previous != State::Held) kernel_.trace().record(kernel_.now(), self_, "CARRY", describe(msg).add("state", "held"));
      auto& c = buffer_[id];
      c.state = State::Held;
      c.msg = std::move(msg);
      return;
    }
    case Action::Forward: {
      RoutedMessage copy = msg;
      ++copy.hop_count;
      hooks_.transmit(d.next, copy);
      auto& c = buffer_[id];
      c.state = State::AwaitAck;
      c.sent_to = d.next;
      c.sent_at = kernel_.now();
      c.msg = std::move(msg);
      return;
    }
    case Action::Carry: {
      if (previous != State::Carry) kernel_.trace().record(kernel_.now(), self_, "CARRY", describe(msg).add("state", "carry"));
      auto& c = buffer_[id];
      c.state = State::Carry;
      c.msg = std::move(msg);
      return;
    }
  }
}

void Router::tick() {
  // Acks return after two hop latencies; anything older is presumed lost.
  const double ack_timeout = 4.0 * kernel_.config().radio.latency_per_hop;
  std::vector<MsgId> ids;
  ids.reserve(buffer_.size());
  for (const auto& [id, c] : buffer_) ids.push_back(id);
  for (const MsgId& id : ids) {
    auto it = buffer_.find(id);
    if (it == buffer_.end()) continue;
    Custody& c = it->second;
    if (c.state == State::AwaitAck && kernel_.now() - c.sent_at < ack_timeout) continue;
    const State previous = c.state;
    RoutedMessage msg = c.msg;
    process(std::move(msg), previous);
  }
}

}  // namespace adsim::routing
