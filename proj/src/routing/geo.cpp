#include "adsim/routing/geo.hpp"

#include <algorithm>

namespace adsim::routing {

std::string to_string(const MsgId& id) { return std::to_string(id.origin.value) + "." + std::to_string(id.seq); }

std::string_view inner_name(Inner kind) {
  switch (kind) {
    case Inner::Probe: return "PROBE";
    case Inner::Asrq: return "ASRQ";
    case Inner::Chunk: return "CHUNK";
    case Inner::Publish: return "PUB";
  }
  return "?";
}

std::string_view action_name(Action a) {
  switch (a) {
    case Action::Deliver: return "deliver";
    case Action::Forward: return "forward";
    case Action::Carry: return "carry";
    case Action::DropExpired: return "expired";
    case Action::DropHopLimit: return "hop_limit";
  }
  return "?";
}

std::optional<NodeId> next_hop(Position self_pos, const Region& dest, NeighborPositions neighbors) {
  std::optional<NodeId> best;
  double best_d = distance(self_pos, dest.center);
  for (const auto& [id, pos] : neighbors) {
    const double d = distance(pos, dest.center);
    if (d < best_d || (best && d == best_d && id < *best)) {
      best = id;
      best_d = d;
    }
  }
  return best;
}

Decision decide(const RoutedMessage& msg, NodeId at, Position at_pos, double now, NeighborPositions neighbors) {
  if (now > msg.carry_deadline) return {Action::DropExpired, {}};
  if (msg.dest_node && *msg.dest_node == at) return {Action::Deliver, {}};
  if (msg.dest_node) {
    const bool adjacent = std::any_of(neighbors.begin(), neighbors.end(),
                                      [&](const auto& n) { return n.first == *msg.dest_node; });
    if (adjacent) {
      if (msg.hop_count >= msg.hop_limit) return {Action::DropHopLimit, {}};
      return {Action::Forward, *msg.dest_node};
    }
  }
  if (msg.dest_region.contains(at_pos)) return {Action::Deliver, {}};
  const auto hop = next_hop(at_pos, msg.dest_region, neighbors);
  if (!hop) return {Action::Carry, {}};
  if (msg.hop_count >= msg.hop_limit) return {Action::DropHopLimit, {}};
  return {Action::Forward, *hop};
}

}  // namespace adsim::routing
