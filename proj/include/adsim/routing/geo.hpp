#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "adsim/core/geometry.hpp"
#include "adsim/core/ids.hpp"

namespace adsim::routing {

struct MsgId {
  NodeId origin;
  std::uint32_t seq = 0;
  friend auto operator<=>(const MsgId&, const MsgId&) = default;
};

std::string to_string(const MsgId& id);

/// Payload kinds carried inside a routed envelope.
enum class Inner : std::uint8_t { Probe = 0, Asrq = 1, Chunk = 2, Publish = 3 };
std::string_view inner_name(Inner kind);

struct RoutedMessage {
  MsgId msg_id;
  NodeId origin;
  Region dest_region;
  /// Final recipient, when the region is only where it is expected to be.
  std::optional<NodeId> dest_node;
  std::uint32_t hop_count = 0;
  std::uint32_t hop_limit = 32;
  double carry_deadline = 0.0;
  Inner inner = Inner::Probe;
  std::string payload;

  friend bool operator==(const RoutedMessage&, const RoutedMessage&) = default;
};

using NeighborPositions = std::span<const std::pair<NodeId, Position>>;

/// Greedy choice: the neighbor strictly closer to `dest.center` than
/// `self_pos` that minimises that distance, smallest id on ties.
std::optional<NodeId> next_hop(Position self_pos, const Region& dest, NeighborPositions neighbors);

enum class Action { Deliver, Forward, Carry, DropExpired, DropHopLimit };
std::string_view action_name(Action a);

struct Decision {
  Action action = Action::Carry;
  NodeId next{};
};

/// The forwarding decision for `msg` held at a node located at `at_pos`.
/// Expiry is checked first, then direct hand-off to `dest_node` when it is a
/// neighbor, then region containment, then greedy progress.
Decision decide(const RoutedMessage& msg, NodeId at, Position at_pos, double now, NeighborPositions neighbors);

}  // namespace adsim::routing
