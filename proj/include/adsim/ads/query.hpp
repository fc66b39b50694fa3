#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adsim/ads/item.hpp"
#include "adsim/ads/plan.hpp"
#include "adsim/ads/selector.hpp"
#include "adsim/market/descriptor.hpp"

namespace adsim::ads {

struct QueryId {
  NodeId initiator;
  std::uint32_t seq = 0;
  friend auto operator<=>(const QueryId&, const QueryId&) = default;
};

std::string to_string(const QueryId& id);

/// Asynchronous smart remote query: travels to a market and stays registered
/// there until launched_at + ttl.
struct Asrq {
  QueryId query_id;
  NodeId initiator;
  Selector selector;
  double launched_at = 0.0;
  double ttl = 0.0;
  MovementPlan plan;
  std::optional<std::uint32_t> expected_results;
  std::vector<market::MarketDescriptor> known_markets;

  double expires_at() const { return launched_at + ttl; }
  bool active_at(double t) const { return t <= expires_at(); }

  friend bool operator==(const Asrq&, const Asrq&) = default;
};

struct ResultChunk {
  QueryId query_id;
  std::uint32_t chunk_seq = 0;
  std::vector<InfoItem> items;
  MarketId from_market;
  std::vector<market::MarketDescriptor> piggyback;

  friend bool operator==(const ResultChunk&, const ResultChunk&) = default;
};

}  // namespace adsim::ads
