#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "adsim/ads/item.hpp"
#include "adsim/core/hash.hpp"

namespace adsim::market {

/// Highest-random-weight score of `member` for `item`.
inline std::uint64_t rendezvous_score(const ads::ItemId& item, NodeId member) {
  std::uint64_t h = hash_combine(item.origin.value, item.counter);
  return hash_combine(h, member.value);
}

/// The min(k, |members|) members with the highest scores, ascending by id.
inline std::vector<NodeId> rendezvous_top(const ads::ItemId& item, std::span<const NodeId> members, std::size_t k) {
  std::vector<std::pair<std::uint64_t, NodeId>> ranked;
  ranked.reserve(members.size());
  for (NodeId m : members) ranked.emplace_back(rendezvous_score(item, m), m);
  const std::size_t n = std::min(k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n), ranked.end(),
                    [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
  std::vector<NodeId> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(ranked[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace adsim::market
