#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>

namespace adsim {

// Thin tagged integer so node and market ids cannot be mixed up.
template <typename Tag>
struct StrongId {
  std::uint32_t value = 0;

  constexpr StrongId() = default;
  constexpr explicit StrongId(std::uint32_t v) : value(v) {}

  friend constexpr auto operator<=>(StrongId, StrongId) = default;
  friend std::ostream& operator<<(std::ostream& os, StrongId id) { return os << id.value; }
};

struct NodeTag {};
struct MarketTag {};

using NodeId = StrongId<NodeTag>;
using MarketId = StrongId<MarketTag>;

inline std::string to_string(NodeId id) { return std::to_string(id.value); }
inline std::string to_string(MarketId id) { return "m" + std::to_string(id.value); }

}  // namespace adsim

template <typename Tag>
struct std::hash<adsim::StrongId<Tag>> {
  std::size_t operator()(adsim::StrongId<Tag> id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
