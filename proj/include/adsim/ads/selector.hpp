#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>

#include "adsim/ads/item.hpp"

namespace adsim::ads {

/// Minimal query language: category membership plus exact-match payload
/// attributes.
struct Selector {
  std::set<Category> categories;
  Attributes predicate;  // every key=value here must appear in the payload
  std::optional<std::uint32_t> max_results;

  bool matches(const InfoItem& item) const;
  std::string describe() const;

  friend bool operator==(const Selector&, const Selector&) = default;
};

}  // namespace adsim::ads
