#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "adsim/core/ids.hpp"

namespace adsim::ads {

/// Globally unique: origin node plus a counter local to that origin.
struct ItemId {
  NodeId origin;
  std::uint32_t counter = 0;
  friend auto operator<=>(const ItemId&, const ItemId&) = default;
};

std::string to_string(const ItemId& id);  // "origin:counter"
std::optional<ItemId> parse_item_id(std::string_view text);

using Category = std::string;
using Attributes = std::map<std::string, std::string>;

struct Evaluation {
  int rating = 1;  // -1 or +1
  double at = 0.0;
  friend bool operator==(const Evaluation&, const Evaluation&) = default;
};

struct InfoItem {
  ItemId id;
  Category category;
  Attributes payload;
  double created_at = 0.0;
  std::uint32_t version = 0;
  NodeId origin;
  std::map<NodeId, Evaluation> evaluations;  // one per evaluating node

  friend bool operator==(const InfoItem&, const InfoItem&) = default;
};

/// Per-evaluator register merge: the later evaluation wins, higher rating on
/// equal timestamps.
Evaluation merge(const Evaluation& a, const Evaluation& b);

/// Deterministic, commutative, idempotent merge of two copies of one item.
/// Higher version wins outright. Equal versions union their evaluations; if
/// their content differs the copy with the greater (origin, category,
/// payload, created_at) wins and `anomaly` is set.
InfoItem merge(const InfoItem& a, const InfoItem& b, bool* anomaly = nullptr);

/// Hash over content and evaluations, used in exchange digests.
std::uint64_t fingerprint(const InfoItem& item);

}  // namespace adsim::ads
