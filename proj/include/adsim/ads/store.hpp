#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "adsim/ads/item.hpp"
#include "adsim/ads/selector.hpp"

namespace adsim::ads {

struct DigestEntry {
  ItemId id;
  std::uint32_t version = 0;
  std::uint64_t fingerprint = 0;
  bool tombstone = false;  // hidden locally; never send it here
  friend bool operator==(const DigestEntry&, const DigestEntry&) = default;
};

enum class PutResult { Inserted, Upgraded, Merged, Unchanged, Rejected };

struct PutOutcome {
  PutResult result = PutResult::Unchanged;
  bool anomaly = false;
  std::uint32_t version = 0;  // version held after the put
};

/// A node's item store. Items are never evicted; hidden items keep a
/// tombstone so they are neither served nor re-acquired.
class ItemStore {
 public:
  struct Entry {
    InfoItem item;
    bool hidden = false;
    std::uint64_t fingerprint = 0;  // of `item`, kept current on every change
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  PutOutcome put(const InfoItem& item);

  /// Visible items matching `sel`, ordered by (created_at, id), truncated to
  /// max_results.
  std::vector<InfoItem> query(const Selector& sel) const;

  const InfoItem* find(const ItemId& id) const;
  const InfoItem* find_visible(const ItemId& id) const;
  bool contains(const ItemId& id) const { return entries_.count(id) != 0; }

  bool hide(const ItemId& id);
  bool hidden(const ItemId& id) const;

  /// Records or replaces `evaluator`'s rating; false if the item is unknown or hidden.
  bool evaluate(const ItemId& id, NodeId evaluator, int rating, double at);

  std::vector<DigestEntry> digest(const std::set<Category>& categories) const;

  const std::map<ItemId, Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::uint64_t revision() const { return revision_; }

  friend bool operator==(const ItemStore& a, const ItemStore& b) { return a.entries_ == b.entries_; }

 private:
  std::map<ItemId, Entry> entries_;
  std::uint64_t revision_ = 0;
};

}  // namespace adsim::ads
