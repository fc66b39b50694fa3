#include "adsim/ads/store.hpp"

#include <algorithm>
#include <tuple>

namespace adsim::ads {

bool Selector::matches(const InfoItem& item) const {
  if (categories.count(item.category) == 0) return false;
  for (const auto& [k, v] : predicate) {
    auto it = item.payload.find(k);
    if (it == item.payload.end() || it->second != v) return false;
  }
  return true;
}

std::string Selector::describe() const {
  std::string out;
  for (const auto& c : categories) out += (out.empty() ? "" : ",") + c;
  for (const auto& [k, v] : predicate) out += "|" + k + ":" + v;
  return out;
}

PutOutcome ItemStore::put(const InfoItem& item) {
  auto it = entries_.find(item.id);
  if (it == entries_.end()) {
    entries_.emplace(item.id, Entry{item, false, fingerprint(item)});
    ++revision_;
    return {PutResult::Inserted, false, item.version};
  }
  Entry& e = it->second;
  if (e.hidden) return {PutResult::Rejected, false, e.item.version};
  bool anomaly = false;
  InfoItem merged = merge(e.item, item, &anomaly);
  if (merged == e.item) return {PutResult::Unchanged, anomaly, e.item.version};
  const bool upgraded = merged.version > e.item.version;
  e.item = std::move(merged);
  e.fingerprint = fingerprint(e.item);
  ++revision_;
  return {upgraded ? PutResult::Upgraded : PutResult::Merged, anomaly, e.item.version};
}

std::vector<InfoItem> ItemStore::query(const Selector& sel) const {
  std::vector<const InfoItem*> hits;
  for (const auto& [id, e] : entries_) {
    if (!e.hidden && sel.matches(e.item)) hits.push_back(&e.item);
  }
  std::sort(hits.begin(), hits.end(), [](const InfoItem* a, const InfoItem* b) {
    return std::tie(a->created_at, a->id) < std::tie(b->created_at, b->id);
  });
  if (sel.max_results && hits.size() > *sel.max_results) hits.resize(*sel.max_results);
  std::vector<InfoItem> out;
  out.reserve(hits.size());
  for (const InfoItem* p : hits) out.push_back(*p);
  return out;
}

const InfoItem* ItemStore::find(const ItemId& id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second.item;
}

const InfoItem* ItemStore::find_visible(const ItemId& id) const {
  auto it = entries_.find(id);
  return (it == entries_.end() || it->second.hidden) ? nullptr : &it->second.item;
}

bool ItemStore::hide(const ItemId& id) {
  auto it = entries_.find(id);
  if (it == entries_.end() || it->second.hidden) return false;
  it->second.hidden = true;
  ++revision_;
  return true;
}

bool ItemStore::hidden(const ItemId& id) const {
  auto it = entries_.find(id);
  return it != entries_.end() && it->second.hidden;
}

bool ItemStore::evaluate(const ItemId& id, NodeId evaluator, int rating, double at) {
  auto it = entries_.find(id);
  if (it == entries_.end() || it->second.hidden) return false;
  it->second.item.evaluations[evaluator] = Evaluation{rating, at};
  it->second.fingerprint = fingerprint(it->second.item);
  ++revision_;
  return true;
}

std::vector<DigestEntry> ItemStore::digest(const std::set<Category>& categories) const {
  std::vector<DigestEntry> out;
  for (const auto& [id, e] : entries_) {
    if (categories.count(e.item.category) == 0) continue;
    out.push_back(DigestEntry{id, e.item.version, e.fingerprint, e.hidden});
  }
  return out;
}

}  // namespace adsim::ads
