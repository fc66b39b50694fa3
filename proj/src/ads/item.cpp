#include "adsim/ads/item.hpp"

#include <charconv>
#include <tuple>

#include "adsim/core/hash.hpp"

namespace adsim::ads {

std::string to_string(const ItemId& id) {
  return std::to_string(id.origin.value) + ":" + std::to_string(id.counter);
}

std::optional<ItemId> parse_item_id(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  std::uint32_t origin = 0;
  std::uint32_t counter = 0;
  const auto a = std::from_chars(text.data(), text.data() + colon, origin);
  const auto b = std::from_chars(text.data() + colon + 1, text.data() + text.size(), counter);
  if (a.ec != std::errc{} || a.ptr != text.data() + colon) return std::nullopt;
  if (b.ec != std::errc{} || b.ptr != text.data() + text.size() || colon + 1 == text.size()) return std::nullopt;
  return ItemId{NodeId{origin}, counter};
}

Evaluation merge(const Evaluation& a, const Evaluation& b) {
  if (a.at != b.at) return a.at > b.at ? a : b;
  return a.rating >= b.rating ? a : b;
}

InfoItem merge(const InfoItem& a, const InfoItem& b, bool* anomaly) {
  if (anomaly != nullptr) *anomaly = false;
  if (a.version != b.version) return a.version > b.version ? a : b;
  const auto key = [](const InfoItem& i) { return std::tie(i.origin, i.category, i.payload, i.created_at); };
  if (anomaly != nullptr) *anomaly = key(a) != key(b);
  const bool a_wins = key(a) >= key(b);
  InfoItem out = a_wins ? a : b;
  const InfoItem& other = a_wins ? b : a;
  for (const auto& [who, ev] : other.evaluations) {
    auto [it, inserted] = out.evaluations.emplace(who, ev);
    if (!inserted) it->second = merge(it->second, ev);
  }
  return out;
}

std::uint64_t fingerprint(const InfoItem& item) {
  Fnv1a h;
  h.update(item.category);
  h.update_u64(item.version);
  h.update_u64(item.origin.value);
  h.update_u64(static_cast<std::uint64_t>(item.created_at * 1000.0));
  for (const auto& [k, v] : item.payload) {
    h.update(k);
    h.update("=");
    h.update(v);
    h.update(";");
  }
  for (const auto& [who, ev] : item.evaluations) {
    h.update_u64(who.value);
    h.update_u64(static_cast<std::uint64_t>(ev.rating + 2));
    h.update_u64(static_cast<std::uint64_t>(ev.at * 1000.0));
  }
  return h.digest();
}

}  // namespace adsim::ads
