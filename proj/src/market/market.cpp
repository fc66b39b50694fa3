#include "adsim/market/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "adsim/market/rendezvous.hpp"
#include "adsim/support/support_node.hpp"
#include "adsim/wire/messages.hpp"

namespace adsim::market {

Market::Market(MarketId id, Region region, sim::Kernel& kernel, MarketParams params, Hooks hooks,
               std::set<ads::Category> advertised)
    : id_(id),
      region_(region),
      kernel_(kernel),
      params_(params),
      hooks_(std::move(hooks)),
      advertised_(std::move(advertised)) {
  descriptor_.market_id = id_;
  descriptor_.region = region_;
}

void Market::trace(std::optional<NodeId> node, std::string_view kind, sim::Fields& f) {
  kernel_.trace().record(kernel_.now(), node, kind, f);
}

void Market::tick(std::span<const NodeId> candidates) {
  const std::vector<NodeId> before = members_;
  update_membership(candidates);

  std::vector<NodeId> leavers;
  std::set_difference(before.begin(), before.end(), members_.begin(), members_.end(), std::back_inserter(leavers));

  // Replica repair. A full re-placement is only needed when membership moved
  // or a holder lost its copy (e.g. purged it as a fake).
  std::vector<ads::ItemId> ids;
  ids.reserve(pool_.size());
  for (const auto& [iid, cat] : pool_) ids.push_back(iid);
  const std::size_t want = std::min<std::size_t>(params_.k, members_.size());
  for (const ads::ItemId& iid : ids) {
    bool intact = !membership_changed_;
    if (intact) {
      const auto& hs = holders_[iid];
      intact = hs.size() == want && std::all_of(hs.begin(), hs.end(), [&](NodeId h) {
                 const ads::Node* n = hooks_.node(h);
                 return n != nullptr && n->store().find_visible(iid) != nullptr;
               });
    }
    if (!intact) place(iid, leavers);
  }

  for (support::SupportNode* s : supports_) s->observe(*this);

  healthy_ = true;
  std::size_t replicas = 0;
  for (const auto& [iid, cat] : pool_) {
    const auto& hs = holders_[iid];
    replicas += hs.size();
    if (hs.size() != want || hs != rendezvous_top(iid, members_, params_.k)) healthy_ = false;
  }
  const bool degraded = !members_.empty() && members_.size() < params_.k && !pool_.empty();
  if (degraded != degraded_) {
    degraded_ = degraded;
    sim::Fields f;
    f.add("market", id_).add("members", members_.size()).add("k", params_.k).add("on", degraded);
    trace(std::nullopt, "MKT_DEGRADED", f);
  }
  {
    sim::Fields f;
    f.add("market", id_)
        .add("members", members_.size())
        .add("pool", pool_.size())
        .add("replicas", replicas)
        .add("ok", healthy_)
        .add("churn", membership_changed_);
    trace(std::nullopt, "MKT_HEALTH", f);
  }

  // Query service.
  const double now = kernel_.now();
  for (auto it = registry_.begin(); it != registry_.end();) {
    if (!it->second.asrq.active_at(now)) {
      sim::Fields f;
      f.add("market", id_).add("query", ads::to_string(it->first)).add("sent", it->second.sent.size());
      trace(std::nullopt, "MKT_QEXP", f);
      it = registry_.erase(it);
      continue;
    }
    if (membership_changed_ || it->second.serviced_rev != pool_rev_) service(it->second);
    ++it;
  }

  // Other markets' descriptors seen by members are carried along as well.
  for (NodeId m : members_) {
    if (const ads::Node* n = hooks_.node(m)) {
      for (const auto& [mid, d] : n->known_markets()) {
        if (mid != id_) merge_descriptor(known_, d);
      }
    }
  }

  refresh_descriptor();
  for (NodeId m : members_) {
    if (ads::Node* n = hooks_.node(m)) n->learn_descriptor(descriptor_, "market");
  }
  for (NodeId l : leavers) {
    if (ads::Node* n = hooks_.node(l)) n->learn_descriptor(descriptor_, "market");
  }
  for (support::SupportNode* s : supports_) s->learn(descriptor_, s->id());
}

void Market::update_membership(std::span<const NodeId> candidates) {
  std::vector<NodeId> now_in;
  for (NodeId n : candidates) {
    if (region_.contains(kernel_.position(n))) now_in.push_back(n);
  }
  membership_changed_ = now_in != members_;
  if (!membership_changed_) return;

  std::vector<NodeId> joined;
  std::vector<NodeId> left;
  std::set_difference(now_in.begin(), now_in.end(), members_.begin(), members_.end(), std::back_inserter(joined));
  std::set_difference(members_.begin(), members_.end(), now_in.begin(), now_in.end(), std::back_inserter(left));
  for (NodeId n : joined) {
    sim::Fields f;
    f.add("market", id_).add("members", now_in.size());
    trace(n, "MKT_JOIN", f);
  }
  for (NodeId n : left) {
    sim::Fields f;
    f.add("market", id_).add("members", now_in.size());
    trace(n, "MKT_LEAVE", f);
  }
  members_ = std::move(now_in);
  if (members_.empty() && !registry_.empty()) {
    // The registry lives on member devices only.
    sim::Fields f;
    f.add("market", id_).add("queries", registry_.size());
    trace(std::nullopt, "MKT_QLOST", f);
    registry_.clear();
  }
}

std::optional<ads::InfoItem> Market::source_copy(const ads::ItemId& id, const std::vector<NodeId>& leavers) const {
  std::optional<ads::InfoItem> best;
  auto take = [&](const ads::InfoItem* item) {
    if (item == nullptr) return;
    best = best ? ads::merge(*best, *item) : *item;
  };
  for (NodeId m : members_) {
    if (const ads::Node* n = hooks_.node(m)) take(n->store().find_visible(id));
  }
  // A departing holder can still hand its copy over while a member hears it.
  for (NodeId l : leavers) {
    const ads::Node* n = hooks_.node(l);
    if (n == nullptr) continue;
    const bool heard = std::any_of(members_.begin(), members_.end(), [&](NodeId m) { return kernel_.in_range(l, m); });
    if (heard) take(n->store().find_visible(id));
  }
  for (const support::SupportNode* s : supports_) take(s->store().find_visible(id));
  return best;
}

std::optional<ads::InfoItem> Market::copy_of(const ads::ItemId& id) const { return source_copy(id, {}); }

void Market::place(const ads::ItemId& id, const std::vector<NodeId>& leavers) {
  std::optional<ads::InfoItem> copy = source_copy(id, leavers);
  if (!copy) {
    sim::Fields f;
    f.add("market", id_).add("item", ads::to_string(id));
    trace(std::nullopt, "MKT_LOST", f);
    pool_.erase(id);
    holders_.erase(id);
    ++pool_rev_;
    return;
  }
  std::vector<NodeId> placed;
  for (NodeId t : rendezvous_top(id, members_, params_.k)) {
    ads::Node* n = hooks_.node(t);
    if (n == nullptr) continue;
    const ads::PutOutcome out = n->put_local(*copy, "replica");
    if (out.result == ads::PutResult::Inserted || out.result == ads::PutResult::Upgraded) {
      sim::Fields f;
      f.add("market", id_).add("item", ads::to_string(id)).add("v", out.version);
      trace(t, "MKT_REPL", f);
    }
    if (out.result != ads::PutResult::Rejected) placed.push_back(t);
  }
  holders_[id] = std::move(placed);
}

void Market::ingest(NodeId at, const ads::InfoItem& item) {
  if (ads::Node* n = hooks_.node(at)) n->put_local(item, "pub");
  auto [it, fresh] = pool_.try_emplace(item.id, item.category);
  ++pool_rev_;
  sim::Fields f;
  f.add("market", id_).add("item", ads::to_string(item.id)).add("v", item.version).add("cat", item.category).add("new", fresh);
  trace(at, "MKT_PUB", f);
  // Publications carry the newest version, so push it to every holder.
  std::optional<ads::InfoItem> copy = source_copy(item.id, {});
  ads::InfoItem best = copy ? ads::merge(*copy, item) : item;
  std::vector<NodeId> placed;
  for (NodeId t : rendezvous_top(item.id, members_, params_.k)) {
    ads::Node* n = hooks_.node(t);
    if (n == nullptr) continue;
    const ads::PutOutcome out = n->put_local(best, "replica");
    if (out.result == ads::PutResult::Inserted || out.result == ads::PutResult::Upgraded) {
      sim::Fields g;
      g.add("market", id_).add("item", ads::to_string(item.id)).add("v", out.version);
      trace(t, "MKT_REPL", g);
    }
    if (out.result != ads::PutResult::Rejected) placed.push_back(t);
  }
  holders_[item.id] = std::move(placed);
  for (auto& [qid, r] : registry_) service(r);
}

bool Market::register_query(NodeId at, const ads::Asrq& q) {
  for (const MarketDescriptor& d : q.known_markets) {
    if (d.market_id != id_) merge_descriptor(known_, d);
  }
  sim::Fields f;
  f.add("market", id_).add("query", ads::to_string(q.query_id)).add("initiator", q.initiator);
  if (!q.active_at(kernel_.now())) {
    trace(at, "MKT_QEXP", f);
    return false;
  }
  if (registry_.count(q.query_id) != 0) {
    trace(at, "MKT_QDUP", f);
    return false;
  }
  f.add("sel", q.selector.describe()).add("expires", q.expires_at());
  trace(at, "MKT_QREG", f);
  Registered& r = registry_[q.query_id];
  r.asrq = q;
  r.registered_at = kernel_.now();
  service(r);
  return true;
}

std::vector<MarketDescriptor> Market::piggyback() const {
  std::vector<MarketDescriptor> out;
  out.reserve(known_.size() + 1);
  for (const auto& [mid, d] : known_) out.push_back(d);
  out.push_back(descriptor_);
  return out;
}

void Market::service(Registered& r) {
  r.serviced_rev = pool_rev_;
  if (r.closed || members_.empty() || r.asrq.plan.empty() || !r.asrq.active_at(kernel_.now())) return;
  const double now = kernel_.now();
  const Position predicted = r.asrq.plan.region_at(now).center;

  // The member nearest the initiator's predicted whereabouts answers.
  NodeId sender = members_.front();
  double best = std::numeric_limits<double>::infinity();
  for (NodeId m : members_) {
    const double d = distance(kernel_.position(m), predicted);
    if (d < best) {
      best = d;
      sender = m;
    }
  }
  const ads::Node* sender_node = hooks_.node(sender);

  std::vector<ads::InfoItem> matches;
  for (const auto& [iid, cat] : pool_) {
    if (r.sent.count(iid) != 0 || r.asrq.selector.categories.count(cat) == 0) continue;
    if (sender_node != nullptr && sender_node->store().hidden(iid)) continue;
    std::optional<ads::InfoItem> copy = copy_of(iid);
    if (copy && r.asrq.selector.matches(*copy)) matches.push_back(std::move(*copy));
  }
  if (matches.empty()) return;
  std::sort(matches.begin(), matches.end(), [](const ads::InfoItem& a, const ads::InfoItem& b) {
    return std::tie(a.created_at, a.id) < std::tie(b.created_at, b.id);
  });
  if (r.asrq.expected_results) {
    const std::size_t room = *r.asrq.expected_results > r.sent.size() ? *r.asrq.expected_results - r.sent.size() : 0;
    if (matches.size() > room) matches.resize(room);
  }
  if (r.asrq.selector.max_results) {
    const std::size_t room = *r.asrq.selector.max_results > r.sent.size() ? *r.asrq.selector.max_results - r.sent.size() : 0;
    if (matches.size() > room) matches.resize(room);
  }

  const sim::RadioModel& radio = kernel_.config().radio;
  const double hops = std::ceil(best / (0.8 * radio.range));
  const Region& target = r.asrq.plan.region_at(now + hops * radio.latency_per_hop);
  const std::size_t chunk = std::max<std::uint32_t>(params_.chunk_size, 1);

  for (std::size_t i = 0; i < matches.size(); i += chunk) {
    ads::ResultChunk c;
    c.query_id = r.asrq.query_id;
    c.chunk_seq = r.next_seq++;
    c.from_market = id_;
    c.piggyback = piggyback();
    for (std::size_t j = i; j < std::min(matches.size(), i + chunk); ++j) {
      r.sent.insert(matches[j].id);
      c.items.push_back(matches[j]);
    }
    sim::Fields f;
    f.add("market", id_)
        .add("query", ads::to_string(c.query_id))
        .add("seq", c.chunk_seq)
        .add("items", c.items.size())
        .add("cx", target.center.x)
        .add("cy", target.center.y);
    trace(sender, "MKT_CHUNK", f);

    routing::RoutedMessage msg;
    msg.dest_region = target;
    msg.dest_node = r.asrq.initiator;
    msg.hop_limit = params_.hop_limit;
    msg.carry_deadline = r.asrq.expires_at();
    msg.inner = routing::Inner::Chunk;
    msg.payload = wire::encode_chunk(c);
    hooks_.originate(sender, std::move(msg));
  }
  if (r.asrq.expected_results && r.sent.size() >= *r.asrq.expected_results) {
    r.closed = true;
    sim::Fields f;
    f.add("market", id_).add("query", ads::to_string(r.asrq.query_id)).add("sent", r.sent.size());
    trace(std::nullopt, "MKT_QDONE", f);
  }
}

std::size_t Market::reseed(const std::vector<ads::InfoItem>& items) {
  std::size_t held = 0;
  for (const ads::InfoItem& item : items) {
    if (pool_.try_emplace(item.id, item.category).second) ++pool_rev_;
    place(item.id, {});
    auto it = holders_.find(item.id);
    if (it != holders_.end() && !it->second.empty()) ++held;
  }
  return held;
}

void Market::learn(const MarketDescriptor& d) {
  if (d.market_id != id_) merge_descriptor(known_, d);
}

void Market::refresh_descriptor() {
  std::map<ads::Category, std::uint32_t> counts;
  for (const ads::Category& c : advertised_) counts[c] = 0;
  for (const auto& [iid, cat] : pool_) ++counts[cat];
  const double now = kernel_.now();
  const bool stale = now - descriptor_.advertised_at >= params_.refresh_interval;
  if (advertised_once_ && counts == descriptor_.categories && !stale) return;
  advertised_once_ = true;
  descriptor_.categories = std::move(counts);
  descriptor_.advertised_at = now;
  sim::Fields f;
  f.add("market", id_).add("adv", now).add("categories", descriptor_.categories.size()).add("pool", pool_.size());
  trace(std::nullopt, "MKT_DESC", f);
}

}  // namespace adsim::market
