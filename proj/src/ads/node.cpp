#include "adsim/ads/node.hpp"

#include <algorithm>
#include <memory>

#include "adsim/core/error.hpp"

namespace adsim::ads {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};

bool by_creation(const InfoItem& a, const InfoItem& b) {
  return a.created_at != b.created_at ? a.created_at < b.created_at : a.id < b.id;
}

}  // namespace

Node::Node(NodeId self, sim::Kernel& kernel, routing::Router& router, Profile profile, NodeParams params)
    : self_(self), kernel_(kernel), router_(router), profile_(std::move(profile)), params_(params) {
  profile_.node = self;
}

void Node::trace(std::string_view kind, const sim::Fields& f) { kernel_.trace().record(kernel_.now(), self_, kind, f); }

InfoItem Node::create_item(Category category, Attributes payload, std::optional<std::uint32_t> counter) {
  InfoItem item;
  item.id = ItemId{self_, counter ? *counter : next_item_};
  if (store_.contains(item.id)) throw InvalidArgument("item " + to_string(item.id) + " already exists");
  next_item_ = std::max(next_item_, item.id.counter + 1);
  item.category = std::move(category);
  item.payload = std::move(payload);
  item.created_at = kernel_.now();
  item.origin = self_;
  trace("ITEM_NEW", sim::Fields().add("item", to_string(item.id)).add("cat", item.category));
  put_local(item, "origin");
  return item;
}

InfoItem Node::update_item(const ItemId& id, Attributes payload) {
  const InfoItem* current = store_.find(id);
  if (current == nullptr || current->origin != self_) {
    throw InvalidArgument("item " + to_string(id) + " is not originated by node " + std::to_string(self_.value));
  }
  InfoItem next = *current;
  next.payload = std::move(payload);
  next.version += 1;
  trace("ITEM_UPDATE", sim::Fields().add("item", to_string(id)).add("v", next.version));
  put_local(next, "origin");
  return next;
}

PutOutcome Node::put_local(const InfoItem& item, std::string_view via) {
  PutOutcome out = store_.put(item);
  if (out.result == PutResult::Inserted) {
    trace("HOLD", sim::Fields()
                      .add("item", to_string(item.id))
                      .add("v", out.version)
                      .add("via", via)
                      .add("cat", item.category));
  } else if (out.result == PutResult::Upgraded) {
    trace("UPGRADE", sim::Fields().add("item", to_string(item.id)).add("v", out.version).add("via", via));
  }
  if (out.anomaly) trace("ANOMALY", sim::Fields().add("item", to_string(item.id)).add("v", item.version));
  return out;
}

// --- synchronous neighborhood query ------------------------------------------

QueryId Node::query_sync(const Selector& sel, double timeout, std::uint32_t hop_radius, SyncCallback done) {
  if (timeout < 0.0) throw InvalidArgument("negative sync timeout");
  QueryId id{self_, next_query_++};
  sync_[id] = SyncQuery{sel, {}, std::move(done), false};
  trace("SYNC_START", sim::Fields()
                          .add("query", to_string(id))
                          .add("sel", sel.describe())
                          .add("timeout", timeout)
                          .add("radius", hop_radius));
  if (hop_radius > 0) {
    wire::SyncQueryMsg msg{id, sel, hop_radius - 1, kernel_.now() + timeout};
    for (NodeId n : kernel_.neighbors(self_)) {
      if (peer_ok(n)) send(n, msg);
    }
  }
  kernel_.schedule_in(timeout, self_, sim::EventKind::Timer, [this, id] { finish_sync(id); });
  return id;
}

void Node::finish_sync(const QueryId& id) {
  SyncQuery& q = sync_.at(id);
  std::map<ItemId, InfoItem> all;
  Selector unbounded = q.selector;
  unbounded.max_results.reset();
  for (InfoItem& item : store_.query(unbounded)) all.emplace(item.id, std::move(item));
  for (const auto& [iid, item] : q.remote) {
    if (store_.hidden(iid)) continue;
    auto [it, fresh] = all.emplace(iid, item);
    if (!fresh) it->second = merge(it->second, item);
  }
  std::vector<InfoItem> out;
  out.reserve(all.size());
  for (auto& [iid, item] : all) out.push_back(std::move(item));
  std::sort(out.begin(), out.end(), by_creation);
  if (q.selector.max_results && out.size() > *q.selector.max_results) out.resize(*q.selector.max_results);
  q.finished = true;
  q.remote.clear();
  trace("SYNC_DONE", sim::Fields().add("query", to_string(id)).add("results", out.size()));
  if (q.done) q.done(std::move(out));
}

void Node::on_sync_query(NodeId from, const wire::SyncQueryMsg& m) {
  if (sync_.count(m.query) != 0 || relays_.count(m.query) != 0) return;
  double now = kernel_.now();
  if (now > m.deadline) return;
  std::erase_if(relays_, [now](const auto& kv) { return kv.second.deadline < now; });
  relays_[m.query] = Relay{from, m.deadline};

  std::vector<InfoItem> local = store_.query(m.selector);
  if (!local.empty()) send(from, wire::SyncReplyMsg{m.query, std::move(local)});
  if (m.hops_left > 0) {
    wire::SyncQueryMsg next = m;
    next.hops_left -= 1;
    for (NodeId n : kernel_.neighbors(self_)) {
      if (n != from && peer_ok(n)) send(n, next);
    }
  }
}

void Node::on_sync_reply(NodeId from, const wire::SyncReplyMsg& m) {
  if (auto own = sync_.find(m.query); own != sync_.end()) {
    if (own->second.finished) {
      trace("SYNC_LATE", sim::Fields().add("query", to_string(m.query)).add("from", from));
      return;
    }
    for (const InfoItem& item : m.items) {
      auto [it, fresh] = own->second.remote.emplace(item.id, item);
      if (!fresh) it->second = merge(it->second, item);
    }
    return;
  }
  auto relay = relays_.find(m.query);
  if (relay == relays_.end()) return;
  if (kernel_.now() > relay->second.deadline || !kernel_.in_range(self_, relay->second.parent)) {
    trace("SYNC_LOST", sim::Fields().add("query", to_string(m.query)).add("parent", relay->second.parent));
    return;
  }
  // A relay never passes on what it has purged itself.
  wire::SyncReplyMsg out{m.query, {}};
  for (const InfoItem& item : m.items) {
    if (!store_.hidden(item.id)) out.items.push_back(item);
  }
  if (!out.items.empty()) send(relay->second.parent, out);
}

// --- en-passant exchange ---------------------------------------------------------

bool Node::exchange_due(NodeId peer) const {
  auto it = last_exchange_.find(peer);
  return it == last_exchange_.end() || kernel_.now() - it->second >= params_.exchange_interval;
}

void Node::send_profile(NodeId to, bool reply_requested) {
  send(to, wire::ProfileMsg{self_, profile_.interests, profile_.exchange_budget, reply_requested});
  send(to, wire::DigestMsg{store_.digest(profile_.interests)});
}

void Node::start_exchange(NodeId peer) {
  last_exchange_[peer] = kernel_.now();
  trace("EXCHANGE", sim::Fields().add("peer", peer));
  send_profile(peer, true);
}

void Node::on_profile(NodeId from, const wire::ProfileMsg& m) {
  peer_profiles_[from] = Profile{m.node, m.interests, m.budget};
  if (m.reply_requested) {
    last_exchange_[from] = kernel_.now();
    send_profile(from, false);
  }
}

void Node::on_digest(NodeId from, const wire::DigestMsg& m) {
  auto prof = peer_profiles_.find(from);
  if (prof == peer_profiles_.end()) return;  // profile lost on the way
  const Profile& peer = prof->second;

  std::vector<const DigestEntry*> theirs;
  theirs.reserve(m.entries.size());
  for (const DigestEntry& e : m.entries) theirs.push_back(&e);
  std::sort(theirs.begin(), theirs.end(), [](const DigestEntry* a, const DigestEntry* b) { return a->id < b->id; });

  // Copies already handed to this peer are not resent: merging only grows
  // the peer's copy, so it still covers ours.
  auto held = peer_has_.find(from);
  const std::map<ItemId, std::uint64_t>* known = held == peer_has_.end() ? nullptr : &held->second;

  std::vector<const InfoItem*> offer;
  for (const auto& [id, entry] : store_.entries()) {
    if (entry.hidden || peer.interests.count(entry.item.category) == 0) continue;
    auto t = std::lower_bound(theirs.begin(), theirs.end(), id,
                              [](const DigestEntry* e, const ItemId& key) { return e->id < key; });
    if (t != theirs.end() && (*t)->id == id) {
      const DigestEntry& e = **t;
      if (e.tombstone || e.version > entry.item.version) continue;
      if (e.version == entry.item.version && e.fingerprint == entry.fingerprint) continue;
    }
    if (known != nullptr) {
      auto k = known->find(id);
      if (k != known->end() && k->second == entry.fingerprint) continue;
    }
    offer.push_back(&entry.item);
  }
  // Newest first, so a short encounter carries the freshest material.
  std::sort(offer.begin(), offer.end(), [](const InfoItem* a, const InfoItem* b) {
    return a->created_at != b->created_at ? a->created_at > b->created_at : a->id < b->id;
  });
  if (offer.size() > peer.exchange_budget) offer.resize(peer.exchange_budget);
  std::vector<ItemId> ids;
  ids.reserve(offer.size());
  for (const InfoItem* item : offer) ids.push_back(item->id);
  if (!ids.empty()) send_items_paced(from, std::move(ids));
}

void Node::send_items_paced(NodeId peer, std::vector<ItemId> ids) {
  auto aborted = std::make_shared<bool>(false);
  double spacing = kernel_.config().radio.latency_per_hop;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    kernel_.schedule_in(spacing * static_cast<double>(i), self_, sim::EventKind::Timer,
                        [this, peer, id = ids[i], aborted, left = ids.size() - i] {
                          if (*aborted) return;
                          if (!kernel_.in_range(self_, peer)) {
                            *aborted = true;
                            trace("LINK_LOST", sim::Fields().add("peer", peer).add("unsent", left));
                            return;
                          }
                          const InfoItem* item = store_.find_visible(id);
                          if (item != nullptr && send(peer, wire::ItemsMsg{{*item}})) {
                            peer_has_[peer][id] = store_.entries().at(id).fingerprint;
                          }
                        });
  }
}

void Node::on_items(NodeId from, const wire::ItemsMsg& m) {
  for (const InfoItem& item : m.items) {
    put_local(item, "exchange");
    auto e = store_.entries().find(item.id);
    if (e != store_.entries().end() && e->second.fingerprint == fingerprint(item)) {
      peer_has_[from][item.id] = e->second.fingerprint;
    }
  }
}

// --- ASRQ ----------------------------------------------------------------------------

QueryId Node::launch_asrq(const Selector& sel, double ttl, const MovementPlan& plan,
                          std::optional<std::uint32_t> expected_results) {
  if (known_.empty()) throw NoKnownMarket("node " + std::to_string(self_.value) + " knows no market");
  if (ttl <= 0.0) throw InvalidArgument("ASRQ ttl must be positive");
  if (plan.empty()) throw InvalidArgument("ASRQ needs a movement plan");
  std::vector<market::MarketDescriptor> known;
  known.reserve(known_.size());
  for (const auto& [mid, d] : known_) known.push_back(d);
  const market::MarketDescriptor& target =
      market::select_market(sel.categories, kernel_.position(self_), known, params_.weights);

  double now = kernel_.now();
  QueryId id{self_, next_query_++};
  Asrq q{id, self_, sel, now, ttl, plan, expected_results, known};

  routing::RoutedMessage msg;
  msg.msg_id = router_.next_msg_id();
  msg.origin = self_;
  msg.dest_region = target.region;
  msg.hop_limit = params_.hop_limit;
  msg.carry_deadline = q.expires_at();
  msg.inner = routing::Inner::Asrq;
  msg.payload = wire::encode_asrq(q);

  trace("ASRQ_LAUNCH", sim::Fields()
                           .add("query", to_string(id))
                           .add("market", target.market_id)
                           .add("msg", routing::to_string(msg.msg_id))
                           .add("sel", sel.describe())
                           .add("ttl", ttl)
                           .add("expected", expected_results ? static_cast<long long>(*expected_results) : -1LL));
  asrqs_.emplace(id, Pending{std::move(q), target.market_id, {}, {}});
  router_.originate(std::move(msg));
  return id;
}

MarketId Node::publish(const InfoItem& item) {
  if (known_.empty()) throw NoKnownMarket("node " + std::to_string(self_.value) + " knows no market");
  std::vector<market::MarketDescriptor> known;
  known.reserve(known_.size());
  for (const auto& [mid, d] : known_) known.push_back(d);
  const market::MarketDescriptor& target =
      market::select_market({item.category}, kernel_.position(self_), known, params_.weights);

  routing::RoutedMessage msg;
  msg.msg_id = router_.next_msg_id();
  msg.origin = self_;
  msg.dest_region = target.region;
  msg.hop_limit = params_.hop_limit;
  msg.carry_deadline = kernel_.now() + params_.publish_ttl;
  msg.inner = routing::Inner::Publish;
  msg.payload = wire::encode_publish(wire::PublishMsg{item, target.market_id});
  trace("PUBLISH", sim::Fields()
                       .add("item", to_string(item.id))
                       .add("market", target.market_id)
                       .add("msg", routing::to_string(msg.msg_id)));
  router_.originate(std::move(msg));
  return target.market_id;
}

void Node::accept_chunk(const ResultChunk& chunk) {
  for (const market::MarketDescriptor& d : chunk.piggyback) learn_descriptor(d, "chunk");
  auto it = asrqs_.find(chunk.query_id);
  if (it == asrqs_.end()) {
    trace("CHUNK_UNKNOWN", sim::Fields().add("query", to_string(chunk.query_id)).add("market", chunk.from_market));
    return;
  }
  Pending& p = it->second;
  bool dup = !p.chunks.insert({chunk.from_market, chunk.chunk_seq}).second;
  std::size_t fresh = 0;
  if (!dup) {
    for (const InfoItem& item : chunk.items) {
      put_local(item, "chunk");
      if (p.items.insert(item.id).second) ++fresh;
    }
  }
  trace("CHUNK_RECV", sim::Fields()
                          .add("query", to_string(chunk.query_id))
                          .add("market", chunk.from_market)
                          .add("seq", chunk.chunk_seq)
                          .add("items", chunk.items.size())
                          .add("new", fresh)
                          .add("dup", dup)
                          .add("latency", kernel_.now() - p.asrq.launched_at));
}

ResultStatus Node::collect_results(const QueryId& id) const {
  auto it = asrqs_.find(id);
  if (it == asrqs_.end()) throw UnknownQuery("unknown query " + to_string(id));
  const Pending& p = it->second;
  ResultStatus out;
  for (const ItemId& iid : p.items) {
    if (const InfoItem* item = store_.find_visible(iid)) out.items.push_back(*item);
  }
  std::sort(out.items.begin(), out.items.end(), by_creation);
  out.chunks = static_cast<std::uint32_t>(p.chunks.size());
  out.state = p.asrq.active_at(kernel_.now()) ? QueryState::Pending : QueryState::Expired;
  return out;
}

// --- market knowledge -----------------------------------------------------------

bool Node::learn_descriptor(const market::MarketDescriptor& d, std::string_view source, std::optional<NodeId> from) {
  if (!market::merge_descriptor(known_, d)) return false;
  trace("MKT_ADV", sim::Fields()
                       .add("market", d.market_id)
                       .add("adv", d.advertised_at)
                       .add("src", source)
                       .add("known", known_.size()));
  wire::AdvMsg adv{{d}};
  for (NodeId n : kernel_.neighbors(self_)) {
    if (!from || n != *from) send(n, adv);
  }
  return true;
}

void Node::on_link_gained(NodeId peer, bool peer_is_support) {
  if (!known_.empty()) {
    wire::AdvMsg adv;
    for (const auto& [mid, d] : known_) adv.descriptors.push_back(d);
    send(peer, adv);
  }
  if (peer_is_support) send(peer, wire::DirReqMsg{});
}

void Node::receive(NodeId from, const wire::Message& m) {
  std::visit(Overloaded{
                 [&](const wire::ProfileMsg& x) { on_profile(from, x); },
                 [&](const wire::DigestMsg& x) { on_digest(from, x); },
                 [&](const wire::ItemsMsg& x) { on_items(from, x); },
                 [&](const wire::SyncQueryMsg& x) { on_sync_query(from, x); },
                 [&](const wire::SyncReplyMsg& x) { on_sync_reply(from, x); },
                 [&](const wire::AdvMsg& x) {
                   for (const auto& d : x.descriptors) learn_descriptor(d, "adv", from);
                 },
                 [&](const wire::DirMsg& x) {
                   for (const auto& d : x.descriptors) learn_descriptor(d, "dir", from);
                 },
                 [](const auto&) {},
             },
             m);
}

}  // namespace adsim::ads
