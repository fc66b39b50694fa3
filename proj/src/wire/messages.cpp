#include "adsim/wire/messages.hpp"

#include <fmt/format.h>

#include "adsim/wire/codec.hpp"

namespace adsim::wire {

namespace {

// --- primitives -----------------------------------------------------------

void put(Writer& w, NodeId id) { w.varint(id.value); }
NodeId get_node(Reader& r) { return NodeId{r.u32()}; }

void put(Writer& w, const Position& p) {
  w.f64(p.x);
  w.f64(p.y);
}
Position get_position(Reader& r) {
  Position p;
  p.x = r.f64();
  p.y = r.f64();
  return p;
}

void put(Writer& w, const Region& g) {
  put(w, g.center);
  w.f64(g.radius);
}
Region get_region(Reader& r) {
  Region g;
  g.center = get_position(r);
  g.radius = r.f64();
  return g;
}

void put(Writer& w, const ads::ItemId& id) {
  put(w, id.origin);
  w.varint(id.counter);
}
ads::ItemId get_item_id(Reader& r) {
  ads::ItemId id;
  id.origin = get_node(r);
  id.counter = r.u32();
  return id;
}

void put(Writer& w, const ads::QueryId& id) {
  put(w, id.initiator);
  w.varint(id.seq);
}
ads::QueryId get_query_id(Reader& r) {
  ads::QueryId id;
  id.initiator = get_node(r);
  id.seq = r.u32();
  return id;
}

void put(Writer& w, const routing::MsgId& id) {
  put(w, id.origin);
  w.varint(id.seq);
}
routing::MsgId get_msg_id(Reader& r) {
  routing::MsgId id;
  id.origin = get_node(r);
  id.seq = r.u32();
  return id;
}

void put(Writer& w, const std::set<ads::Category>& cats) {
  w.varint(cats.size());
  for (const auto& c : cats) w.str(c);
}
std::set<ads::Category> get_categories(Reader& r) {
  std::set<ads::Category> out;
  for (std::size_t n = r.count(); n > 0; --n) out.insert(r.str());
  return out;
}

void put(Writer& w, const ads::Attributes& a) {
  w.varint(a.size());
  for (const auto& [k, v] : a) {
    w.str(k);
    w.str(v);
  }
}
ads::Attributes get_attributes(Reader& r) {
  ads::Attributes out;
  for (std::size_t n = r.count(); n > 0; --n) {
    auto k = r.str();
    out[std::move(k)] = r.str();
  }
  return out;
}

void put(Writer& w, const ads::InfoItem& it) {
  put(w, it.id);
  w.str(it.category);
  put(w, it.payload);
  w.f64(it.created_at);
  w.varint(it.version);
  put(w, it.origin);
  w.varint(it.evaluations.size());
  for (const auto& [who, ev] : it.evaluations) {
    put(w, who);
    w.svarint(ev.rating);
    w.f64(ev.at);
  }
}
ads::InfoItem get_item(Reader& r) {
  ads::InfoItem it;
  it.id = get_item_id(r);
  it.category = r.str();
  it.payload = get_attributes(r);
  it.created_at = r.f64();
  it.version = r.u32();
  it.origin = get_node(r);
  for (std::size_t n = r.count(); n > 0; --n) {
    const NodeId who = get_node(r);
    ads::Evaluation ev;
    ev.rating = static_cast<int>(r.svarint());
    ev.at = r.f64();
    it.evaluations[who] = ev;
  }
  return it;
}

void put(Writer& w, const std::vector<ads::InfoItem>& items) {
  w.varint(items.size());
  for (const auto& it : items) put(w, it);
}
std::vector<ads::InfoItem> get_items(Reader& r) {
  std::vector<ads::InfoItem> out;
  for (std::size_t n = r.count(); n > 0; --n) out.push_back(get_item(r));
  return out;
}

void put(Writer& w, const ads::Selector& s) {
  put(w, s.categories);
  put(w, s.predicate);
  w.boolean(s.max_results.has_value());
  if (s.max_results) w.varint(*s.max_results);
}
ads::Selector get_selector(Reader& r) {
  ads::Selector s;
  s.categories = get_categories(r);
  s.predicate = get_attributes(r);
  if (r.boolean()) s.max_results = r.u32();
  return s;
}

void put(Writer& w, const market::MarketDescriptor& d) {
  w.varint(d.market_id.value);
  put(w, d.region);
  w.varint(d.categories.size());
  for (const auto& [c, n] : d.categories) {
    w.str(c);
    w.varint(n);
  }
  w.f64(d.advertised_at);
}
market::MarketDescriptor get_descriptor(Reader& r) {
  market::MarketDescriptor d;
  d.market_id = MarketId{r.u32()};
  d.region = get_region(r);
  for (std::size_t n = r.count(); n > 0; --n) {
    auto c = r.str();
    d.categories[std::move(c)] = r.u32();
  }
  d.advertised_at = r.f64();
  return d;
}

void put(Writer& w, const std::vector<market::MarketDescriptor>& ds) {
  w.varint(ds.size());
  for (const auto& d : ds) put(w, d);
}
std::vector<market::MarketDescriptor> get_descriptors(Reader& r) {
  std::vector<market::MarketDescriptor> out;
  for (std::size_t n = r.count(); n > 0; --n) out.push_back(get_descriptor(r));
  return out;
}

void put(Writer& w, const ads::MovementPlan& p) {
  w.varint(p.entries.size());
  for (const auto& e : p.entries) {
    w.f64(e.from);
    w.f64(e.to);
    put(w, e.region);
  }
}
ads::MovementPlan get_plan(Reader& r) {
  ads::MovementPlan p;
  for (std::size_t n = r.count(); n > 0; --n) {
    ads::PlanEntry e;
    e.from = r.f64();
    e.to = r.f64();
    e.region = get_region(r);
    p.entries.push_back(e);
  }
  return p;
}

void put(Writer& w, const routing::RoutedMessage& m) {
  put(w, m.msg_id);
  put(w, m.origin);
  put(w, m.dest_region);
  w.boolean(m.dest_node.has_value());
  if (m.dest_node) put(w, *m.dest_node);
  w.varint(m.hop_count);
  w.varint(m.hop_limit);
  w.f64(m.carry_deadline);
  w.u8(static_cast<std::uint8_t>(m.inner));
  w.str(m.payload);
}
routing::RoutedMessage get_routed(Reader& r) {
  routing::RoutedMessage m;
  m.msg_id = get_msg_id(r);
  m.origin = get_node(r);
  m.dest_region = get_region(r);
  if (r.boolean()) m.dest_node = get_node(r);
  m.hop_count = r.u32();
  m.hop_limit = r.u32();
  m.carry_deadline = r.f64();
  const auto inner = r.u8();
  if (inner > static_cast<std::uint8_t>(routing::Inner::Publish)) throw CodecError("unknown routed payload kind");
  m.inner = static_cast<routing::Inner>(inner);
  m.payload = r.str();
  return m;
}

void header(Writer& w, MsgType t) {
  w.u8(kProtocolVersion);
  w.u8(static_cast<std::uint8_t>(t));
}

template <typename T, typename F>
T finish(Reader& r, F&& read) {
  T value = read(r);
  if (!r.done()) throw CodecError("trailing bytes");
  return value;
}

std::string join_ids(const std::vector<ads::InfoItem>& items) {
  std::string out;
  for (const auto& it : items) {
    if (!out.empty()) out += ',';
    out += ads::to_string(it.id);
  }
  return out;
}

}  // namespace

std::string encode(const Message& m) {
  Writer w;
  std::visit(
      [&w](const auto& msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, ProfileMsg>) {
          header(w, MsgType::Profile);
          put(w, msg.node);
          put(w, msg.interests);
          w.varint(msg.budget);
          w.boolean(msg.reply_requested);
        } else if constexpr (std::is_same_v<T, DigestMsg>) {
          header(w, MsgType::Digest);
          w.varint(msg.entries.size());
          for (const auto& e : msg.entries) {
            put(w, e.id);
            w.varint(e.version);
            w.varint(e.fingerprint);
            w.boolean(e.tombstone);
          }
        } else if constexpr (std::is_same_v<T, ItemsMsg>) {
          header(w, MsgType::Items);
          put(w, msg.items);
        } else if constexpr (std::is_same_v<T, SyncQueryMsg>) {
          header(w, MsgType::SyncQuery);
          put(w, msg.query);
          put(w, msg.selector);
          w.varint(msg.hops_left);
          w.f64(msg.deadline);
        } else if constexpr (std::is_same_v<T, SyncReplyMsg>) {
          header(w, MsgType::SyncReply);
          put(w, msg.query);
          put(w, msg.items);
        } else if constexpr (std::is_same_v<T, AckMsg>) {
          header(w, MsgType::Ack);
          put(w, msg.msg);
          w.varint(msg.hop);
        } else if constexpr (std::is_same_v<T, GeoMsg>) {
          header(w, MsgType::Geo);
          put(w, msg.routed);
        } else if constexpr (std::is_same_v<T, AdvMsg>) {
          header(w, MsgType::Adv);
          put(w, msg.descriptors);
        } else if constexpr (std::is_same_v<T, DirReqMsg>) {
          header(w, MsgType::DirReq);
        } else if constexpr (std::is_same_v<T, DirMsg>) {
          header(w, MsgType::Dir);
          put(w, msg.descriptors);
        }
      },
      m);
  return w.take();
}

Message decode(std::string_view bytes) {
  Reader r(bytes);
  if (r.u8() != kProtocolVersion) throw CodecError("unsupported protocol version");
  const auto type = static_cast<MsgType>(r.u8());
  Message out;
  switch (type) {
    case MsgType::Profile: {
      ProfileMsg p;
      p.node = get_node(r);
      p.interests = get_categories(r);
      p.budget = r.u32();
      p.reply_requested = r.boolean();
      out = std::move(p);
      break;
    }
    case MsgType::Digest: {
      DigestMsg d;
      for (std::size_t n = r.count(); n > 0; --n) {
        ads::DigestEntry e;
        e.id = get_item_id(r);
        e.version = r.u32();
        e.fingerprint = r.varint();
        e.tombstone = r.boolean();
        d.entries.push_back(e);
      }
      out = std::move(d);
      break;
    }
    case MsgType::Items: out = ItemsMsg{get_items(r)}; break;
    case MsgType::SyncQuery: {
      SyncQueryMsg q;
      q.query = get_query_id(r);
      q.selector = get_selector(r);
      q.hops_left = r.u32();
      q.deadline = r.f64();
      out = std::move(q);
      break;
    }
    case MsgType::SyncReply: {
      SyncReplyMsg q;
      q.query = get_query_id(r);
      q.items = get_items(r);
      out = std::move(q);
      break;
    }
    case MsgType::Ack: {
      AckMsg a;
      a.msg = get_msg_id(r);
      a.hop = r.u32();
      out = a;
      break;
    }
    case MsgType::Geo: out = GeoMsg{get_routed(r)}; break;
    case MsgType::Adv: out = AdvMsg{get_descriptors(r)}; break;
    case MsgType::DirReq: out = DirReqMsg{}; break;
    case MsgType::Dir: out = DirMsg{get_descriptors(r)}; break;
    default: throw CodecError("unknown message type");
  }
  if (!r.done()) throw CodecError("trailing bytes");
  return out;
}

std::string_view kind_name(const Message& m) {
  static constexpr std::string_view names[] = {"PROFILE", "DIGEST", "ITEMS", "SYNC_QUERY", "SYNC_REPLY",
                                               "ACK",     "FWD",    "ADV",   "DIR_REQ",    "DIR"};
  return names[m.index()];
}

std::string summary(const Message& m) {
  return std::visit(
      [](const auto& msg) -> std::string {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, DigestMsg>) {
          return fmt::format("entries={}", msg.entries.size());
        } else if constexpr (std::is_same_v<T, ItemsMsg>) {
          return "items=" + join_ids(msg.items);
        } else if constexpr (std::is_same_v<T, SyncQueryMsg>) {
          return fmt::format("query={};hops_left={}", ads::to_string(msg.query), msg.hops_left);
        } else if constexpr (std::is_same_v<T, SyncReplyMsg>) {
          return fmt::format("query={};items={}", ads::to_string(msg.query), join_ids(msg.items));
        } else if constexpr (std::is_same_v<T, AckMsg>) {
          return fmt::format("msg={};hop={}", routing::to_string(msg.msg), msg.hop);
        } else if constexpr (std::is_same_v<T, GeoMsg>) {
          return fmt::format("msg={};inner={};hops={}", routing::to_string(msg.routed.msg_id),
                             routing::inner_name(msg.routed.inner), msg.routed.hop_count);
        } else if constexpr (std::is_same_v<T, AdvMsg> || std::is_same_v<T, DirMsg>) {
          return fmt::format("descriptors={}", msg.descriptors.size());
        } else {
          return {};
        }
      },
      m);
}

std::string encode_asrq(const ads::Asrq& q) {
  Writer w;
  w.u8(kProtocolVersion);
  put(w, q.query_id);
  put(w, q.initiator);
  put(w, q.selector);
  w.f64(q.launched_at);
  w.f64(q.ttl);
  put(w, q.plan);
  w.boolean(q.expected_results.has_value());
  if (q.expected_results) w.varint(*q.expected_results);
  put(w, q.known_markets);
  return w.take();
}

ads::Asrq decode_asrq(std::string_view bytes) {
  Reader r(bytes);
  if (r.u8() != kProtocolVersion) throw CodecError("unsupported protocol version");
  return finish<ads::Asrq>(r, [](Reader& r) {
    ads::Asrq q;
    q.query_id = get_query_id(r);
    q.initiator = get_node(r);
    q.selector = get_selector(r);
    q.launched_at = r.f64();
    q.ttl = r.f64();
    q.plan = get_plan(r);
    if (r.boolean()) q.expected_results = r.u32();
    q.known_markets = get_descriptors(r);
    return q;
  });
}

std::string encode_chunk(const ads::ResultChunk& c) {
  Writer w;
  w.u8(kProtocolVersion);
  put(w, c.query_id);
  w.varint(c.chunk_seq);
  put(w, c.items);
  w.varint(c.from_market.value);
  put(w, c.piggyback);
  return w.take();
}

ads::ResultChunk decode_chunk(std::string_view bytes) {
  Reader r(bytes);
  if (r.u8() != kProtocolVersion) throw CodecError("unsupported protocol version");
  return finish<ads::ResultChunk>(r, [](Reader& r) {
    ads::ResultChunk c;
    c.query_id = get_query_id(r);
    c.chunk_seq = r.u32();
    c.items = get_items(r);
    c.from_market = MarketId{r.u32()};
    c.piggyback = get_descriptors(r);
    return c;
  });
}

std::string encode_publish(const PublishMsg& p) {
  Writer w;
  w.u8(kProtocolVersion);
  put(w, p.item);
  w.varint(p.market.value);
  return w.take();
}

PublishMsg decode_publish(std::string_view bytes) {
  Reader r(bytes);
  if (r.u8() != kProtocolVersion) throw CodecError("unsupported protocol version");
  return finish<PublishMsg>(r, [](Reader& r) {
    PublishMsg p;
    p.item = get_item(r);
    p.market = MarketId{r.u32()};
    return p;
  });
}

}  // namespace adsim::wire

#include "adsim/sim/kernel.hpp"

namespace adsim::wire {

bool transmit(sim::Kernel& kernel, NodeId from, NodeId to, const Message& m) {
  // Replies can trail a topology change by a hop latency; the peer is then gone.
  if (!kernel.in_range(from, to)) return false;
  return kernel.send(from, to, kind_name(m), encode(m), summary(m));
}

}  // namespace adsim::wire
