#include "adsim/scenario/simulation.hpp"

#include <cmath>
#include <numbers>

#include "adsim/core/error.hpp"
#include "adsim/wire/messages.hpp"

namespace adsim::scenario {

namespace {

Position in_disk(const Region& r, double fraction, sim::Rng& rng) {
  const double rad = r.radius * fraction * std::sqrt(rng.uniform01());
  const double theta = 2.0 * std::numbers::pi * rng.uniform01();
  return {r.center.x + rad * std::cos(theta), r.center.y + rad * std::sin(theta)};
}

Position in_world(const Config& c, sim::Rng& rng) {
  return {rng.uniform(0.0, c.world.width), rng.uniform(0.0, c.world.height)};
}

std::string clean(std::string s) {
  for (char& ch : s) {
    if (ch == ';') ch = ',';
    if (ch == '\t' || ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

std::set<ads::Category> categories(const std::string& list) {
  std::set<ads::Category> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t end = list.find(',', start);
    if (end == std::string::npos) end = list.size();
    if (end > start) out.insert(list.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

ads::Attributes key_values(const std::vector<std::string>& args, std::size_t from) {
  ads::Attributes out;
  for (std::size_t i = from; i < args.size(); ++i) {
    const auto eq = args[i].find('=');
    if (eq != std::string::npos) out[args[i].substr(0, eq)] = args[i].substr(eq + 1);
  }
  return out;
}

// Pre-generated movement for one node.
struct Motion {
  Position start;
  double speed = 0.0;
  std::deque<sim::Waypoint> waypoints;
  ads::MovementPlan tour;  // poi model: each leg counts towards its destination
};

Motion generate(const Config& c, const Group& g, std::size_t index, sim::Rng& rng) {
  Motion m;
  const MobilityModel model = g.mobility.value_or(c.mobility.model);
  const Hotspot* start = c.hotspot(g.start);
  const double disk = model == MobilityModel::Itinerary ? 0.5 : 0.9;
  if (!g.positions.empty()) m.start = g.positions[index];
  else if (start != nullptr) m.start = in_disk(start->region, disk, rng);
  else m.start = in_world(c, rng);
  if (model == MobilityModel::Static) return m;

  m.speed = g.speed ? *g.speed : rng.uniform(c.mobility.speed_min, c.mobility.speed_max);
  if (!(m.speed > 0.0)) return m;

  if (model == MobilityModel::Itinerary) {
    Position at = m.start;
    if (g.itinerary.front().depart > 0.0) m.waypoints.push_back({at, g.itinerary.front().depart});
    for (std::size_t i = 0; i < g.itinerary.size(); ++i) {
      const Stop& s = g.itinerary[i];
      const Position target = in_disk(c.hotspot(s.hotspot)->region, 0.5, rng);
      const double arrive = s.depart + distance(at, target) / m.speed;
      const double dwell = i + 1 < g.itinerary.size() ? std::max(0.0, g.itinerary[i + 1].depart - arrive) : 0.0;
      m.waypoints.push_back({target, dwell});
      at = target;
    }
    return m;
  }

  std::vector<const Hotspot*> pois;
  for (const auto& name : g.pois) pois.push_back(c.hotspot(name));
  if (pois.empty()) {
    for (const Hotspot& h : c.hotspots) pois.push_back(&h);
  }
  double t = 0.0;
  Position at = m.start;
  const Hotspot* here = start;
  while (t < c.world.duration) {
    Position target;
    if (model == MobilityModel::Poi) {
      const Hotspot* next = pois[rng.below(pois.size())];
      if (pois.size() > 1 && next == here) next = pois[(rng.below(pois.size() - 1) + 1 + (next - pois.front())) % pois.size()];
      target = in_disk(next->region, 0.9, rng);
      here = next;
    } else {
      target = in_world(c, rng);
    }
    const double dwell = rng.uniform(c.mobility.dwell_min, c.mobility.dwell_max);
    const double leg_start = t;
    t += distance(at, target) / m.speed + dwell;
    m.waypoints.push_back({target, dwell});
    if (model == MobilityModel::Poi) m.tour.entries.push_back({leg_start, t, here->region});
    at = target;
  }
  return m;
}

ads::MovementPlan derive_plan(const Config& c, const Group& g, const Motion& m) {
  ads::MovementPlan plan;
  const double end = std::max(c.world.duration, c.world.tick);
  if (!g.plan.empty()) {
    for (const PlanLine& p : g.plan) plan.entries.push_back({p.from, p.to, c.hotspot(p.hotspot)->region});
    return plan;
  }
  const Hotspot* start = c.hotspot(g.start);
  if (!g.itinerary.empty() && start != nullptr) {
    if (g.itinerary.front().depart > 0.0) plan.entries.push_back({0.0, g.itinerary.front().depart, start->region});
    for (std::size_t i = 0; i < g.itinerary.size(); ++i) {
      const double from = g.itinerary[i].depart;
      const double to = i + 1 < g.itinerary.size() ? g.itinerary[i + 1].depart : std::max(end, from + c.world.tick);
      plan.entries.push_back({from, to, c.hotspot(g.itinerary[i].hotspot)->region});
    }
    return plan;
  }
  if (!m.tour.empty()) {
    plan = m.tour;
    plan.entries.back().to = std::max(plan.entries.back().to, end);
    return plan;
  }
  if (start != nullptr) plan.entries.push_back({0.0, end, start->region});
  return plan;
}

}  // namespace

Simulation::Simulation(const Config& cfg, std::uint64_t seed, std::ostream* trace_sink)
    : cfg_(cfg), layout_(scenario::layout(cfg)) {
  trace_ = std::make_unique<sim::Trace>(trace_sink);
  sim::KernelConfig kc;
  kc.width = cfg.world.width;
  kc.height = cfg.world.height;
  kc.radio = cfg.radio;
  kc.tick = cfg.world.tick;
  kc.seed = seed;
  kernel_ = std::make_unique<sim::Kernel>(kc, *trace_);
  trace_->record(0.0, std::nullopt, "META",
                 sim::Fields()
                     .add("format", kFormatVersion)
                     .add("seed", seed)
                     .add("duration", cfg.world.duration)
                     .add("tick", cfg.world.tick)
                     .add("nodes", layout_.node_count)
                     .add("range", cfg.radio.range)
                     .add("loss", cfg.radio.loss_prob));
  build_nodes();
  wire_kernel();
  schedule_script();
  next_purge_ = cfg.carla.purge_interval;
}

Simulation::~Simulation() = default;

void Simulation::build_nodes() {
  const std::size_t n = layout_.node_count;
  routers_.resize(n);
  nodes_.resize(n);
  apps_.resize(n);
  supports_.resize(n);
  plans_.resize(n);

  roster_ = std::make_shared<carla::Roster>();
  for (const auto& [id, g] : layout_.group_of) {
    (g->role == carla::Role::Staff ? roster_->staff : roster_->players).insert(id);
  }

  ads::NodeParams params;
  params.exchange_interval = cfg_.ads.exchange_interval;
  params.hop_limit = cfg_.ads.hop_limit;
  params.publish_ttl = cfg_.ads.publish_ttl;
  params.weights = {cfg_.ads.w_cat, cfg_.ads.w_dist};

  for (const Group& g : cfg_.groups) {
    const auto& ids = layout_.groups.at(g.name);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const NodeId id = kernel_->add_node(Position{});
      Motion m = generate(cfg_, g, i, kernel_->rng(id, sim::Stream::Mobility));
      plans_[id.value] = derive_plan(cfg_, g, m);
      auto& state = kernel_->mobility(id);
      state.current = m.start;
      state.speed = m.speed;
      state.waypoints = std::move(m.waypoints);

      routing::Router::Hooks hooks;
      hooks.transmit = [this, id](NodeId to, const routing::RoutedMessage& msg) {
        wire::transmit(*kernel_, id, to, wire::GeoMsg{msg});
      };
      hooks.acknowledge = [this, id](NodeId to, const routing::MsgId& mid, std::uint32_t hop) {
        wire::transmit(*kernel_, id, to, wire::AckMsg{mid, hop});
      };
      hooks.deliver = [this](NodeId at, const routing::RoutedMessage& msg) { return deliver(at, msg); };
      hooks.relay_ok = [this](NodeId peer) { return is_ads(peer); };
      routers_[id.value] = std::make_unique<routing::Router>(id, *kernel_, std::move(hooks));

      ads::Profile profile{id, g.interests, g.budget.value_or(cfg_.ads.budget)};
      nodes_[id.value] = std::make_unique<ads::Node>(id, *kernel_, *routers_[id.value], profile, params);
      nodes_[id.value]->set_peer_filter([this](NodeId peer) { return is_ads(peer); });
      if (auto r = layout_.reserved.find(id); r != layout_.reserved.end()) nodes_[id.value]->reserve_item_ids(r->second);
      apps_[id.value] = std::make_unique<carla::App>(*nodes_[id.value], *kernel_, g.role, roster_, cfg_.carla);
      ads_ids_.push_back(id);

      trace_->record(0.0, id, "NODE",
                     sim::Fields()
                         .add("group", g.name)
                         .add("role", g.role == carla::Role::Staff ? "staff" : "student")
                         .add("interests", [&] {
                           std::string s;
                           for (const auto& c : g.interests) s += (s.empty() ? "" : ",") + c;
                           return s;
                         }())
                         .add("x", m.start.x)
                         .add("y", m.start.y));
    }
  }

  support::SupportParams sp;
  sp.density_threshold = cfg_.ads.density_threshold;
  for (const auto& [id, hotspot] : layout_.supports) {
    const NodeId got = kernel_->add_node(cfg_.hotspot(hotspot)->region.center);
    supports_[got.value] = std::make_unique<support::SupportNode>(got, *kernel_, sp);
    trace_->record(0.0, got, "NODE", sim::Fields().add("group", "-").add("role", "support").add("hotspot", hotspot));
  }

  market::MarketParams mp;
  mp.k = cfg_.ads.k;
  mp.chunk_size = cfg_.ads.chunk_size;
  mp.refresh_interval = cfg_.ads.refresh_interval;
  mp.hop_limit = cfg_.ads.hop_limit;
  market::Market::Hooks mh;
  mh.node = [this](NodeId n) -> ads::Node* { return is_ads(n) ? nodes_[n.value].get() : nullptr; };
  mh.originate = [this](NodeId from, routing::RoutedMessage msg) {
    routing::Router& r = router(from);
    msg.msg_id = r.next_msg_id();
    msg.origin = from;
    r.originate(std::move(msg));
  };
  std::uint32_t next_market = 0;
  for (const Hotspot& h : cfg_.hotspots) {
    if (!h.market) continue;
    auto m = std::make_unique<market::Market>(MarketId{next_market++}, h.region, *kernel_, mp, mh, h.categories);
    for (const auto& [sid, hs] : layout_.supports) {
      if (h.region.contains(kernel_->position(sid))) m->attach_support(supports_[sid.value].get());
    }
    trace_->record(0.0, std::nullopt, "MARKET",
                   sim::Fields()
                       .add("market", m->id())
                       .add("hotspot", h.name)
                       .add("cx", h.region.center.x)
                       .add("cy", h.region.center.y)
                       .add("r", h.region.radius));
    markets_.push_back(std::move(m));
  }

  // Nodes configured with prior knowledge know every market from the start.
  for (const Group& g : cfg_.groups) {
    if (!g.know_markets) continue;
    for (NodeId id : layout_.groups.at(g.name)) {
      for (const auto& m : markets_) {
        market::MarketDescriptor d;
        d.market_id = m->id();
        d.region = m->region();
        for (const Hotspot& h : cfg_.hotspots) {
          if (h.market && h.region == m->region()) {
            for (const auto& c : h.categories) d.categories[c] = 0;
          }
        }
        d.advertised_at = 0.0;
        nodes_[id.value]->learn_descriptor(d, "config");
      }
    }
  }
}

void Simulation::wire_kernel() {
  kernel_->on_receive([this](NodeId to, NodeId from, const std::string& bytes) { dispatch(to, from, bytes); });
  kernel_->on_tick([this] { tick(); });
}

void Simulation::dispatch(NodeId to, NodeId from, const std::string& bytes) {
  wire::Message m;
  try {
    m = wire::decode(bytes);
  } catch (const CodecError& e) {
    trace_->record(now(), to, "CODEC_ERROR", sim::Fields().add("from", from).add("error", clean(e.what())));
    return;
  }
  if (is_support(to)) {
    supports_[to.value]->receive(from, m);
    return;
  }
  if (!is_ads(to)) return;
  if (const auto* g = std::get_if<wire::GeoMsg>(&m)) {
    routers_[to.value]->receive(from, g->routed);
  } else if (const auto* a = std::get_if<wire::AckMsg>(&m)) {
    routers_[to.value]->on_ack(a->msg, a->hop);
  } else {
    nodes_[to.value]->receive(from, m);
  }
}

routing::Delivery Simulation::deliver(NodeId at, const routing::RoutedMessage& msg) {
  switch (msg.inner) {
    case routing::Inner::Probe:
      trace_->record(now(), at, "PROBE_RECV", sim::Fields().add("msg", routing::to_string(msg.msg_id)).add("hops", msg.hop_count));
      return routing::Delivery::Consumed;
    case routing::Inner::Asrq: {
      const ads::Asrq q = wire::decode_asrq(msg.payload);
      for (const auto& m : markets_) {
        if (m->region() == msg.dest_region) {
          m->register_query(at, q);
          return routing::Delivery::Consumed;
        }
      }
      trace_->record(now(), at, "ORPHAN", sim::Fields().add("msg", routing::to_string(msg.msg_id)));
      return routing::Delivery::Consumed;
    }
    case routing::Inner::Publish: {
      const wire::PublishMsg p = wire::decode_publish(msg.payload);
      if (market::Market* m = market(p.market)) m->ingest(at, p.item);
      return routing::Delivery::Consumed;
    }
    case routing::Inner::Chunk:
      // Inside the predicted region but not yet at the initiator: hold it
      // until the initiator comes within one hop.
      if (msg.dest_node && *msg.dest_node != at) return routing::Delivery::Hold;
      nodes_[at.value]->accept_chunk(wire::decode_chunk(msg.payload));
      return routing::Delivery::Consumed;
  }
  return routing::Delivery::Consumed;
}

void Simulation::tick() {
  for (const auto& [a, b] : kernel_->gained_links()) {
    if (is_ads(a)) nodes_[a.value]->on_link_gained(b, is_support(b));
    if (is_ads(b)) nodes_[b.value]->on_link_gained(a, is_support(a));
  }
  for (const auto& m : markets_) m->tick(ads_ids_);
  for (NodeId a : ads_ids_) {
    for (NodeId b : kernel_->neighbors(a)) {
      if (b > a && is_ads(b) && nodes_[a.value]->exchange_due(b)) nodes_[a.value]->start_exchange(b);
    }
  }
  for (NodeId a : ads_ids_) routers_[a.value]->tick();
  if (now() >= next_purge_) {
    for (NodeId a : ads_ids_) apps_[a.value]->purge_fakes();
    next_purge_ += cfg_.carla.purge_interval;
  }
  for (auto& fn : observers_) fn();
}

sim::RunStats Simulation::run_until(double t) { return kernel_->run_until(t); }

sim::RunStats Simulation::run() {
  sim::RunStats s = kernel_->run_until(cfg_.world.duration);
  kernel_->write_stats();
  trace_->flush();
  return s;
}

ads::Node& Simulation::node(NodeId n) {
  if (!is_ads(n)) throw UnknownNode("node " + std::to_string(n.value) + " is not an ADS node");
  return *nodes_[n.value];
}

carla::App& Simulation::app(NodeId n) {
  if (!is_ads(n)) throw UnknownNode("node " + std::to_string(n.value) + " is not an ADS node");
  return *apps_[n.value];
}

routing::Router& Simulation::router(NodeId n) {
  if (!is_ads(n)) throw UnknownNode("node " + std::to_string(n.value) + " is not an ADS node");
  return *routers_[n.value];
}

support::SupportNode& Simulation::support(NodeId n) {
  if (!is_support(n)) throw UnknownNode("node " + std::to_string(n.value) + " is not a support node");
  return *supports_[n.value];
}

std::vector<NodeId> Simulation::support_nodes() const {
  std::vector<NodeId> out;
  for (const auto& [id, h] : layout_.supports) out.push_back(id);
  return out;
}

market::Market* Simulation::market(MarketId id) {
  for (const auto& m : markets_) {
    if (m->id() == id) return m.get();
  }
  return nullptr;
}

market::Market* Simulation::market_at(std::string_view hotspot) {
  const Hotspot* h = cfg_.hotspot(hotspot);
  if (h == nullptr) return nullptr;
  for (const auto& m : markets_) {
    if (m->region() == h->region) return m.get();
  }
  return nullptr;
}

ads::ItemId Simulation::label(const std::string& name) const {
  auto it = layout_.labels.find(name);
  if (it == layout_.labels.end()) throw InvalidArgument("unknown label '" + name + "'");
  return it->second;
}

const ads::MovementPlan& Simulation::plan_of(NodeId n) const { return plans_.at(n.value); }

routing::MsgId Simulation::send_probe(NodeId from, const Region& dest, double ttl) {
  routing::Router& r = router(from);
  routing::RoutedMessage msg;
  msg.msg_id = r.next_msg_id();
  msg.origin = from;
  msg.dest_region = dest;
  msg.hop_limit = cfg_.ads.hop_limit;
  msg.carry_deadline = now() + ttl;
  msg.inner = routing::Inner::Probe;
  const routing::MsgId id = msg.msg_id;
  r.originate(std::move(msg));
  return id;
}

// --- workload script -----------------------------------------------------------

void Simulation::schedule_script() {
  for (const Directive& d : cfg_.workload) {
    kernel_->schedule(d.at, std::nullopt, sim::EventKind::Script, [this, &d] { execute(d); });
  }
}

void Simulation::script_error(const Directive& d, std::optional<NodeId> n, const std::string& what) {
  trace_->record(now(), n, "SCRIPT_ERROR", sim::Fields().add("line", d.line).add("verb", d.verb).add("error", clean(what)));
}

void Simulation::execute(const Directive& d) {
  const auto nodes = resolve(layout_, d.args.at(0));
  if (!nodes) {
    script_error(d, std::nullopt, "unknown nodes " + d.args.at(0));
    return;
  }
  for (NodeId n : *nodes) {
    try {
      run_directive(d, n);
    } catch (const Error& e) {
      script_error(d, n, e.what());
    }
  }
  if (d.verb == "rank") rank_oracle();
}

void Simulation::run_directive(const Directive& d, NodeId n) {
  const auto& a = d.args;
  const std::string& v = d.verb;
  ads::Node& node = this->node(n);
  carla::App& app = this->app(n);
  trace_->record(now(), n, "SCRIPT", sim::Fields().add("line", d.line).add("verb", v));

  if (v == "release") {
    ads::Attributes extra = key_values(a, 4);
    std::optional<Region> at;
    if (auto it = extra.find("at"); it != extra.end()) {
      at = cfg_.hotspot(it->second)->region;
      extra.erase(it);
    }
    app.release_material(label(a[1]), a[2], a[3], std::move(extra), at);
  } else if (v == "publish" || v == "create") {
    const ads::ItemId id = label(a[1]);
    ads::InfoItem item = node.store().contains(id) ? node.update_item(id, key_values(a, 3))
                                                   : node.create_item(a[2], key_values(a, 3), id.counter);
    if (v == "publish") node.publish(item);
  } else if (v == "annotate") {
    std::string text;
    for (std::size_t i = 3; i < a.size(); ++i) text += (text.empty() ? "" : " ") + a[i];
    app.annotate(label(a[1]), label(a[2]), text);
  } else if (v == "ask") {
    std::vector<std::string> choices;
    std::size_t start = 0;
    while (start <= a[4].size()) {
      std::size_t end = a[4].find('|', start);
      if (end == std::string::npos) end = a[4].size();
      choices.push_back(a[4].substr(start, end - start));
      start = end + 1;
    }
    app.ask(label(a[1]), a[2], choices, static_cast<std::uint32_t>(std::stoul(a[3])));
  } else if (v == "link") {
    app.link(label(a[1]), label(a[2]), label(a[3]));
  } else if (v == "evaluate") {
    app.evaluate(label(a[1]), a[2] == "-1" ? -1 : 1);
  } else if (v == "answer") {
    app.answer(label(a[1]), static_cast<std::uint32_t>(std::stoul(a[2])));
  } else if (v == "joker") {
    app.use_joker(*carla::parse_joker(a[1]), label(a[2]));
  } else if (v == "rank") {
    std::size_t global = 0;
    for (NodeId p : ads_ids_) global += apps_[p.value]->answered().size();
    app.quiz_rank(global);
  } else if (v == "attend") {
    auto& m = kernel_->mobility(n);
    const Position target = in_disk(cfg_.hotspot(a[1])->region, 0.5, kernel_->rng(n, sim::Stream::Mobility));
    if (!(m.speed > 0.0)) m.speed = cfg_.mobility.speed_max;
    const double arrive = now() + distance(m.current, target) / m.speed;
    std::deque<sim::Waypoint> wps = m.waypoints;
    wps.push_front({target, std::max(0.0, std::stod(a[2]) - arrive)});
    kernel_->set_waypoints(n, std::move(wps));
  } else if (v == "skip_lecture") {
    app.fetch_missed_material(a[1], std::stod(a[2]), plan_of(n));
  } else if (v == "query") {
    ads::Selector sel;
    sel.categories = categories(a[1]);
    std::optional<std::uint32_t> expected;
    for (auto& [k, val] : key_values(a, 3)) {
      if (k == "expected") expected = static_cast<std::uint32_t>(std::stoul(val));
      else if (k == "max") sel.max_results = static_cast<std::uint32_t>(std::stoul(val));
      else sel.predicate[k] = val;
    }
    node.launch_asrq(sel, std::stod(a[2]), plan_of(n), expected);
  } else if (v == "sync") {
    ads::Selector sel;
    sel.categories = categories(a[1]);
    const std::uint32_t radius = a.size() > 3 ? static_cast<std::uint32_t>(std::stoul(a[3])) : cfg_.ads.hop_radius;
    node.query_sync(sel, std::stod(a[2]), radius, {});
  } else if (v == "probe") {
    send_probe(n, cfg_.hotspot(a[1])->region, std::stod(a[2]));
  } else {
    throw InvalidArgument("unknown directive " + v);
  }
}

void Simulation::rank_oracle() {
  // Omniscient view: every answer item straight from its author.
  std::vector<ads::InfoItem> answers;
  for (NodeId p : ads_ids_) {
    for (const auto& [q, aid] : apps_[p.value]->answered()) {
      if (const ads::InfoItem* item = nodes_[p.value]->store().find(aid)) answers.push_back(*item);
    }
  }
  std::map<NodeId, std::uint32_t> scores;
  for (NodeId p : roster_->players) scores[p] = 0;
  for (const auto& [p, s] : carla::scores_from(answers)) {
    if (roster_->players.count(p) != 0) scores[p] = s;
  }
  std::string shown;
  for (const carla::RankEntry& e : carla::rank(scores)) {
    shown += (shown.empty() ? "" : ",") + std::to_string(e.player.value) + ":" + std::to_string(e.score);
  }
  trace_->record(now(), std::nullopt, "QUIZ_ORACLE", sim::Fields().add("ranking", shown).add("global", answers.size()));
}

}  // namespace adsim::scenario
