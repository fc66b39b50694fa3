#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "adsim/core/error.hpp"
#include "adsim/scenario/config.hpp"

namespace adsim::scenario {

namespace {

bool inside_world(const Config& c, Position p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0.0 && p.y >= 0.0 && p.x <= c.world.width &&
         p.y <= c.world.height;
}

bool is_kv(const std::string& s) { return s.find('=') != std::string::npos && s.front() != '='; }

struct Ctx {
  const Config& cfg;
  std::vector<std::string>& out;

  template <typename... Args>
  void problem(fmt::format_string<Args...> f, Args&&... args) {
    out.push_back(fmt::format(f, std::forward<Args>(args)...));
  }
};

void check_scalars(Ctx& x) {
  const Config& c = x.cfg;
  if (!(c.world.width > 0.0) || !(c.world.height > 0.0)) x.problem("world: width and height must be positive");
  if (!(c.world.duration >= 0.0)) x.problem("world: duration must be non-negative");
  if (!(c.world.tick > 0.0)) x.problem("world: tick must be positive");
  if (!(c.radio.range > 0.0)) x.problem("radio: range must be positive");
  if (!(c.radio.loss_prob >= 0.0 && c.radio.loss_prob <= 1.0)) x.problem("radio: loss_prob must lie in [0,1]");
  if (!(c.radio.latency_per_hop > 0.0)) x.problem("radio: latency must be positive");
  if (!(c.radio.latency_per_hop * 4.0 < c.world.tick)) x.problem("radio: latency must be well below the tick (4x)");
  const auto& m = c.mobility;
  if (!(m.speed_min >= 0.0 && m.speed_min <= m.speed_max)) x.problem("mobility: need 0 <= speed_min <= speed_max");
  if (!(m.dwell_min >= 0.0 && m.dwell_min <= m.dwell_max)) x.problem("mobility: need 0 <= dwell_min <= dwell_max");
  const auto& a = c.ads;
  if (a.k < 1) x.problem("ads: k must be at least 1");
  if (a.chunk_size < 1) x.problem("ads: chunk_size must be at least 1");
  if (a.hop_radius > 16) x.problem("ads: hop_radius must be at most 16");
  if (!(a.sync_timeout > 0.0)) x.problem("ads: sync_timeout must be positive");
  if (a.budget < 1) x.problem("ads: budget must be at least 1");
  if (!(a.exchange_interval >= 0.0)) x.problem("ads: exchange_interval must be non-negative");
  if (a.hop_limit < 1) x.problem("ads: hop_limit must be at least 1");
  if (a.density_threshold < 1) x.problem("ads: density_threshold must be at least 1");
  if (!(a.refresh_interval > 0.0)) x.problem("ads: refresh_interval must be positive");
  if (!(a.w_cat >= 0.0) || !(a.w_dist >= 0.0)) x.problem("ads: selection weights must be non-negative");
  if (!(a.publish_ttl > 0.0)) x.problem("ads: publish_ttl must be positive");
  const auto& k = c.carla;
  if (k.fake_threshold < 1) x.problem("carla: fake_threshold must be at least 1");
  if (k.fake_min_evaluations < 1) x.problem("carla: fake_min_evaluations must be at least 1");
  if (!(k.purge_interval > 0.0)) x.problem("carla: purge_interval must be positive");
  if (!(k.quiz_deadline >= 0.0)) x.problem("carla: quiz_deadline must be non-negative");
}

void check_hotspots(Ctx& x) {
  std::set<std::string> seen;
  for (const Hotspot& h : x.cfg.hotspots) {
    if (!seen.insert(h.name).second) x.problem("hotspot '{}' is defined twice", h.name);
    const Region& r = h.region;
    if (!(r.radius > 0.0)) x.problem("hotspot '{}' needs a positive radius", h.name);
    if (!inside_world(x.cfg, {r.center.x - r.radius, r.center.y - r.radius}) ||
        !inside_world(x.cfg, {r.center.x + r.radius, r.center.y + r.radius})) {
      x.problem("hotspot '{}' lies outside the world", h.name);
    }
  }
}

void check_group(Ctx& x, const Group& g) {
  const Config& c = x.cfg;
  auto known = [&](const std::string& h) { return c.hotspot(h) != nullptr; };
  if (g.name.find('.') != std::string::npos) x.problem("group '{}': names may not contain '.'", g.name);
  if (g.count < 1) x.problem("group '{}': count must be at least 1", g.name);
  if (g.interests.empty()) x.problem("group '{}': interests must not be empty", g.name);
  if (g.budget && *g.budget < 1) x.problem("group '{}': budget must be at least 1", g.name);
  if (g.speed && !(*g.speed >= 0.0)) x.problem("group '{}': speed must be non-negative", g.name);
  if (g.start != "random" && !known(g.start)) x.problem("group '{}': unknown start hotspot '{}'", g.name, g.start);
  for (const auto& p : g.pois) {
    if (!known(p)) x.problem("group '{}': unknown poi '{}'", g.name, p);
  }
  const MobilityModel model = g.mobility.value_or(c.mobility.model);
  if (!g.positions.empty()) {
    if (g.positions.size() != g.count) x.problem("group '{}': {} positions for {} nodes", g.name, g.positions.size(), g.count);
    for (const Position& p : g.positions) {
      if (!inside_world(c, p)) x.problem("group '{}': position {},{} lies outside the world", g.name, p.x, p.y);
    }
  }
  if (model == MobilityModel::Poi && g.pois.empty() && c.hotspots.empty()) {
    x.problem("group '{}': poi mobility needs hotspots", g.name);
  }
  if (model == MobilityModel::Itinerary) {
    if (g.itinerary.empty()) x.problem("group '{}': itinerary mobility needs an itinerary block", g.name);
    const Hotspot* prev = c.hotspot(g.start);
    if (prev == nullptr) x.problem("group '{}': itinerary mobility needs a start hotspot", g.name);
    const double speed = g.speed.value_or(c.mobility.speed_max);
    if (!g.itinerary.empty() && !(speed > 0.0)) x.problem("group '{}': itinerary needs a positive speed", g.name);
    double last = -1.0;
    for (std::size_t i = 0; i < g.itinerary.size(); ++i) {
      const Stop& s = g.itinerary[i];
      const Hotspot* h = c.hotspot(s.hotspot);
      if (h == nullptr) x.problem("group '{}': itinerary stop {} names unknown hotspot '{}'", g.name, i, s.hotspot);
      if (!(s.depart > last)) x.problem("group '{}': itinerary departures must increase (stop {})", g.name, i);
      if (h != nullptr && prev != nullptr && speed > 0.0 && i + 1 < g.itinerary.size()) {
        // Nodes stand anywhere within half the radius of a hotspot centre.
        const double slack = 0.5 * (prev->region.radius + h->region.radius);
        const double arrive = s.depart + (distance(prev->region.center, h->region.center) + slack) / speed;
        if (arrive > g.itinerary[i + 1].depart) {
          x.problem("group '{}': itinerary stop {} ({}) is unreachable before the next departure", g.name, i, s.hotspot);
        }
      }
      if (h != nullptr) prev = h;
      last = s.depart;
    }
  } else if (!g.itinerary.empty()) {
    x.problem("group '{}': itinerary given but mobility is {}", g.name, model_name(model));
  }
  if (!g.plan.empty()) {
    ads::MovementPlan plan;
    bool ok = true;
    for (const PlanLine& p : g.plan) {
      const Hotspot* h = c.hotspot(p.hotspot);
      if (h == nullptr) {
        x.problem("group '{}': plan names unknown hotspot '{}'", g.name, p.hotspot);
        ok = false;
        continue;
      }
      plan.entries.push_back({p.from, p.to, h->region});
    }
    if (ok) {
      for (const auto& p : plan.problems()) x.problem("group '{}': {}", g.name, p);
    }
  }
}

// Walks the script in execution order, assigning label ids. Problems go to
// `x` when given.
Layout build_layout(const Config& c, Ctx* x) {
  Layout l;
  std::uint32_t next = 0;
  for (const Group& g : c.groups) {
    auto& ids = l.groups[g.name];
    for (std::uint32_t i = 0; i < g.count; ++i) {
      ids.push_back(NodeId{next});
      l.group_of[NodeId{next}] = &g;
      ++next;
    }
  }
  for (const Hotspot& h : c.hotspots) {
    if (h.support) l.supports.emplace_back(NodeId{next++}, h.name);
  }
  l.node_count = next;

  std::vector<const Directive*> order;
  for (const Directive& d : c.workload) order.push_back(&d);
  std::stable_sort(order.begin(), order.end(), [](const Directive* a, const Directive* b) { return a->at < b->at; });

  std::map<std::string, NodeId> owner;
  for (const Directive* d : order) {
    static const std::set<std::string> creators = {"release", "publish", "create", "annotate", "ask", "link"};
    if (creators.count(d->verb) == 0 || d->args.size() < 2) continue;
    auto nodes = resolve(l, d->args[0]);
    if (!nodes || nodes->size() != 1) continue;
    const NodeId n = nodes->front();
    std::string category;
    if (d->verb == "annotate") category = carla::kAnnotation;
    else if (d->verb == "ask") category = carla::kQuestion;
    else if (d->verb == "link") category = carla::kLink;
    else if (d->args.size() >= 3) category = d->args[2];
    const std::string& label = d->args[1];
    auto it = owner.find(label);
    if (it == owner.end()) {
      owner.emplace(label, n);
      l.labels[label] = ads::ItemId{n, l.reserved[n]++};
      l.label_category[label] = category;
    } else {
      const bool reissue = (d->verb == "release" || d->verb == "publish") && it->second == n &&
                           l.label_category[label] == category;
      if (!reissue && x != nullptr) {
        x->problem("line {}: label '{}' is already defined", d->line, label);
      }
    }
  }
  return l;
}

void check_workload(Ctx& x) {
  const Config& c = x.cfg;
  const Layout l = build_layout(c, &x);
  for (const Directive& d : c.workload) {
    const auto& a = d.args;
    auto bad = [&](std::string_view why) { x.problem("line {}: {} {}", d.line, d.verb, why); };
    if (!(d.at >= 0.0 && d.at <= c.world.duration)) bad("is scheduled outside [0, duration]");

    auto arity = [&](std::size_t lo, std::size_t hi) {
      if (a.size() < lo || a.size() > hi) {
        bad(fmt::format("takes {} to {} arguments, got {}", lo, hi, a.size()));
        return false;
      }
      return true;
    };
    auto nodes = [&](std::size_t i, bool single) {
      auto r = resolve(l, a[i]);
      if (!r) bad(fmt::format("names unknown nodes '{}'", a[i]));
      else if (single && r->size() != 1) bad(fmt::format("needs a single node, '{}' names {}", a[i], r->size()));
      return r;
    };
    auto label = [&](std::size_t i) {
      if (l.labels.count(a[i]) == 0) bad(fmt::format("references undefined label '{}'", a[i]));
    };
    auto number = [&](std::size_t i, bool positive) {
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(a[i], &used);
        if (used != a[i].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        bad(fmt::format("expects a number, got '{}'", a[i]));
        return;
      }
      if (positive ? !(v > 0.0) : !(v >= 0.0)) bad(fmt::format("expects a {} number, got '{}'", positive ? "positive" : "non-negative", a[i]));
    };
    auto hotspot = [&](std::size_t i) {
      if (c.hotspot(a[i]) == nullptr) bad(fmt::format("names unknown hotspot '{}'", a[i]));
    };
    auto kvs = [&](std::size_t from) {
      for (std::size_t i = from; i < a.size(); ++i) {
        if (!is_kv(a[i])) bad(fmt::format("expects key=value, got '{}'", a[i]));
      }
    };
    auto staff_only = [&](std::size_t i) {
      if (auto r = resolve(l, a[i])) {
        for (NodeId n : *r) {
          if (l.group_of.at(n)->role != carla::Role::Staff) bad(fmt::format("by non-staff node {}", n.value));
        }
      }
    };

    const std::string& v = d.verb;
    if (v == "release") {
      if (!arity(4, 64)) continue;
      nodes(0, true);
      staff_only(0);
      if (a[2] != carla::kSlide && a[2] != carla::kArticle) bad("category must be slide or article");
      kvs(4);
      for (std::size_t i = 4; i < a.size(); ++i) {
        if (a[i].rfind("at=", 0) == 0 && c.hotspot(a[i].substr(3)) == nullptr) bad("names an unknown release hotspot");
      }
    } else if (v == "publish" || v == "create") {
      if (!arity(3, 64)) continue;
      nodes(0, true);
      kvs(3);
    } else if (v == "annotate") {
      if (!arity(3, 256)) continue;
      nodes(0, true);
      label(2);
    } else if (v == "ask") {
      if (!arity(5, 5)) continue;
      nodes(0, true);
      number(3, false);
      const auto choices = std::count(a[4].begin(), a[4].end(), '|') + 1;
      if (a[3].find_first_not_of("0123456789") != std::string::npos || std::stol(a[3]) >= choices) {
        bad("correct choice must index the choices");
      }
    } else if (v == "link") {
      if (!arity(4, 4)) continue;
      nodes(0, true);
      label(2);
      label(3);
    } else if (v == "evaluate") {
      if (!arity(3, 3)) continue;
      nodes(0, false);
      label(1);
      if (a[2] != "+1" && a[2] != "-1" && a[2] != "1") bad("rating must be +1 or -1");
    } else if (v == "answer") {
      if (!arity(3, 3)) continue;
      nodes(0, false);
      label(1);
      number(2, false);
    } else if (v == "joker") {
      if (!arity(3, 3)) continue;
      nodes(0, false);
      if (!carla::parse_joker(a[1])) bad("kind must be link, annotation or statistics");
      label(2);
    } else if (v == "rank") {
      if (!arity(1, 1)) continue;
      nodes(0, false);
    } else if (v == "attend") {
      if (!arity(3, 3)) continue;
      nodes(0, false);
      hotspot(1);
      number(2, false);
    } else if (v == "skip_lecture") {
      if (!arity(3, 3)) continue;
      nodes(0, false);
      number(2, true);
    } else if (v == "query") {
      if (!arity(3, 64)) continue;
      nodes(0, false);
      number(2, true);
      kvs(3);
    } else if (v == "sync") {
      if (!arity(3, 4)) continue;
      nodes(0, false);
      number(2, true);
      if (a.size() == 4) number(3, false);
    } else if (v == "probe") {
      if (!arity(3, 3)) continue;
      nodes(0, false);
      hotspot(1);
      number(2, true);
    } else {
      x.problem("line {}: unknown directive '{}'", d.line, v);
    }
  }
}

}  // namespace

std::optional<std::vector<NodeId>> resolve(const Layout& l, const std::string& ref) {
  const auto dot = ref.find('.');
  const std::string name = ref.substr(0, dot);
  auto it = l.groups.find(name);
  if (it == l.groups.end()) return std::nullopt;
  if (dot == std::string::npos) return it->second;
  const std::string idx = ref.substr(dot + 1);
  if (idx.empty() || idx.find_first_not_of("0123456789") != std::string::npos || idx.size() > 9) return std::nullopt;
  const std::size_t i = std::stoul(idx);
  if (i >= it->second.size()) return std::nullopt;
  return std::vector<NodeId>{it->second[i]};
}

std::vector<std::string> validate(const Config& cfg) {
  std::vector<std::string> out;
  Ctx x{cfg, out};
  check_scalars(x);
  check_hotspots(x);
  std::set<std::string> names;
  for (const Group& g : cfg.groups) {
    if (!names.insert(g.name).second) x.problem("group '{}' is defined twice", g.name);
    check_group(x, g);
  }
  check_workload(x);
  return out;
}

void check(const Config& cfg) {
  std::vector<std::string> problems = validate(cfg);
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

Layout layout(const Config& cfg) { return build_layout(cfg, nullptr); }

}  // namespace adsim::scenario
