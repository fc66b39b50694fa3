#include "adsim/scenario/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "adsim/core/error.hpp"

namespace adsim::scenario {

std::string_view model_name(MobilityModel m) {
  switch (m) {
    case MobilityModel::Poi: return "poi";
    case MobilityModel::RandomWaypoint: return "random_waypoint";
    case MobilityModel::Static: return "static";
    case MobilityModel::Itinerary: return "itinerary";
  }
  return "?";
}

const Hotspot* Config::hotspot(std::string_view name) const {
  for (const auto& h : hotspots) {
    if (h.name == name) return &h;
  }
  return nullptr;
}

const Group* Config::group(std::string_view name) const {
  for (const auto& g : groups) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(sep, start);
    if (end == std::string_view::npos) end = s.size();
    out.emplace_back(trim(s.substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

double to_double(std::string_view v, int line, std::string_view key) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ParseError(line, fmt::format("{}: '{}' is not a number", key, v));
  }
  return out;
}

std::uint64_t to_u64(std::string_view v, int line, std::string_view key) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ParseError(line, fmt::format("{}: '{}' is not a non-negative integer", key, v));
  }
  return out;
}

std::uint32_t to_u32(std::string_view v, int line, std::string_view key) {
  const std::uint64_t x = to_u64(v, line, key);
  if (x > 0xffffffffULL) throw ParseError(line, fmt::format("{}: {} is too large", key, v));
  return static_cast<std::uint32_t>(x);
}

bool to_bool(std::string_view v, int line, std::string_view key) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ParseError(line, fmt::format("{}: '{}' is not a boolean", key, v));
}

Position to_position(std::string_view v, int line, std::string_view key) {
  std::vector<std::string> parts = v.find(',') != std::string_view::npos ? split(v, ',') : words(v);
  if (parts.size() != 2) throw ParseError(line, fmt::format("{}: expected 'x,y', got '{}'", key, v));
  return {to_double(parts[0], line, key), to_double(parts[1], line, key)};
}

std::set<std::string> to_set(std::string_view v, int line, std::string_view key) {
  std::set<std::string> out;
  for (auto& s : split(v, ',')) {
    if (s.empty()) throw ParseError(line, fmt::format("{}: empty list element", key));
    out.insert(std::move(s));
  }
  return out;
}

std::vector<std::string> to_list(std::string_view v, int line, std::string_view key) {
  std::vector<std::string> out;
  for (auto& s : split(v, ',')) {
    if (s.empty()) throw ParseError(line, fmt::format("{}: empty list element", key));
    out.push_back(std::move(s));
  }
  return out;
}

MobilityModel to_model(std::string_view v, int line) {
  if (v == "poi") return MobilityModel::Poi;
  if (v == "random_waypoint") return MobilityModel::RandomWaypoint;
  if (v == "static") return MobilityModel::Static;
  if (v == "itinerary") return MobilityModel::Itinerary;
  throw ParseError(line, fmt::format("mobility: unknown model '{}'", v));
}

enum class Section { None, World, Radio, Mobility, Ads, Carla, Hotspot, Group, Workload };

struct Parser {
  Config cfg;
  Section section = Section::None;
  std::string list;  // active list block inside a group
  int line = 0;

  [[noreturn]] void unknown(std::string_view key) const {
    throw ParseError(line, fmt::format("unknown key '{}'", key));
  }

  void open_section(std::string_view body) {
    list.clear();
    std::vector<std::string> w = words(body);
    if (w.empty()) throw ParseError(line, "empty section header");
    const std::string& kind = w[0];
    auto plain = [&](Section s) {
      if (w.size() != 1) throw ParseError(line, fmt::format("section [{}] takes no name", kind));
      section = s;
    };
    if (kind == "world") return plain(Section::World);
    if (kind == "radio") return plain(Section::Radio);
    if (kind == "mobility") return plain(Section::Mobility);
    if (kind == "ads") return plain(Section::Ads);
    if (kind == "carla") return plain(Section::Carla);
    if (kind == "workload") return plain(Section::Workload);
    if (kind == "hotspot" || kind == "group") {
      if (w.size() != 2) throw ParseError(line, fmt::format("section [{}] needs exactly one name", kind));
      if (kind == "hotspot") {
        cfg.hotspots.push_back(Hotspot{});
        cfg.hotspots.back().name = w[1];
        section = Section::Hotspot;
      } else {
        cfg.groups.push_back(Group{});
        cfg.groups.back().name = w[1];
        section = Section::Group;
      }
      return;
    }
    throw ParseError(line, fmt::format("unknown section [{}]", kind));
  }

  void key_value(std::string_view key, std::string_view v) {
    switch (section) {
      case Section::None:
        throw ParseError(line, "key outside of any section");
      case Section::World: {
        auto& w = cfg.world;
        if (key == "width") w.width = to_double(v, line, key);
        else if (key == "height") w.height = to_double(v, line, key);
        else if (key == "duration") w.duration = to_double(v, line, key);
        else if (key == "tick") w.tick = to_double(v, line, key);
        else if (key == "seed") w.seed = to_u64(v, line, key);
        else unknown(key);
        return;
      }
      case Section::Radio: {
        auto& r = cfg.radio;
        if (key == "range") r.range = to_double(v, line, key);
        else if (key == "loss_prob") r.loss_prob = to_double(v, line, key);
        else if (key == "latency") r.latency_per_hop = to_double(v, line, key);
        else unknown(key);
        return;
      }
      case Section::Mobility: {
        auto& m = cfg.mobility;
        if (key == "model") m.model = to_model(v, line);
        else if (key == "speed_min") m.speed_min = to_double(v, line, key);
        else if (key == "speed_max") m.speed_max = to_double(v, line, key);
        else if (key == "dwell_min") m.dwell_min = to_double(v, line, key);
        else if (key == "dwell_max") m.dwell_max = to_double(v, line, key);
        else unknown(key);
        return;
      }
      case Section::Ads: {
        auto& a = cfg.ads;
        if (key == "k") a.k = to_u32(v, line, key);
        else if (key == "chunk_size") a.chunk_size = to_u32(v, line, key);
        else if (key == "hop_radius") a.hop_radius = to_u32(v, line, key);
        else if (key == "sync_timeout") a.sync_timeout = to_double(v, line, key);
        else if (key == "budget") a.budget = to_u32(v, line, key);
        else if (key == "exchange_interval") a.exchange_interval = to_double(v, line, key);
        else if (key == "hop_limit") a.hop_limit = to_u32(v, line, key);
        else if (key == "density_threshold") a.density_threshold = to_u32(v, line, key);
        else if (key == "refresh_interval") a.refresh_interval = to_double(v, line, key);
        else if (key == "w_cat") a.w_cat = to_double(v, line, key);
        else if (key == "w_dist") a.w_dist = to_double(v, line, key);
        else if (key == "publish_ttl") a.publish_ttl = to_double(v, line, key);
        else unknown(key);
        return;
      }
      case Section::Carla: {
        auto& c = cfg.carla;
        if (key == "fake_threshold") c.fake_threshold = static_cast<int>(to_u32(v, line, key));
        else if (key == "fake_min_evaluations") c.fake_min_evaluations = to_u32(v, line, key);
        else if (key == "purge_interval") c.purge_interval = to_double(v, line, key);
        else if (key == "jokers") c.jokers_per_kind = to_u32(v, line, key);
        else if (key == "quiz_deadline") c.quiz_deadline = to_double(v, line, key);
        else unknown(key);
        return;
      }
      case Section::Hotspot: {
        auto& h = cfg.hotspots.back();
        if (key == "center") h.region.center = to_position(v, line, key);
        else if (key == "radius") h.region.radius = to_double(v, line, key);
        else if (key == "market") h.market = to_bool(v, line, key);
        else if (key == "support") h.support = to_bool(v, line, key);
        else if (key == "categories") h.categories = to_set(v, line, key);
        else unknown(key);
        return;
      }
      case Section::Group: {
        auto& g = cfg.groups.back();
        if (key == "role") {
          if (v == "student") g.role = carla::Role::Student;
          else if (v == "staff") g.role = carla::Role::Staff;
          else throw ParseError(line, fmt::format("role: unknown role '{}'", v));
        } else if (key == "count") g.count = to_u32(v, line, key);
        else if (key == "interests") g.interests = to_set(v, line, key);
        else if (key == "budget") g.budget = to_u32(v, line, key);
        else if (key == "start") g.start = std::string(v);
        else if (key == "mobility") g.mobility = to_model(v, line);
        else if (key == "pois") g.pois = to_list(v, line, key);
        else if (key == "speed") g.speed = to_double(v, line, key);
        else if (key == "know_markets") g.know_markets = to_bool(v, line, key);
        else unknown(key);
        return;
      }
      case Section::Workload:
        break;
    }
    throw ParseError(line, "unexpected key");
  }

  void list_entry(std::string_view body) {
    auto& g = cfg.groups.back();
    std::vector<std::string> w = words(body);
    if (list == "positions") {
      g.positions.push_back(to_position(body, line, list));
    } else if (list == "itinerary") {
      if (w.size() != 2) throw ParseError(line, "itinerary entry is 'DEPART HOTSPOT'");
      g.itinerary.push_back(Stop{to_double(w[0], line, "itinerary"), w[1]});
    } else if (list == "plan") {
      if (w.size() != 3) throw ParseError(line, "plan entry is 'FROM TO HOTSPOT'");
      g.plan.push_back(PlanLine{to_double(w[0], line, "plan"), to_double(w[1], line, "plan"), w[2]});
    }
  }

  void directive(std::string_view body) {
    std::vector<std::string> w = words(body);
    if (w.size() < 2) throw ParseError(line, "workload line is 'TIME VERB ARGS...'");
    Directive d;
    d.at = to_double(w[0], line, "time");
    d.verb = w[1];
    d.args.assign(w.begin() + 2, w.end());
    d.line = line;
    cfg.workload.push_back(std::move(d));
  }

  void feed(std::string_view raw) {
    ++line;
    std::string_view t = trim(raw);
    if (t.empty() || t.front() == '#') return;
    if (line_is_header_) {
      if (t.rfind("adsim-scenario", 0) != 0) throw ParseError(line, "missing 'adsim-scenario 1' header");
      std::vector<std::string> w = words(t);
      if (w.size() != 2 || w[1] != std::to_string(kFormatVersion)) {
        throw ParseError(line, fmt::format("unsupported scenario format '{}'", t));
      }
      line_is_header_ = false;
      return;
    }
    if (auto hash = t.find(" #"); hash != std::string_view::npos) t = trim(t.substr(0, hash));
    if (t.front() == '[') {
      if (t.back() != ']') throw ParseError(line, "unterminated section header");
      open_section(t.substr(1, t.size() - 2));
      return;
    }
    if (section == Section::Workload) return directive(t);
    const bool indented = raw.front() == ' ' || raw.front() == '\t';
    if (indented && !list.empty()) return list_entry(t);
    list.clear();
    if (t.back() == ':') {
      std::string_view name = trim(t.substr(0, t.size() - 1));
      if (section != Section::Group || (name != "positions" && name != "itinerary" && name != "plan")) {
        throw ParseError(line, fmt::format("unexpected list block '{}'", name));
      }
      list = std::string(name);
      return;
    }
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError(line, fmt::format("expected 'key = value', got '{}'", t));
    std::string_view key = trim(t.substr(0, eq));
    std::string_view value = trim(t.substr(eq + 1));
    if (key.empty() || value.empty()) throw ParseError(line, "empty key or value");
    key_value(key, value);
  }

  bool line_is_header_ = true;
};

std::string fmt_num(double v) { return fmt::format("{}", v); }

std::string join(const std::set<std::string>& s) {
  std::string out;
  for (const auto& x : s) out += (out.empty() ? "" : ",") + x;
  return out;
}

}  // namespace

Config parse(std::istream& in) {
  Parser p;
  std::string raw;
  while (std::getline(in, raw)) p.feed(raw);
  if (p.line_is_header_) throw ParseError(p.line, "missing 'adsim-scenario 1' header");
  return std::move(p.cfg);
}

Config load_string(const std::string& text) {
  std::istringstream in(text);
  Config cfg = parse(in);
  check(cfg);
  return cfg;
}

Config load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  Config cfg = parse(in);
  check(cfg);
  return cfg;
}

std::string serialize(const Config& c) {
  std::string out = fmt::format("adsim-scenario {}\n", kFormatVersion);
  auto kv = [&](std::string_view k, const std::string& v) { out += fmt::format("{} = {}\n", k, v); };

  out += "\n[world]\n";
  kv("width", fmt_num(c.world.width));
  kv("height", fmt_num(c.world.height));
  kv("duration", fmt_num(c.world.duration));
  kv("tick", fmt_num(c.world.tick));
  kv("seed", std::to_string(c.world.seed));

  out += "\n[radio]\n";
  kv("range", fmt_num(c.radio.range));
  kv("loss_prob", fmt_num(c.radio.loss_prob));
  kv("latency", fmt_num(c.radio.latency_per_hop));

  out += "\n[mobility]\n";
  kv("model", std::string(model_name(c.mobility.model)));
  kv("speed_min", fmt_num(c.mobility.speed_min));
  kv("speed_max", fmt_num(c.mobility.speed_max));
  kv("dwell_min", fmt_num(c.mobility.dwell_min));
  kv("dwell_max", fmt_num(c.mobility.dwell_max));

  out += "\n[ads]\n";
  kv("k", std::to_string(c.ads.k));
  kv("chunk_size", std::to_string(c.ads.chunk_size));
  kv("hop_radius", std::to_string(c.ads.hop_radius));
  kv("sync_timeout", fmt_num(c.ads.sync_timeout));
  kv("budget", std::to_string(c.ads.budget));
  kv("exchange_interval", fmt_num(c.ads.exchange_interval));
  kv("hop_limit", std::to_string(c.ads.hop_limit));
  kv("density_threshold", std::to_string(c.ads.density_threshold));
  kv("refresh_interval", fmt_num(c.ads.refresh_interval));
  kv("w_cat", fmt_num(c.ads.w_cat));
  kv("w_dist", fmt_num(c.ads.w_dist));
  kv("publish_ttl", fmt_num(c.ads.publish_ttl));

  out += "\n[carla]\n";
  kv("fake_threshold", std::to_string(c.carla.fake_threshold));
  kv("fake_min_evaluations", std::to_string(c.carla.fake_min_evaluations));
  kv("purge_interval", fmt_num(c.carla.purge_interval));
  kv("jokers", std::to_string(c.carla.jokers_per_kind));
  kv("quiz_deadline", fmt_num(c.carla.quiz_deadline));

  for (const Hotspot& h : c.hotspots) {
    out += fmt::format("\n[hotspot {}]\n", h.name);
    kv("center", fmt_num(h.region.center.x) + "," + fmt_num(h.region.center.y));
    kv("radius", fmt_num(h.region.radius));
    kv("market", h.market ? "true" : "false");
    kv("support", h.support ? "true" : "false");
    if (!h.categories.empty()) kv("categories", join(h.categories));
  }

  for (const Group& g : c.groups) {
    out += fmt::format("\n[group {}]\n", g.name);
    kv("role", g.role == carla::Role::Staff ? "staff" : "student");
    kv("count", std::to_string(g.count));
    if (!g.interests.empty()) kv("interests", join(g.interests));
    if (g.budget) kv("budget", std::to_string(*g.budget));
    kv("start", g.start);
    if (g.mobility) kv("mobility", std::string(model_name(*g.mobility)));
    if (!g.pois.empty()) {
      std::string p;
      for (const auto& x : g.pois) p += (p.empty() ? "" : ",") + x;
      kv("pois", p);
    }
    if (g.speed) kv("speed", fmt_num(*g.speed));
    kv("know_markets", g.know_markets ? "true" : "false");
    if (!g.positions.empty()) {
      out += "positions:\n";
      for (const Position& p : g.positions) out += fmt::format("  {},{}\n", fmt_num(p.x), fmt_num(p.y));
    }
    if (!g.itinerary.empty()) {
      out += "itinerary:\n";
      for (const Stop& s : g.itinerary) out += fmt::format("  {} {}\n", fmt_num(s.depart), s.hotspot);
    }
    if (!g.plan.empty()) {
      out += "plan:\n";
      for (const PlanLine& p : g.plan) out += fmt::format("  {} {} {}\n", fmt_num(p.from), fmt_num(p.to), p.hotspot);
    }
  }

  out += "\n[workload]\n";
  for (const Directive& d : c.workload) {
    out += fmt_num(d.at) + " " + d.verb;
    for (const auto& a : d.args) out += " " + a;
    out += "\n";
  }
  return out;
}

}  // namespace adsim::scenario
