#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "adsim/ads/item.hpp"
#include "adsim/ads/plan.hpp"
#include "adsim/carla/app.hpp"
#include "adsim/core/geometry.hpp"
#include "adsim/sim/kernel.hpp"

namespace adsim::scenario {

inline constexpr int kFormatVersion = 1;

struct WorldConfig {
  double width = 1000.0;
  double height = 1000.0;
  double duration = 3600.0;
  double tick = 1.0;
  std::uint64_t seed = 1;
  friend bool operator==(const WorldConfig&, const WorldConfig&) = default;
};

enum class MobilityModel { Poi, RandomWaypoint, Static, Itinerary };
std::string_view model_name(MobilityModel m);

struct MobilityConfig {
  MobilityModel model = MobilityModel::Poi;  // default for groups that do not choose
  double speed_min = 0.8;
  double speed_max = 1.6;
  double dwell_min = 30.0;
  double dwell_max = 300.0;
  friend bool operator==(const MobilityConfig&, const MobilityConfig&) = default;
};

struct AdsConfig {
  std::uint32_t k = 3;
  std::uint32_t chunk_size = 5;
  std::uint32_t hop_radius = 2;
  double sync_timeout = 2.0;
  std::uint32_t budget = 10;
  double exchange_interval = 30.0;
  std::uint32_t hop_limit = 32;
  std::uint32_t density_threshold = 3;
  double refresh_interval = 300.0;
  double w_cat = 1.0;
  double w_dist = 0.5;
  double publish_ttl = 1800.0;
  friend bool operator==(const AdsConfig&, const AdsConfig&) = default;
};

struct Hotspot {
  std::string name;
  Region region;
  bool market = false;
  bool support = false;  // one stationary support node at the centre
  std::set<ads::Category> categories;  // advertised even while empty
  friend bool operator==(const Hotspot&, const Hotspot&) = default;
};

struct Stop {
  double depart = 0.0;  // leave the previous place at this time
  std::string hotspot;
  friend bool operator==(const Stop&, const Stop&) = default;
};

struct PlanLine {
  double from = 0.0;
  double to = 0.0;
  std::string hotspot;
  friend bool operator==(const PlanLine&, const PlanLine&) = default;
};

struct Group {
  std::string name;
  carla::Role role = carla::Role::Student;
  std::uint32_t count = 1;
  std::set<ads::Category> interests;
  std::optional<std::uint32_t> budget;
  std::string start = "random";  // hotspot name or "random"
  std::optional<MobilityModel> mobility;
  std::vector<std::string> pois;  // poi model destinations; empty = every hotspot
  std::optional<double> speed;
  bool know_markets = false;  // preloaded with every market descriptor
  std::vector<Position> positions;
  std::vector<Stop> itinerary;
  std::vector<PlanLine> plan;
  friend bool operator==(const Group&, const Group&) = default;
};

/// One timed workload line: `TIME VERB ARGS...`.
struct Directive {
  double at = 0.0;
  std::string verb;
  std::vector<std::string> args;
  int line = 0;  // source line, for messages only
  friend bool operator==(const Directive& a, const Directive& b) {
    return a.at == b.at && a.verb == b.verb && a.args == b.args;
  }
};

struct Config {
  WorldConfig world;
  sim::RadioModel radio;
  MobilityConfig mobility;
  AdsConfig ads;
  carla::CarlaParams carla;
  std::vector<Hotspot> hotspots;
  std::vector<Group> groups;
  std::vector<Directive> workload;

  const Hotspot* hotspot(std::string_view name) const;
  const Group* group(std::string_view name) const;
  friend bool operator==(const Config&, const Config&) = default;
};

/// Node ids and script labels as fixed by a config: groups in file order,
/// then one support node per flagged hotspot.
struct Layout {
  std::map<std::string, std::vector<NodeId>> groups;
  std::vector<std::pair<NodeId, std::string>> supports;  // node, hotspot
  std::map<NodeId, const Group*> group_of;
  std::map<std::string, ads::ItemId> labels;
  std::map<std::string, std::string> label_category;
  std::map<NodeId, std::uint32_t> reserved;  // pinned item counters per node
  std::size_t node_count = 0;
};

/// Syntax only. Throws ParseError.
Config parse(std::istream& in);
/// Parse plus validation. Throws ParseError, ValidationError, IoError.
Config load(const std::string& path);
Config load_string(const std::string& text);

/// Every semantic problem in `cfg`; empty when valid.
std::vector<std::string> validate(const Config& cfg);
/// Throws ValidationError listing every problem.
void check(const Config& cfg);

/// Requires a valid config.
Layout layout(const Config& cfg);
/// Node ids a reference names: `group` (all of it) or `group.index`.
std::optional<std::vector<NodeId>> resolve(const Layout& l, const std::string& ref);

/// Canonical text form; parse(serialize(c)) == c for valid configs.
std::string serialize(const Config& cfg);

}  // namespace adsim::scenario
