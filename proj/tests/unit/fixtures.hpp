#pragma once

#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "adsim/scenario/config.hpp"
#include "adsim/scenario/simulation.hpp"
#include "adsim/sim/rng.hpp"

namespace fixtures {

using namespace adsim;

/// Config with one static group "n" at the given positions. No hotspots, no
/// workload; tests add what they need before building a Simulation.
inline scenario::Config static_world(const std::vector<Position>& positions, double range, double loss = 0.0,
                                     double duration = 100.0, std::set<std::string> interests = {"none"}) {
  scenario::Config c;
  c.world.width = 2000;
  c.world.height = 2000;
  c.world.duration = duration;
  c.radio.range = range;
  c.radio.loss_prob = loss;
  scenario::Group g;
  g.name = "n";
  g.count = static_cast<std::uint32_t>(positions.size());
  g.interests = std::move(interests);
  g.mobility = scenario::MobilityModel::Static;
  g.positions = positions;
  c.groups.push_back(std::move(g));
  return c;
}

/// Owns the config so the simulation never outlives it.
struct World {
  scenario::Config cfg;
  std::ostringstream out;
  std::unique_ptr<scenario::Simulation> sim;

  explicit World(scenario::Config c, std::uint64_t seed = 1, bool keep_trace = false) : cfg(std::move(c)) {
    scenario::check(cfg);
    sim = std::make_unique<scenario::Simulation>(cfg, seed, keep_trace ? &out : nullptr);
  }
  scenario::Simulation* operator->() { return sim.get(); }
  std::string trace() {
    sim->trace().flush();
    return out.str();
  }
};

inline std::vector<Position> random_positions(sim::Rng& rng, std::size_t n, double side) {
  std::vector<Position> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({rng.uniform(0, side), rng.uniform(0, side)});
  return out;
}

/// Lines of `trace` whose kind column equals `kind`.
inline std::vector<std::string> lines_of(const std::string& trace, const std::string& kind) {
  std::vector<std::string> out;
  std::istringstream in(trace);
  std::string line;
  const std::string needle = "\t" + kind + "\t";
  while (std::getline(in, line)) {
    if (line.find(needle) != std::string::npos) out.push_back(line);
  }
  return out;
}

}  // namespace fixtures
