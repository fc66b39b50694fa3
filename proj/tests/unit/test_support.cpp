#include <doctest.h>

#include <set>

#include "adsim/core/error.hpp"
#include "fixtures.hpp"

using namespace adsim;
using fixtures::World;

namespace {

std::set<ads::ItemId> pool_ids(const market::Market& m) {
  std::set<ads::ItemId> out;
  for (const auto& [id, cat] : m.pool()) out.insert(id);
  return out;
}

std::set<ads::ItemId> store_ids(const ads::ItemStore& s) {
  std::set<ads::ItemId> out;
  for (const auto& [id, e] : s.entries()) out.insert(id);
  return out;
}

market::MarketDescriptor desc(std::uint32_t id, double at, std::uint32_t count) {
  market::MarketDescriptor d;
  d.market_id = MarketId{id};
  d.region = Region{{0, 0}, 10};
  d.categories = {{"slide", count}};
  d.advertised_at = at;
  return d;
}

}  // namespace

TEST_CASE("support node directory keeps the newest descriptor") {
  sim::Trace t(nullptr);
  sim::Kernel k({}, t);
  support::SupportNode s(k.add_node({0, 0}), k);
  CHECK(s.lookup_markets().empty());
  CHECK(s.learn(desc(1, 10, 1), NodeId{5}));
  CHECK_FALSE(s.learn(desc(1, 5, 9), NodeId{5}));
  CHECK(s.learn(desc(2, 1, 1), NodeId{5}));
  auto all = s.lookup_markets();
  REQUIRE(all.size() == 2);
  CHECK(all[0].market_id == MarketId{1});
  CHECK(all[0].categories.at("slide") == 1);
  CHECK(s.learn(desc(1, 20, 4), NodeId{5}));
  CHECK(s.lookup_markets()[0].categories.at("slide") == 4);
}

TEST_CASE("passers-by learn markets from a support node") {
  auto cfg = fixtures::static_world({{560, 500}}, 80, 0.0, 20);
  scenario::Hotspot h;
  h.name = "m";
  h.region = Region{{500, 500}, 20};
  h.market = true;
  h.support = true;
  h.categories = {"slide"};
  cfg.hotspots.push_back(h);
  World w(cfg, 1, true);
  CHECK_THROWS_AS(w->node(NodeId{0}).publish(w->node(NodeId{0}).create_item("slide", {})), NoKnownMarket);
  w->run_until(5);
  CHECK(w->node(NodeId{0}).known_markets().count(MarketId{0}) == 1);
  CHECK_FALSE(fixtures::lines_of(w.trace(), "DIR_REQ").empty());
}

TEST_CASE("support node stays out while density holds") {
  auto cfg = fixtures::static_world({{500, 500}, {520, 500}, {480, 500}, {500, 520}}, 80, 0.0, 100);
  cfg.groups[0].know_markets = true;
  scenario::Hotspot h;
  h.name = "m";
  h.region = Region{{500, 500}, 60};
  h.market = true;
  h.support = true;
  cfg.hotspots.push_back(h);
  World w(cfg, 1, true);
  w->run_until(1);
  for (int i = 0; i < 5; ++i) w->node(NodeId{0}).publish(w->node(NodeId{0}).create_item("slide", {}));
  w->run();
  const NodeId sup = w->support_nodes().at(0);
  CHECK(w->markets()[0]->pool().size() == 5);
  CHECK(w->support(sup).store().size() == 0);
  CHECK(fixtures::lines_of(w.trace(), "SUP_ABSORB").empty());
}

TEST_CASE("density collapse and recovery") {
  auto cfg = scenario::load(ADSIM_SCENARIO_DIR "/density_collapse.scn");
  for (std::uint64_t seed : {1, 2, 3}) {
    CAPTURE(seed);
    World w(cfg, seed, true);
    const market::Market& m = *w->markets()[0];
    const NodeId sup = w->support_nodes().at(0);

    w->run_until(899);
    REQUIRE(m.members().size() == 5);
    const auto before = pool_ids(m);
    CHECK(before.size() == 8);

    w->run_until(1200);
    CHECK(m.members().empty());
    // Everyone left: the pool survives on the support node alone.
    const auto held = store_ids(w->support(sup).store());
    for (const auto& id : before) CHECK(held.count(id) == 1);
    CHECK(pool_ids(m) == before);

    w->run();
    CHECK(m.members().size() == 5);
    CHECK(pool_ids(m) == before);
    for (const auto& [id, hs] : m.holders()) {
      CHECK(hs.size() == 3);
      for (NodeId h : hs) CHECK(w->node(h).store().contains(id));
    }
    CHECK(fixtures::lines_of(w.trace(), "SUP_RESEED").size() == 1);
    CHECK(fixtures::lines_of(w.trace(), "MKT_LOST").empty());
  }
}
