#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "adsim/core/error.hpp"
#include "adsim/market/rendezvous.hpp"
#include "adsim/market/selection.hpp"
#include "fixtures.hpp"

using namespace adsim;
using fixtures::World;

namespace {

const Position kCentre{500, 500};

/// Static members around a market hotspot "m" (radius 100), plus `outside`
/// nodes beyond it. Everyone knows the market; radio range 400.
scenario::Config market_world(std::size_t members, std::vector<Position> outside = {}, std::uint32_t k = 3,
                              double duration = 200) {
  std::vector<Position> pos;
  for (std::size_t i = 0; i < members; ++i) {
    const double a = 2 * M_PI * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(members, 1));
    pos.push_back({kCentre.x + 50 * std::cos(a), kCentre.y + 50 * std::sin(a)});
  }
  pos.insert(pos.end(), outside.begin(), outside.end());
  auto cfg = fixtures::static_world(pos, 400, 0.0, duration);
  cfg.groups[0].know_markets = true;
  cfg.ads.k = k;
  scenario::Hotspot h;
  h.name = "m";
  h.region = Region{kCentre, 100};
  h.market = true;
  h.categories = {"slide"};
  cfg.hotspots.push_back(h);
  return cfg;
}

market::MarketDescriptor desc(std::uint32_t id, Position c, std::map<ads::Category, std::uint32_t> cats) {
  market::MarketDescriptor d;
  d.market_id = MarketId{id};
  d.region = Region{c, 50};
  d.categories = std::move(cats);
  return d;
}

ads::MovementPlan stay(Position p, double until) {
  ads::MovementPlan plan;
  plan.entries.push_back({0.0, until, Region{p, 30}});
  return plan;
}

ads::Selector slides() {
  ads::Selector s;
  s.categories = {"slide"};
  return s;
}

std::vector<std::string> field_values(const std::vector<std::string>& lines, const std::string& key) {
  std::vector<std::string> out;
  for (const auto& l : lines) {
    auto p = l.find(key + "=");
    if (p == std::string::npos) continue;
    p += key.size() + 1;
    out.push_back(l.substr(p, l.find(';', p) - p));
  }
  return out;
}

}  // namespace

TEST_CASE("selection scores") {
  const std::set<ads::Category> want{"slide"};
  auto far = desc(1, {1000, 0}, {{"slide", 3}});
  auto near = desc(2, {100, 0}, {{"link", 3}});
  CHECK(market::selection_score(want, far, {0, 0}, 1000, {}) == doctest::Approx(0.5));
  CHECK(market::selection_score(want, near, {0, 0}, 1000, {}) == doctest::Approx(-0.05));
  std::vector<market::MarketDescriptor> both{near, far};
  CHECK(market::select_market(want, {0, 0}, both).market_id == MarketId{1});

  std::vector<market::MarketDescriptor> one{near};
  CHECK(market::select_market(want, {0, 0}, one).market_id == MarketId{2});

  std::vector<market::MarketDescriptor> same{desc(1, {400, 0}, {{"slide", 1}}), desc(2, {100, 0}, {{"slide", 1}})};
  CHECK(market::select_market(want, {0, 0}, same).market_id == MarketId{2});

  std::vector<market::MarketDescriptor> none;
  CHECK_THROWS_AS(market::select_market(want, {0, 0}, none), NoKnownMarket);
}

TEST_CASE("selection ties go to the smallest market id") {
  std::vector<market::MarketDescriptor> twins{desc(7, {100, 0}, {{"slide", 1}}), desc(3, {0, 100}, {{"slide", 1}})};
  CHECK(market::select_market({"slide"}, {0, 0}, twins).market_id == MarketId{3});
}

TEST_CASE("selection matches a score argmax") {
  sim::Rng rng(5);
  const std::vector<std::string> cats{"slide", "article", "link", "question"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<market::MarketDescriptor> ms;
    const int n = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < n; ++i) {
      std::map<ads::Category, std::uint32_t> c;
      for (const auto& k : cats) {
        if (rng.bernoulli(0.4)) c[k] = 1;
      }
      ms.push_back(desc(static_cast<std::uint32_t>(i), {rng.uniform(0, 1000), rng.uniform(0, 1000)}, c));
    }
    std::set<ads::Category> want;
    for (const auto& k : cats) {
      if (rng.bernoulli(0.5)) want.insert(k);
    }
    if (want.empty()) want.insert("slide");
    const Position from{rng.uniform(0, 1000), rng.uniform(0, 1000)};
    double dmax = 0;
    for (const auto& m : ms) dmax = std::max(dmax, std::hypot(m.region.center.x - from.x, m.region.center.y - from.y));
    double best = -1e9;
    std::uint32_t best_id = 0;
    for (const auto& m : ms) {
      int overlap = 0;
      for (const auto& k : want) overlap += m.categories.count(k) != 0 ? 1 : 0;
      const double d = std::hypot(m.region.center.x - from.x, m.region.center.y - from.y);
      const double s = static_cast<double>(overlap) / static_cast<double>(want.size()) - 0.5 * (dmax > 0 ? d / dmax : 0);
      if (s > best + 1e-12) {
        best = s;
        best_id = m.market_id.value;
      }
    }
    CHECK(market::select_market(want, from, ms).market_id.value == best_id);
  }
}

TEST_CASE("membership follows positions") {
  auto cfg = fixtures::static_world({}, 80, 0.0, 600);
  cfg.groups.clear();
  cfg.world.width = 1000;
  cfg.world.height = 1000;
  scenario::Group g;
  g.name = "walkers";
  g.count = 25;
  g.interests = {"none"};
  g.mobility = scenario::MobilityModel::RandomWaypoint;
  cfg.groups.push_back(g);
  scenario::Hotspot h;
  h.name = "m";
  h.region = Region{kCentre, 150};
  h.market = true;
  cfg.hotspots.push_back(h);
  World w(cfg, 9);
  int ticks = 0, mismatches = 0;
  std::size_t max_members = 0;
  w->on_tick([&] {
    std::vector<NodeId> want;
    for (NodeId n : w->ads_nodes()) {
      const Position p = w->kernel().position(n);
      if (std::hypot(p.x - kCentre.x, p.y - kCentre.y) <= 150) want.push_back(n);
    }
    const auto& got = w->markets()[0]->members();
    if (got != want) ++mismatches;
    max_members = std::max(max_members, got.size());
    ++ticks;
  });
  w->run();
  CHECK(ticks == 601);
  CHECK(mismatches == 0);
  CHECK(max_members > 0);
}

TEST_CASE("publication into a market") {
  SUBCASE("publisher inside the region ingests at once") {
    World w(market_world(4), 1, true);
    w->run_until(1);
    auto item = w->node(NodeId{0}).create_item("slide", {});
    w->node(NodeId{0}).publish(item);
    CHECK(fixtures::lines_of(w.trace(), "MKT_PUB").size() == 1);
    CHECK(fixtures::lines_of(w.trace(), "FWD").empty());
    w->run_until(3);
    CHECK(w->markets()[0]->pool().count(item.id) == 1);
  }

  SUBCASE("publisher outside reaches the market over the radio") {
    World w(market_world(4, {{800, 500}}));
    w->run_until(1);
    auto item = w->node(NodeId{4}).create_item("slide", {});
    w->node(NodeId{4}).publish(item);
    w->run_until(5);
    int holding = 0;
    for (NodeId m : w->markets()[0]->members()) holding += w->node(m).store().contains(item.id) ? 1 : 0;
    CHECK(holding >= 1);
  }
}

TEST_CASE("replica placement") {
  SUBCASE("ten members keep exactly k replicas") {
    World w(market_world(10));
    w->run_until(1);
    auto item = w->node(NodeId{0}).create_item("slide", {});
    w->node(NodeId{0}).publish(item);
    w->run_until(3);
    const auto& m = *w->markets()[0];
    const auto& hs = m.holders().at(item.id);
    CHECK(hs.size() == 3);
    CHECK(hs == market::rendezvous_top(item.id, m.members(), 3));
    for (NodeId h : hs) CHECK(w->node(h).store().contains(item.id));
    CHECK(m.healthy());
  }

  SUBCASE("two members give two replicas and a degraded market") {
    World w(market_world(2), 1, true);
    w->run_until(1);
    auto item = w->node(NodeId{0}).create_item("slide", {});
    w->node(NodeId{0}).publish(item);
    w->run_until(3);
    CHECK(w->markets()[0]->holders().at(item.id).size() == 2);
    auto degraded = fixtures::lines_of(w.trace(), "MKT_DEGRADED");
    REQUIRE(degraded.size() == 1);
    CHECK(degraded[0].find("on=1") != std::string::npos);
  }

  SUBCASE("a leaving holder is replaced by the rendezvous choice") {
    World w(market_world(6));
    w->run_until(1);
    auto item = w->node(NodeId{0}).create_item("slide", {});
    w->node(NodeId{0}).publish(item);
    w->run_until(3);
    const auto& m = *w->markets()[0];
    const NodeId leaver = m.holders().at(item.id).front();
    w->kernel().mobility(leaver).speed = 500;
    w->kernel().set_waypoints(leaver, {{Position{1800, 1800}, 1e6}});
    w->run_until(10);
    REQUIRE(m.members().size() == 5);
    CHECK(std::find(m.members().begin(), m.members().end(), leaver) == m.members().end());
    const auto& hs = m.holders().at(item.id);
    CHECK(hs.size() == 3);
    CHECK(hs == market::rendezvous_top(item.id, m.members(), 3));
    for (NodeId h : hs) CHECK(w->node(h).store().contains(item.id));
  }
}

TEST_CASE("rendezvous choice is stable and clamped") {
  sim::Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<NodeId> members;
    for (std::uint32_t i = 0; i < 20; ++i) {
      if (rng.bernoulli(0.5)) members.push_back(NodeId{i});
    }
    const ads::ItemId id{NodeId{static_cast<std::uint32_t>(rng.below(50))}, static_cast<std::uint32_t>(rng.below(50))};
    auto top = market::rendezvous_top(id, members, 3);
    CHECK(top.size() == std::min<std::size_t>(3, members.size()));
    CHECK(std::is_sorted(top.begin(), top.end()));
    // Removing a non-holder never changes the choice.
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (std::find(top.begin(), top.end(), members[i]) != top.end()) continue;
      auto fewer = members;
      fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(i));
      CHECK(market::rendezvous_top(id, fewer, 3) == top);
      break;
    }
  }
}

TEST_CASE("query results come back in chunks") {
  const Position asker{800, 500};

  SUBCASE("seven matches make chunks of five and two") {
    World w(market_world(4, {asker}), 1, true);
    w->run_until(1);
    for (int i = 0; i < 7; ++i) w->node(NodeId{static_cast<std::uint32_t>(i % 4)}).publish(
        w->node(NodeId{static_cast<std::uint32_t>(i % 4)}).create_item("slide", {}));
    w->node(NodeId{0}).publish(w->node(NodeId{0}).create_item("link", {}));
    w->run_until(3);
    auto q = w->node(NodeId{4}).launch_asrq(slides(), 100, stay(asker, 200));
    w->run_until(10);
    auto chunks = fixtures::lines_of(w.trace(), "MKT_CHUNK");
    CHECK(field_values(chunks, "items") == std::vector<std::string>{"5", "2"});
    auto status = w->node(NodeId{4}).collect_results(q);
    CHECK(status.items.size() == 7);
    CHECK(status.chunks == 2);
  }

  SUBCASE("expected_results caps the answer") {
    World w(market_world(4, {asker}), 1, true);
    w->run_until(1);
    for (int i = 0; i < 7; ++i) w->node(NodeId{0}).publish(w->node(NodeId{0}).create_item("slide", {}));
    w->run_until(3);
    auto q = w->node(NodeId{4}).launch_asrq(slides(), 100, stay(asker, 200), 3);
    w->run_until(10);
    CHECK(field_values(fixtures::lines_of(w.trace(), "MKT_CHUNK"), "items") == std::vector<std::string>{"3"});
    CHECK(fixtures::lines_of(w.trace(), "MKT_QDONE").size() == 1);
    CHECK(w->node(NodeId{4}).collect_results(q).items.size() == 3);
  }

  SUBCASE("a later publication arrives in a later chunk") {
    World w(market_world(4, {asker}), 1, true);
    w->run_until(1);
    w->node(NodeId{0}).publish(w->node(NodeId{0}).create_item("slide", {}));
    w->run_until(3);
    auto q = w->node(NodeId{4}).launch_asrq(slides(), 100, stay(asker, 200));
    w->run_until(13);
    auto late = w->node(NodeId{1}).create_item("slide", {});
    w->node(NodeId{1}).publish(late);
    w->run_until(20);
    auto chunks = fixtures::lines_of(w.trace(), "MKT_CHUNK");
    CHECK(field_values(chunks, "seq") == std::vector<std::string>{"0", "1"});
    auto status = w->node(NodeId{4}).collect_results(q);
    CHECK(status.chunks == 2);
    CHECK(status.items.size() == 2);
    CHECK(status.items.back().id == late.id);
  }

  SUBCASE("nothing matching leaves the query to expire empty") {
    World w(market_world(4, {asker}));
    w->run_until(1);
    w->node(NodeId{0}).publish(w->node(NodeId{0}).create_item("link", {}));
    auto q = w->node(NodeId{4}).launch_asrq(slides(), 20, stay(asker, 200));
    w->run_until(30);
    auto status = w->node(NodeId{4}).collect_results(q);
    CHECK(status.items.empty());
    CHECK(status.state == ads::QueryState::Expired);
  }
}

TEST_CASE("chunks follow the movement plan") {
  ads::MovementPlan plan;
  const Region a{{800, 500}, 30}, b{{500, 900}, 30};
  plan.entries.push_back({0, 500, a});
  plan.entries.push_back({500, 1000, b});
  CHECK(plan.region_at(490) == a);
  CHECK(plan.region_at(490 + 30) == b);
  CHECK(plan.region_at(5000) == b);

  SUBCASE("stationary initiator") {
    World w(market_world(4, {{800, 500}}), 1, true);
    w->run_until(1);
    for (int i = 0; i < 7; ++i) w->node(NodeId{0}).publish(w->node(NodeId{0}).create_item("slide", {}));
    w->node(NodeId{4}).launch_asrq(slides(), 100, stay({800, 500}, 200));
    w->run_until(20);
    auto chunks = fixtures::lines_of(w.trace(), "MKT_CHUNK");
    CHECK(chunks.size() == 2);
    for (const auto& c : chunks) CHECK(c.find("cx=800.000;cy=500.000") != std::string::npos);
  }

  SUBCASE("after the switch chunks target the next region") {
    World w(market_world(4, {{800, 500}}, 3, 700), 1, true);
    w->run_until(1);
    w->node(NodeId{4}).launch_asrq(slides(), 600, plan);
    w->run_until(520);
    w->node(NodeId{0}).publish(w->node(NodeId{0}).create_item("slide", {}));
    w->run_until(525);
    auto chunks = fixtures::lines_of(w.trace(), "MKT_CHUNK");
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].find("cx=500.000;cy=900.000") != std::string::npos);
  }
}

TEST_CASE("plan well-formedness") {
  ads::MovementPlan p;
  CHECK(p.problems().empty());
  p.entries.push_back({0, 10, Region{{0, 0}, 1}});
  p.entries.push_back({20, 30, Region{{0, 0}, 1}});
  CHECK_FALSE(p.problems().empty());
  p.entries[1].from = 10;
  CHECK(p.problems().empty());
  p.entries[1].to = 5;
  CHECK_FALSE(p.problems().empty());
}

TEST_CASE("descriptors spread to members and leavers") {
  auto cfg = market_world(3);
  cfg.groups[0].know_markets = false;
  World w(cfg);
  w->run_until(2);
  for (NodeId n : w->ads_nodes()) {
    REQUIRE(w->node(n).known_markets().count(MarketId{0}) == 1);
  }
  const auto before = w->node(NodeId{0}).known_markets().at(MarketId{0});
  w->node(NodeId{1}).publish(w->node(NodeId{1}).create_item("slide", {}));
  w->run_until(4);
  w->kernel().mobility(NodeId{0}).speed = 500;
  w->kernel().set_waypoints(NodeId{0}, {{Position{1800, 1800}, 1e6}});
  w->run_until(10);
  const auto& after = w->node(NodeId{0}).known_markets().at(MarketId{0});
  CHECK(after.advertised_at > before.advertised_at);
  CHECK(after.categories.at("slide") == 1);
}
