#include <doctest.h>

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "adsim/ads/item.hpp"
#include "adsim/ads/store.hpp"
#include "adsim/core/error.hpp"
#include "fixtures.hpp"

using namespace adsim;
using namespace adsim::ads;
using fixtures::World;

namespace {

InfoItem item(std::uint32_t origin, std::uint32_t counter, Category cat, double created = 0.0,
              std::uint32_t version = 0) {
  InfoItem i;
  i.id = ItemId{NodeId{origin}, counter};
  i.origin = NodeId{origin};
  i.category = std::move(cat);
  i.created_at = created;
  i.version = version;
  return i;
}

const std::vector<std::string> kCats{"slide", "article", "link", "question"};

InfoItem random_copy(sim::Rng& rng, std::uint32_t origins, std::uint32_t counters) {
  InfoItem i = item(static_cast<std::uint32_t>(rng.below(origins)), static_cast<std::uint32_t>(rng.below(counters)),
                    kCats[rng.below(2)]);
  // Same id, sometimes different content: version, payload and evaluations vary.
  i.version = static_cast<std::uint32_t>(rng.below(3));
  i.created_at = static_cast<double>(i.id.counter);
  i.payload["v"] = std::to_string(rng.below(2));
  const int evals = static_cast<int>(rng.below(4));
  for (int e = 0; e < evals; ++e) {
    i.evaluations[NodeId{static_cast<std::uint32_t>(10 + rng.below(5))}] =
        Evaluation{rng.bernoulli(0.5) ? 1 : -1, static_cast<double>(rng.below(3))};
  }
  return i;
}

std::map<ItemId, std::uint32_t> versions(const ItemStore& s) {
  std::map<ItemId, std::uint32_t> out;
  for (const auto& [id, e] : s.entries()) out[id] = e.item.version;
  return out;
}

market::MarketDescriptor descriptor(std::uint32_t id, Position c, std::map<Category, std::uint32_t> cats,
                                    double at = 0.0) {
  market::MarketDescriptor d;
  d.market_id = MarketId{id};
  d.region = Region{c, 20};
  d.categories = std::move(cats);
  d.advertised_at = at;
  return d;
}

MovementPlan stay(Position p, double until) {
  MovementPlan plan;
  plan.entries.push_back({0.0, until, Region{p, 20}});
  return plan;
}

}  // namespace

TEST_CASE("item ids print and parse") {
  CHECK(to_string(ItemId{NodeId{4}, 17}) == "4:17");
  CHECK(parse_item_id("4:17") == ItemId{NodeId{4}, 17});
  CHECK_FALSE(parse_item_id("4:").has_value());
  CHECK_FALSE(parse_item_id("x:1").has_value());
  CHECK_FALSE(parse_item_id("417").has_value());
}

TEST_CASE("store put keeps the highest version") {
  ItemStore s;
  CHECK(s.put(item(1, 0, "slide", 0, 1)).result == PutResult::Inserted);
  CHECK(s.size() == 1);
  CHECK(s.put(item(1, 0, "slide", 0, 2)).result == PutResult::Upgraded);
  CHECK(s.find(ItemId{NodeId{1}, 0})->version == 2);
  CHECK(s.put(item(1, 0, "slide", 0, 1)).result == PutResult::Unchanged);
  CHECK(s.find(ItemId{NodeId{1}, 0})->version == 2);
}

TEST_CASE("equal versions union their evaluations") {
  InfoItem a = item(1, 0, "slide");
  InfoItem b = a;
  a.evaluations[NodeId{5}] = {1, 1.0};
  b.evaluations[NodeId{6}] = {-1, 2.0};
  ItemStore s;
  s.put(a);
  CHECK(s.put(b).result == PutResult::Merged);
  const auto& ev = s.find(a.id)->evaluations;
  REQUIRE(ev.size() == 2);
  CHECK(ev.at(NodeId{5}).rating == 1);
  CHECK(ev.at(NodeId{6}).rating == -1);
}

TEST_CASE("equal versions with different content resolve deterministically") {
  InfoItem a = item(1, 0, "slide");
  InfoItem b = a;
  a.payload["course"] = "db101";
  b.payload["course"] = "os";
  bool anomaly = false;
  InfoItem ab = merge(a, b, &anomaly);
  CHECK(anomaly);
  CHECK(ab == merge(b, a));
  CHECK(ab.payload.at("course") == "os");
}

TEST_CASE("merge is commutative, associative and idempotent") {
  sim::Rng rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    InfoItem a = random_copy(rng, 1, 1);
    InfoItem b = random_copy(rng, 1, 1);
    InfoItem c = random_copy(rng, 1, 1);
    CHECK(merge(a, b) == merge(b, a));
    CHECK(merge(merge(a, b), c) == merge(a, merge(b, c)));
    CHECK(merge(a, a) == a);
    CHECK(merge(merge(a, b), b) == merge(a, b));
  }
}

TEST_CASE("evaluations keep the latest rating per evaluator") {
  ItemStore s;
  s.put(item(1, 0, "slide"));
  const ItemId id{NodeId{1}, 0};
  CHECK(s.evaluate(id, NodeId{2}, 1, 1.0));
  CHECK(s.evaluate(id, NodeId{2}, -1, 2.0));
  CHECK(s.find(id)->evaluations.size() == 1);
  CHECK(s.find(id)->evaluations.at(NodeId{2}).rating == -1);
  CHECK_FALSE(s.evaluate(ItemId{NodeId{9}, 9}, NodeId{2}, 1, 1.0));
}

TEST_CASE("hidden items stay out") {
  ItemStore s;
  s.put(item(1, 0, "slide"));
  const ItemId id{NodeId{1}, 0};
  CHECK(s.hide(id));
  CHECK(s.find_visible(id) == nullptr);
  CHECK(s.put(item(1, 0, "slide", 0, 5)).result == PutResult::Rejected);
  Selector sel;
  sel.categories = {"slide"};
  CHECK(s.query(sel).empty());
  auto d = s.digest({"slide"});
  REQUIRE(d.size() == 1);
  CHECK(d[0].tombstone);
}

TEST_CASE("local query filters by category and predicate") {
  ItemStore s;
  Selector sel;
  sel.categories = {"slide"};
  CHECK(s.query(sel).empty());
  s.put(item(1, 0, "slide", 3));
  s.put(item(1, 1, "article", 1));
  s.put(item(2, 0, "slide", 2));
  s.put(item(2, 1, "link", 0));
  s.put(item(3, 0, "question", 0));
  auto r = s.query(sel);
  REQUIRE(r.size() == 2);
  CHECK(r[0].id == ItemId{NodeId{2}, 0});  // older first
  CHECK(r[1].id == ItemId{NodeId{1}, 0});
}

TEST_CASE("local query equals a linear scan") {
  sim::Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    ItemStore s;
    std::vector<InfoItem> all;
    for (std::uint32_t i = 0; i < 200; ++i) {
      InfoItem it = item(static_cast<std::uint32_t>(rng.below(20)), i, kCats[rng.below(kCats.size())],
                         static_cast<double>(rng.below(50)));
      it.payload["course"] = rng.bernoulli(0.5) ? "db101" : "os";
      s.put(it);
      all.push_back(it);
    }
    Selector sel;
    for (const auto& c : kCats) {
      if (rng.bernoulli(0.5)) sel.categories.insert(c);
    }
    if (rng.bernoulli(0.5)) sel.predicate["course"] = "os";
    if (rng.bernoulli(0.3)) sel.max_results = static_cast<std::uint32_t>(rng.below(30));

    std::vector<InfoItem> want;
    for (const auto& it : all) {
      if (sel.categories.count(it.category) == 0) continue;
      if (!sel.predicate.empty() && it.payload.at("course") != sel.predicate.at("course")) continue;
      want.push_back(it);
    }
    std::sort(want.begin(), want.end(), [](const InfoItem& a, const InfoItem& b) {
      return a.created_at != b.created_at ? a.created_at < b.created_at : a.id < b.id;
    });
    if (sel.max_results && want.size() > *sel.max_results) want.resize(*sel.max_results);
    CHECK(s.query(sel) == want);
  }
}

TEST_CASE("neighborhood query") {
  Selector sel;
  sel.categories = {"slide"};

  SUBCASE("isolated node answers locally") {
    World w(fixtures::static_world({{0, 0}, {500, 0}}, 50));
    w->node(NodeId{0}).create_item("slide", {});
    w->run_until(1.0);
    std::optional<std::vector<InfoItem>> got;
    w->node(NodeId{0}).query_sync(sel, 2.0, 2, [&](std::vector<InfoItem> r) { got = std::move(r); });
    w->run_until(5.0);
    REQUIRE(got.has_value());
    CHECK(*got == w->node(NodeId{0}).query_local(sel));
  }

  SUBCASE("one hop neighbor contributes its item") {
    World w(fixtures::static_world({{0, 0}, {30, 0}}, 50));
    const InfoItem mine = w->node(NodeId{0}).create_item("slide", {});
    const InfoItem theirs = w->node(NodeId{1}).create_item("slide", {});
    w->run_until(1.0);
    std::optional<std::vector<InfoItem>> got;
    w->node(NodeId{0}).query_sync(sel, 2.0, 1, [&](std::vector<InfoItem> r) { got = std::move(r); });
    w->run_until(5.0);
    REQUIRE(got.has_value());
    std::vector<ItemId> ids;
    for (const auto& i : *got) ids.push_back(i.id);
    std::sort(ids.begin(), ids.end());
    CHECK(ids == std::vector<ItemId>{mine.id, theirs.id});
  }

  SUBCASE("a timeout shorter than one hop sees only local results") {
    World w(fixtures::static_world({{0, 0}, {30, 0}}, 50));
    w->node(NodeId{0}).create_item("slide", {});
    w->node(NodeId{1}).create_item("slide", {});
    w->run_until(1.0);
    std::optional<std::vector<InfoItem>> got;
    w->node(NodeId{0}).query_sync(sel, 0.005, 1, [&](std::vector<InfoItem> r) { got = std::move(r); });
    w->run_until(5.0);
    REQUIRE(got.has_value());
    CHECK(got->size() == 1);
  }
}

TEST_CASE("en-passant exchange") {
  SUBCASE("identical stores transfer nothing") {
    auto cfg = fixtures::static_world({{0, 0}, {30, 0}}, 50, 0.0, 10, {"slide"});
    World w(cfg, 1, true);
    InfoItem i = w->node(NodeId{0}).create_item("slide", {});
    w->node(NodeId{1}).put_local(i);
    w->run_until(5.0);
    CHECK(fixtures::lines_of(w.trace(), "ITEMS").empty());
    CHECK(fixtures::lines_of(w.trace(), "EXCHANGE").size() == 1);
  }

  SUBCASE("items in the peer's interests cross over") {
    auto cfg = fixtures::static_world({{0, 0}, {30, 0}}, 50, 0.0, 10, {"slide"});
    World w(cfg);
    auto x = w->node(NodeId{0}).create_item("slide", {});
    auto y = w->node(NodeId{0}).create_item("slide", {});
    auto z = w->node(NodeId{0}).create_item("link", {});
    w->run_until(5.0);
    CHECK(w->node(NodeId{1}).store().contains(x.id));
    CHECK(w->node(NodeId{1}).store().contains(y.id));
    CHECK_FALSE(w->node(NodeId{1}).store().contains(z.id));
  }

  SUBCASE("budget one, delta three, three encounters") {
    auto cfg = fixtures::static_world({{0, 0}, {30, 0}}, 50, 0.0, 200, {"slide"});
    cfg.groups[0].budget = 1;
    World w(cfg);
    for (int i = 0; i < 3; ++i) w->node(NodeId{0}).create_item("slide", {});
    const auto& b = w->node(NodeId{1}).store();
    w->run_until(1.0);
    CHECK(b.size() == 1);
    w->run_until(31.0);
    CHECK(b.size() == 2);
    w->run_until(61.0);
    CHECK(b.size() == 3);
    CHECK(b == w->node(NodeId{0}).store());
  }

  SUBCASE("newest items go first when the budget is short") {
    auto cfg = fixtures::static_world({{0, 0}, {30, 0}}, 50, 0.0, 10, {"slide"});
    cfg.groups[0].budget = 1;
    World w(cfg);
    w->run_until(0.5);
    w->node(NodeId{0}).create_item("slide", {});
    w->run_until(0.7);
    auto newer = w->node(NodeId{0}).create_item("slide", {});
    w->run_until(5.0);
    REQUIRE(w->node(NodeId{1}).store().size() == 0);  // next exchange is due at t=30
    w->run_until(31.0);
    CHECK(w->node(NodeId{1}).store().contains(newer.id));
    CHECK(w->node(NodeId{1}).store().size() == 1);
  }
}

TEST_CASE("remote query launch") {
  World w(fixtures::static_world({{0, 0}}, 50, 0.0, 100), 1, true);
  auto& n = w->node(NodeId{0});
  Selector sel;
  sel.categories = {"slide"};
  CHECK_THROWS_AS(n.launch_asrq(sel, 10, stay({0, 0}, 100)), NoKnownMarket);
  CHECK_THROWS_AS(n.publish(item(0, 9, "slide")), NoKnownMarket);

  SUBCASE("single market") {
    n.learn_descriptor(descriptor(3, {400, 0}, {{"link", 0}}), "config");
    auto q = n.launch_asrq(sel, 10, stay({0, 0}, 100));
    auto routes = fixtures::lines_of(w.trace(), "ROUTE");
    REQUIRE(routes.size() == 1);
    CHECK(routes[0].find("inner=ASRQ") != std::string::npos);
    CHECK(routes[0].find("cx=400.000;cy=0.000") != std::string::npos);
    auto status = n.collect_results(q);
    CHECK(status.items.empty());
    CHECK(status.state == QueryState::Pending);
    w->run_until(20.0);
    CHECK(n.collect_results(q).state == QueryState::Expired);
    CHECK(n.collect_results(q).items.empty());
  }

  SUBCASE("category fit beats distance") {
    n.learn_descriptor(descriptor(1, {50, 0}, {{"link", 4}}), "config");
    n.learn_descriptor(descriptor(2, {900, 0}, {{"slide", 1}}), "config");
    n.launch_asrq(sel, 10, stay({0, 0}, 100));
    CHECK(fixtures::lines_of(w.trace(), "ASRQ_LAUNCH")[0].find("market=2;") != std::string::npos);
  }

  SUBCASE("equal fit prefers the nearer market") {
    n.learn_descriptor(descriptor(1, {900, 0}, {{"slide", 1}}), "config");
    n.learn_descriptor(descriptor(2, {100, 0}, {{"slide", 1}}), "config");
    n.launch_asrq(sel, 10, stay({0, 0}, 100));
    CHECK(fixtures::lines_of(w.trace(), "ASRQ_LAUNCH")[0].find("market=2;") != std::string::npos);
  }

  CHECK_THROWS_AS(n.collect_results(QueryId{NodeId{9}, 0}), UnknownQuery);
}

TEST_CASE("accepting result chunks") {
  World w(fixtures::static_world({{0, 0}}, 50, 0.0, 100));
  auto& n = w->node(NodeId{0});
  n.learn_descriptor(descriptor(1, {400, 0}, {{"slide", 1}}), "config");
  Selector sel;
  sel.categories = {"slide"};
  const QueryId q = n.launch_asrq(sel, 50, stay({0, 0}, 100));

  ResultChunk c1{q, 0, {item(5, 0, "slide"), item(5, 1, "slide"), item(6, 0, "slide")}, MarketId{1}, {}};
  n.accept_chunk(c1);
  const ItemStore after_first = n.store();
  n.accept_chunk(c1);
  CHECK(n.store() == after_first);

  ResultChunk c2{q, 0, {item(7, 0, "slide"), item(5, 1, "slide"), item(8, 0, "slide")}, MarketId{2},
                 {descriptor(2, {800, 0}, {{"slide", 2}}), descriptor(4, {0, 800}, {{"link", 1}})}};
  n.accept_chunk(c2);
  CHECK(n.known_markets().size() == 3);

  auto status = n.collect_results(q);
  CHECK(status.chunks == 2);
  std::set<ItemId> got;
  for (const auto& i : status.items) got.insert(i.id);
  std::set<ItemId> want;
  for (const auto* c : {&c1, &c2}) {
    for (const auto& i : c->items) want.insert(i.id);
  }
  CHECK(got == want);
  CHECK(got.size() == 5);
}

TEST_CASE("descriptor knowledge keeps the newest advertisement") {
  World w(fixtures::static_world({{0, 0}}, 50));
  auto& n = w->node(NodeId{0});
  CHECK(n.learn_descriptor(descriptor(1, {0, 0}, {{"slide", 1}}, 10.0), "test"));
  CHECK_FALSE(n.learn_descriptor(descriptor(1, {0, 0}, {{"slide", 9}}, 5.0), "test"));
  CHECK(n.known_markets().at(MarketId{1}).categories.at("slide") == 1);
  CHECK(n.learn_descriptor(descriptor(1, {0, 0}, {{"slide", 2}}, 20.0), "test"));
  CHECK(n.known_markets().at(MarketId{1}).categories.at("slide") == 2);
}

TEST_CASE("item updates belong to the origin") {
  World w(fixtures::static_world({{0, 0}, {30, 0}}, 50));
  auto i = w->node(NodeId{0}).create_item("slide", {{"p", "1"}});
  auto up = w->node(NodeId{0}).update_item(i.id, {{"p", "2"}});
  CHECK(up.version == 1);
  w->node(NodeId{1}).put_local(i);
  CHECK_THROWS_AS(w->node(NodeId{1}).update_item(i.id, {}), InvalidArgument);
  CHECK_THROWS_AS(w->node(NodeId{0}).create_item("slide", {}, i.id.counter), InvalidArgument);
}

TEST_CASE("knowledge is monotone during a mixed run") {
  auto cfg = scenario::load(ADSIM_SCENARIO_DIR "/campus.scn");
  World w(cfg, 3);
  std::vector<std::map<ItemId, std::uint32_t>> last(w->layout().node_count);
  int violations = 0;
  w->on_tick([&] {
    for (NodeId n : w->ads_nodes()) {
      auto now = versions(w->node(n).store());
      for (const auto& [id, v] : last[n.value]) {
        auto it = now.find(id);
        if (it == now.end() || it->second < v) ++violations;
      }
      last[n.value] = std::move(now);
    }
  });
  w->run();
  CHECK(violations == 0);
}
