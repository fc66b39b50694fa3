#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "adsim/core/error.hpp"
#include "adsim/sim/kernel.hpp"
#include "adsim/sim/mobility.hpp"
#include "adsim/sim/rng.hpp"
#include "adsim/sim/trace.hpp"

using namespace adsim;
using namespace adsim::sim;

namespace {

KernelConfig config(double range = 50.0, double loss = 0.0, std::uint64_t seed = 1) {
  KernelConfig c;
  c.radio.range = range;
  c.radio.loss_prob = loss;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("events fire in time then insertion order") {
  Trace trace;
  Kernel k(config(), trace);
  std::vector<int> order;
  k.schedule(7.0, std::nullopt, EventKind::Timer, [&] { order.push_back(3); });
  k.schedule(7.0, std::nullopt, EventKind::Timer, [&] { order.push_back(4); });
  k.schedule(5.0, std::nullopt, EventKind::Timer, [&] {
    order.push_back(1);
    k.schedule(5.0, std::nullopt, EventKind::Timer, [&] { order.push_back(2); });
  });
  k.run_until(10.0);
  CHECK(order == std::vector<int>{1, 2, 3, 4});
  CHECK(k.now() == 10.0);
}

TEST_CASE("scheduling in the past is rejected") {
  Trace trace;
  Kernel k(config(), trace);
  k.run_until(5.0);
  CHECK_THROWS_AS(k.schedule(4.0, std::nullopt, EventKind::Timer, [] {}), PastEvent);
  bool fired = false;
  k.schedule(5.0, std::nullopt, EventKind::Timer, [&] { fired = true; });
  k.run_until(5.0);
  CHECK(fired);
}

TEST_CASE("empty run advances the clock") {
  Trace trace;
  Kernel k(config(), trace);
  auto stats = k.run_until(100.0);
  CHECK(k.now() == 100.0);
  CHECK(stats.events_processed == 0);
  CHECK(trace.lines() == 0);
}

TEST_CASE("unit disk neighbors") {
  Trace trace;
  Kernel k(config(50.0), trace);
  auto a = k.add_node({0, 0});
  auto b = k.add_node({10, 0});
  auto c = k.add_node({200, 0});
  auto d = k.add_node({260, 0});
  CHECK(k.neighbors(a) == std::vector<NodeId>{b});
  CHECK(k.neighbors(b) == std::vector<NodeId>{a});
  CHECK(k.neighbors(c).empty());
  CHECK(k.neighbors(d).empty());
  CHECK_THROWS_AS(k.neighbors(NodeId{9}), UnknownNode);
}

TEST_CASE("neighbor sets match an all-pairs distance filter") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Trace trace;
    Kernel k(config(120.0, 0.0, seed), trace);
    Rng rng(seed * 77);
    std::vector<Position> pos;
    for (int i = 0; i < 30; ++i) {
      pos.push_back({rng.uniform(0, 500), rng.uniform(0, 500)});
      k.add_node(pos.back());
    }
    for (std::uint32_t i = 0; i < pos.size(); ++i) {
      std::vector<NodeId> expect;
      for (std::uint32_t j = 0; j < pos.size(); ++j) {
        if (i != j && std::hypot(pos[i].x - pos[j].x, pos[i].y - pos[j].y) <= 120.0) expect.push_back(NodeId{j});
      }
      CHECK(k.neighbors(NodeId{i}) == expect);
    }
  }
}

TEST_CASE("lossless and total-loss radios") {
  for (double loss : {0.0, 1.0}) {
    Trace trace;
    Kernel k(config(50.0, loss), trace);
    auto a = k.add_node({0, 0});
    auto b = k.add_node({10, 0});
    int received = 0;
    k.on_receive([&](NodeId to, NodeId from, const std::string& p) {
      CHECK(to == b);
      CHECK(from == a);
      CHECK(p == "x");
      ++received;
    });
    for (int i = 0; i < 200; ++i) k.send(a, b, "T", "x");
    k.run_until(1.0);
    CHECK(received == (loss == 0.0 ? 200 : 0));
  }
}

TEST_CASE("sending out of range throws") {
  Trace trace;
  Kernel k(config(50.0), trace);
  auto a = k.add_node({0, 0});
  auto b = k.add_node({60, 0});
  CHECK_THROWS_AS(k.send(a, b, "T", "x"), NotInRange);
}

TEST_CASE("empirical loss rate") {
  Trace trace;
  Kernel k(config(50.0, 0.2, 99), trace);
  auto a = k.add_node({0, 0});
  auto b = k.add_node({10, 0});
  int received = 0;
  k.on_receive([&](NodeId, NodeId, const std::string&) { ++received; });
  for (int i = 0; i < 10000; ++i) k.send(a, b, "T", "");
  k.run_until(1.0);
  const double drop = 1.0 - received / 10000.0;
  CHECK(std::abs(drop - 0.2) <= 0.02);
}

TEST_CASE("mobility steps") {
  MobilityState still{{3, 4}, {}, 0.0};
  advance(still, 5.0);
  CHECK(still.current == Position{3, 4});

  MobilityState m{{0, 0}, {{{100, 0}, 0.0}}, 10.0};
  advance(m, 1.0);
  CHECK(m.current.x == doctest::Approx(10.0));
  CHECK(m.current.y == doctest::Approx(0.0));
}

TEST_CASE("a full tour covers the sum of its segment lengths") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    MobilityState m;
    m.current = {rng.uniform(0, 100), rng.uniform(0, 100)};
    m.speed = rng.uniform(0.5, 3.0);
    double expect = 0.0;
    Position at = m.current;
    const int legs = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < legs; ++i) {
      Position p{rng.uniform(0, 100), rng.uniform(0, 100)};
      expect += distance(at, p);
      at = p;
      m.waypoints.push_back({p, rng.uniform(0, 5)});
    }
    const double dt = rng.uniform(0.1, 2.0);
    for (int s = 0; s < 100000 && !m.waypoints.empty(); ++s) advance(m, dt);
    CHECK(m.waypoints.empty());
    CHECK(m.odometer == doctest::Approx(expect).epsilon(1e-9));
    CHECK(distance(m.current, at) < 1e-6);
  }
}

TEST_CASE("substreams are independent of node count") {
  Trace t1, t2;
  Kernel small(config(50.0, 0.0, 42), t1);
  Kernel big(config(50.0, 0.0, 42), t2);
  small.add_node({0, 0});
  for (int i = 0; i < 5; ++i) big.add_node({0, 0});
  for (int i = 0; i < 10; ++i) {
    CHECK(small.rng(NodeId{0}, Stream::Mobility).next() == big.rng(NodeId{0}, Stream::Mobility).next());
  }
  CHECK(Rng(substream_seed(42, NodeId{0}, Stream::Radio)).next() !=
        Rng(substream_seed(42, NodeId{0}, Stream::Mobility)).next());
}

namespace {

std::string moving_run(const std::vector<double>& stops) {
  std::ostringstream out;
  Trace trace(&out);
  KernelConfig c = config(40.0, 0.3, 8);
  Kernel k(c, trace);
  Rng rng(3);
  for (int i = 0; i < 12; ++i) {
    std::deque<Waypoint> w;
    for (int j = 0; j < 5; ++j) w.push_back({{rng.uniform(0, 200), rng.uniform(0, 200)}, rng.uniform(0, 20)});
    k.add_node({rng.uniform(0, 200), rng.uniform(0, 200)}, rng.uniform(1, 3), w);
  }
  k.on_tick([&] {
    for (std::uint32_t i = 0; i < k.node_count(); ++i) {
      for (NodeId n : k.neighbors(NodeId{i})) k.send(NodeId{i}, n, "HELLO", "");
    }
  });
  for (double s : stops) k.run_until(s);
  k.write_stats();
  trace.flush();
  return out.str();
}

}  // namespace

TEST_CASE("split runs equal a single run") {
  const std::string whole = moving_run({300.0});
  CHECK(!whole.empty());
  CHECK(moving_run({300.0}) == whole);
  CHECK(moving_run({17.5, 120.0, 300.0}) == whole);
}

TEST_CASE("trace lines and digest") {
  std::ostringstream out;
  Trace t(&out);
  t.record(1.5, NodeId{3}, "X", Fields().add("a", 1).add("b", 2.0).add("c", true));
  t.record(2.0, std::nullopt, "Y", "");
  t.comment("#STAT\tk=1");
  t.flush();
  CHECK(out.str() == "1.500\t3\tX\ta=1;b=2.000;c=1\n2.000\t-\tY\t\n#STAT\tk=1\n");
  CHECK(t.lines() == 3);
  CHECK(t.digest() == fnv1a(out.str()));
}
