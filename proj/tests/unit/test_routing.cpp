#include <doctest.h>

#include <cmath>
#include <optional>
#include <vector>

#include "adsim/routing/geo.hpp"
#include "adsim/routing/lru.hpp"
#include "fixtures.hpp"

using namespace adsim;
using namespace adsim::routing;
using fixtures::World;

namespace {

Region disk(double x, double y, double r) { return Region{{x, y}, r}; }

// Brute-force greedy choice: strictly closer, minimal distance, then smallest id.
std::optional<std::size_t> greedy_oracle(const std::vector<Position>& pos, std::size_t self, Position target,
                                         double range) {
  std::optional<std::size_t> best;
  double best_d = distance(pos[self], target);
  for (std::size_t j = 0; j < pos.size(); ++j) {
    if (j == self || distance(pos[self], pos[j]) > range) continue;
    const double d = distance(pos[j], target);
    if (d < best_d) {
      best = j;
      best_d = d;
    }
  }
  return best;
}

int probe_hops(const std::string& trace) {
  auto lines = fixtures::lines_of(trace, "PROBE_RECV");
  if (lines.size() != 1) return -1;
  const auto at = lines[0].find("hops=");
  return std::stoi(lines[0].substr(at + 5));
}

}  // namespace

TEST_CASE("next hop picks maximal progress") {
  CHECK_FALSE(next_hop({0, 0}, disk(100, 0, 5), {}).has_value());
  std::vector<std::pair<NodeId, Position>> n{{NodeId{1}, {10, 0}}, {NodeId{2}, {20, 0}}};
  CHECK(next_hop({0, 0}, disk(100, 0, 5), n) == NodeId{2});
  std::vector<std::pair<NodeId, Position>> behind{{NodeId{1}, {-10, 0}}};
  CHECK_FALSE(next_hop({0, 0}, disk(100, 0, 5), behind).has_value());
  std::vector<std::pair<NodeId, Position>> tie{{NodeId{3}, {10, 5}}, {NodeId{4}, {10, -5}}};
  CHECK(next_hop({0, 0}, disk(100, 0, 5), tie) == NodeId{3});
}

TEST_CASE("next hop matches the argmin oracle on random graphs") {
  sim::Rng rng(404);
  for (int g = 0; g < 20; ++g) {
    auto pos = fixtures::random_positions(rng, 40, 400);
    const Region dest = disk(rng.uniform(0, 400), rng.uniform(0, 400), 20);
    for (std::size_t i = 0; i < pos.size(); ++i) {
      std::vector<std::pair<NodeId, Position>> nbrs;
      for (std::size_t j = 0; j < pos.size(); ++j) {
        if (j != i && distance(pos[i], pos[j]) <= 90) nbrs.emplace_back(NodeId{static_cast<std::uint32_t>(j)}, pos[j]);
      }
      auto got = next_hop(pos[i], dest, nbrs);
      auto want = greedy_oracle(pos, i, dest.center, 90);
      REQUIRE(got.has_value() == want.has_value());
      if (got) CHECK(got->value == *want);
    }
  }
}

TEST_CASE("forwarding decisions") {
  RoutedMessage m;
  m.dest_region = disk(0, 0, 10);
  m.carry_deadline = 100;
  CHECK(decide(m, NodeId{0}, {1, 1}, 0, {}).action == Action::Deliver);
  CHECK(decide(m, NodeId{0}, {50, 0}, 0, {}).action == Action::Carry);
  CHECK(decide(m, NodeId{0}, {50, 0}, 101, {}).action == Action::DropExpired);

  std::vector<std::pair<NodeId, Position>> n{{NodeId{1}, {30, 0}}};
  auto d = decide(m, NodeId{0}, {50, 0}, 0, n);
  CHECK(d.action == Action::Forward);
  CHECK(d.next == NodeId{1});
  m.hop_count = m.hop_limit;
  CHECK(decide(m, NodeId{0}, {50, 0}, 0, n).action == Action::DropHopLimit);

  // The named recipient is handed the message directly, wherever it is.
  RoutedMessage c;
  c.dest_region = disk(0, 0, 10);
  c.dest_node = NodeId{7};
  c.carry_deadline = 100;
  std::vector<std::pair<NodeId, Position>> far{{NodeId{7}, {90, 0}}};
  auto h = decide(c, NodeId{0}, {60, 0}, 0, far);
  CHECK(h.action == Action::Forward);
  CHECK(h.next == NodeId{7});
  CHECK(decide(c, NodeId{7}, {90, 0}, 0, {}).action == Action::Deliver);
}

TEST_CASE("a five node chain delivers after four hops") {
  World w(fixtures::static_world({{0, 0}, {40, 0}, {80, 0}, {120, 0}, {160, 0}}, 50), 1, true);
  w->run_until(1.0);
  w->send_probe(NodeId{0}, disk(160, 0, 5), 100);
  w->run_until(5.0);
  CHECK(probe_hops(w.trace()) == 4);
}

TEST_CASE("custody survives a lossy chain") {
  World w(fixtures::static_world({{0, 0}, {40, 0}, {80, 0}, {120, 0}, {160, 0}}, 50, 0.4), 9, true);
  w->run_until(1.0);
  w->send_probe(NodeId{0}, disk(160, 0, 5), 200);
  w->run_until(100.0);
  CHECK(probe_hops(w.trace()) == 4);
}

TEST_CASE("an isolated carrier delivers on arrival") {
  auto cfg = fixtures::static_world({{0, 0}}, 30, 0.0, 200);
  World w(cfg, 1, true);
  auto& m = w->kernel().mobility(NodeId{0});
  m.speed = 2.0;
  m.waypoints = {{{200, 0}, 0.0}};
  w->run_until(1.0);
  w->send_probe(NodeId{0}, disk(150, 0, 10), 150);
  w->run_until(120.0);
  const std::string t = w.trace();
  auto carry = fixtures::lines_of(t, "CARRY");
  auto recv = fixtures::lines_of(t, "PROBE_RECV");
  REQUIRE(carry.size() == 1);
  REQUIRE(recv.size() == 1);
  // Reaches x=140 at t=70; the tick at 70 sees it inside the region.
  CHECK(recv[0].rfind("70.000\t0\t", 0) == 0);
}

TEST_CASE("no path and no mobility ends in carry then expiry") {
  World w(fixtures::static_world({{0, 0}, {40, 0}, {300, 0}}, 50), 1, true);
  w->run_until(1.0);
  w->send_probe(NodeId{0}, disk(300, 0, 5), 20);
  w->run_until(10.0);
  CHECK(w->router(NodeId{1}).buffered() == 1);
  w->run_until(40.0);
  const std::string t = w.trace();
  CHECK(fixtures::lines_of(t, "PROBE_RECV").empty());
  auto drops = fixtures::lines_of(t, "DROP");
  REQUIRE(drops.size() == 1);
  CHECK(drops[0].find("reason=expired") != std::string::npos);
}

TEST_CASE("greedy forwarding never revisits a node on static graphs") {
  sim::Rng rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    auto pos = fixtures::random_positions(rng, 30, 300);
    World w(fixtures::static_world(pos, 80), 1, true);
    w->run_until(1.0);
    const Region dest = disk(rng.uniform(0, 300), rng.uniform(0, 300), 15);
    w->send_probe(NodeId{0}, dest, 50);
    w->run_until(60.0);
    // Every FWD line moves the message strictly closer to the centre.
    std::optional<double> last;
    for (const auto& line : fixtures::lines_of(w.trace(), "FWD")) {
      const auto to = std::stoul(line.substr(line.find("to=") + 3));
      const double d = distance(pos[to], dest.center);
      if (last) CHECK(d < *last);
      last = d;
    }
  }
}

TEST_CASE("lru set forgets the oldest key") {
  LruSet<int> s(3);
  CHECK_FALSE(s.touch(1));
  CHECK_FALSE(s.touch(2));
  CHECK_FALSE(s.touch(3));
  CHECK(s.touch(1));
  CHECK_FALSE(s.touch(4));  // evicts 2
  CHECK_FALSE(s.contains(2));
  CHECK(s.contains(1));
  CHECK(s.size() == 3);
}
