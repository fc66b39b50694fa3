#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "adsim/core/geometry.hpp"
#include "adsim/core/ids.hpp"
#include "adsim/sim/mobility.hpp"
#include "adsim/sim/rng.hpp"
#include "adsim/sim/trace.hpp"

namespace adsim::sim {

/// Unit-disk radio with independent Bernoulli loss per transmission.
struct RadioModel {
  double range = 50.0;
  double loss_prob = 0.0;
  double latency_per_hop = 0.01;
  friend bool operator==(const RadioModel&, const RadioModel&) = default;
};

struct KernelConfig {
  double width = 1000.0;
  double height = 1000.0;
  RadioModel radio;
  double tick = 1.0;
  std::uint64_t seed = 1;
};

enum class EventKind { Tick, Receive, Timer, Script };

struct EventHandle {
  std::uint64_t seq = 0;
};

struct RunStats {
  std::uint64_t events_processed = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_delivered = 0;
  std::uint64_t messages_dropped = 0;
  std::uint64_t messages_in_flight = 0;
};

using Link = std::pair<NodeId, NodeId>;  // first < second

/// Single-threaded discrete-event engine. Events fire in (time, seq) order;
/// mobility advances on a fixed tick that is itself an event.
class Kernel {
 public:
  using ReceiveFn = std::function<void(NodeId to, NodeId from, const std::string& payload)>;
  using TickFn = std::function<void()>;

  Kernel(KernelConfig config, Trace& trace);

  NodeId add_node(Position start, double speed = 0.0, std::deque<Waypoint> waypoints = {});
  std::size_t node_count() const { return nodes_.size(); }

  double now() const { return clock_; }
  const KernelConfig& config() const { return config_; }
  Trace& trace() { return trace_; }
  const RunStats& stats() const { return stats_; }

  /// Throws PastEvent when `time` precedes the clock.
  EventHandle schedule(double time, std::optional<NodeId> target, EventKind kind, std::function<void()> action);
  EventHandle schedule_in(double delay, std::optional<NodeId> target, EventKind kind, std::function<void()> action) {
    return schedule(clock_ + delay, target, kind, std::move(action));
  }
  void cancel(EventHandle handle) { cancelled_.insert(handle.seq); }

  /// Nodes other than `node` within radio range, ascending by id.
  const std::vector<NodeId>& neighbors(NodeId node) const;
  bool in_range(NodeId a, NodeId b) const;
  Position position(NodeId node) const { return mobility(node).current; }
  const MobilityState& mobility(NodeId node) const;
  MobilityState& mobility(NodeId node);
  void set_waypoints(NodeId node, std::deque<Waypoint> waypoints);

  /// Transmits one message. With probability 1-loss_prob a receive event is
  /// scheduled one hop latency later; either way the outcome is traced under
  /// `kind`. Returns whether the message will be delivered.
  bool send(NodeId from, NodeId to, std::string_view kind, std::string payload, std::string_view fields = {});

  void step_mobility(double dt);

  /// Processes every event with time <= t_end, then sets the clock to t_end.
  RunStats run_until(double t_end);

  void on_receive(ReceiveFn fn) { receive_ = std::move(fn); }
  void on_tick(TickFn fn) { tick_ = std::move(fn); }

  /// Links that appeared / disappeared at the most recent tick.
  const std::vector<Link>& gained_links() const { return gained_; }
  const std::vector<Link>& lost_links() const { return lost_; }

  Rng& rng(NodeId node, Stream purpose);

  /// Appends the `#STAT` block for the current counters.
  void write_stats();

 private:
  struct Event {
    double time;
    std::uint64_t seq;
    std::optional<NodeId> target;
    EventKind kind;
    std::function<void()> action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };
  struct NodeSlot {
    MobilityState mobility;
    std::vector<NodeId> neighbors;
    Rng radio;
    Rng motion;
    Rng workload;
  };

  void check(NodeId node) const;
  void run_tick();
  void refresh_neighbors();

  KernelConfig config_;
  Trace& trace_;
  double clock_ = 0.0;
  std::uint64_t next_seq_ = 0;
  std::vector<Event> heap_;  // min-heap on (time, seq) via Later
  std::unordered_set<std::uint64_t> cancelled_;
  std::vector<NodeSlot> nodes_;
  RunStats stats_;
  ReceiveFn receive_;
  TickFn tick_;
  bool started_ = false;
  std::uint64_t tick_index_ = 0;
  double last_tick_time_ = 0.0;
  bool neighbors_dirty_ = true;
  std::vector<Link> gained_;
  std::vector<Link> lost_;
};

}  // namespace adsim::sim
