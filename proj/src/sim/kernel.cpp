#include "adsim/sim/kernel.hpp"

#include <algorithm>

#include "adsim/core/error.hpp"

namespace adsim::sim {

Kernel::Kernel(KernelConfig config, Trace& trace) : config_(config), trace_(trace) {
  if (!(config_.radio.range > 0.0)) throw InvalidArgument("radio range must be positive");
  if (!(config_.radio.latency_per_hop > 0.0)) throw InvalidArgument("hop latency must be positive");
  if (config_.radio.loss_prob < 0.0 || config_.radio.loss_prob > 1.0) throw InvalidArgument("loss_prob outside [0,1]");
  if (!(config_.tick > 0.0)) throw InvalidArgument("tick must be positive");
}

NodeId Kernel::add_node(Position start, double speed, std::deque<Waypoint> waypoints) {
  const NodeId id{static_cast<std::uint32_t>(nodes_.size())};
  NodeSlot slot{MobilityState{start, std::move(waypoints), speed},
                {},
                Rng(substream_seed(config_.seed, id, Stream::Radio)),
                Rng(substream_seed(config_.seed, id, Stream::Mobility)),
                Rng(substream_seed(config_.seed, id, Stream::Workload))};
  nodes_.push_back(std::move(slot));
  neighbors_dirty_ = true;
  return id;
}

void Kernel::check(NodeId node) const {
  if (node.value >= nodes_.size()) throw UnknownNode("unknown node " + to_string(node));
}

EventHandle Kernel::schedule(double time, std::optional<NodeId> target, EventKind kind, std::function<void()> action) {
  if (time < clock_) throw PastEvent("event at " + std::to_string(time) + " precedes clock " + std::to_string(clock_));
  const std::uint64_t seq = next_seq_++;
  heap_.push_back(Event{time, seq, target, kind, std::move(action)});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
  return EventHandle{seq};
}

const std::vector<NodeId>& Kernel::neighbors(NodeId node) const {
  check(node);
  if (neighbors_dirty_) const_cast<Kernel*>(this)->refresh_neighbors();
  return nodes_[node.value].neighbors;
}

bool Kernel::in_range(NodeId a, NodeId b) const {
  check(a);
  check(b);
  return a != b && distance(position(a), position(b)) <= config_.radio.range;
}

const MobilityState& Kernel::mobility(NodeId node) const {
  check(node);
  return nodes_[node.value].mobility;
}

MobilityState& Kernel::mobility(NodeId node) {
  check(node);
  neighbors_dirty_ = true;
  return nodes_[node.value].mobility;
}

void Kernel::set_waypoints(NodeId node, std::deque<Waypoint> waypoints) {
  auto& m = mobility(node);
  m.waypoints = std::move(waypoints);
  m.dwelling = false;
  m.dwell_left = 0.0;
}

Rng& Kernel::rng(NodeId node, Stream purpose) {
  check(node);
  auto& slot = nodes_[node.value];
  switch (purpose) {
    case Stream::Radio: return slot.radio;
    case Stream::Mobility: return slot.motion;
    case Stream::Workload: return slot.workload;
  }
  return slot.radio;
}

bool Kernel::send(NodeId from, NodeId to, std::string_view kind, std::string payload, std::string_view fields) {
  if (!in_range(from, to)) throw NotInRange("node " + to_string(to) + " not in range of " + to_string(from));
  ++stats_.messages_sent;
  const bool delivered = !(nodes_[from.value].radio.uniform01() < config_.radio.loss_prob);

  fmt::memory_buffer f;
  fmt::format_to(std::back_inserter(f), "to={};ok={}", to.value, delivered ? 1 : 0);
  if (!fields.empty()) fmt::format_to(std::back_inserter(f), ";{}", fields);
  trace_.record(clock_, from, kind, std::string_view(f.data(), f.size()));

  if (!delivered) {
    ++stats_.messages_dropped;
    return false;
  }
  ++stats_.messages_in_flight;
  schedule(clock_ + config_.radio.latency_per_hop, to, EventKind::Receive,
           [this, to, from, payload = std::move(payload)] {
             --stats_.messages_in_flight;
             ++stats_.messages_delivered;
             if (receive_) receive_(to, from, payload);
           });
  return true;
}

void Kernel::step_mobility(double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("mobility step must be positive");
  for (auto& slot : nodes_) advance(slot.mobility, dt);
  neighbors_dirty_ = true;
}

void Kernel::refresh_neighbors() {
  const double r = config_.radio.range;
  for (auto& slot : nodes_) slot.neighbors.clear();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Position pi = nodes_[i].mobility.current;
    for (std::size_t j = i + 1; j < nodes_.size(); ++j) {
      if (distance(pi, nodes_[j].mobility.current) <= r) {
        nodes_[i].neighbors.push_back(NodeId{static_cast<std::uint32_t>(j)});
        nodes_[j].neighbors.push_back(NodeId{static_cast<std::uint32_t>(i)});
      }
    }
  }
  // j loop appends ascending for i; the i side gets ascending order too since i increases.
  neighbors_dirty_ = false;
}

void Kernel::run_tick() {
  const double now = clock_;
  std::vector<std::vector<NodeId>> before;
  before.reserve(nodes_.size());
  if (neighbors_dirty_) refresh_neighbors();
  for (const auto& slot : nodes_) before.push_back(slot.neighbors);

  if (now > last_tick_time_) step_mobility(now - last_tick_time_);
  last_tick_time_ = now;
  refresh_neighbors();

  gained_.clear();
  lost_.clear();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const NodeId self{static_cast<std::uint32_t>(i)};
    const auto& prev = before[i];
    const auto& cur = nodes_[i].neighbors;
    // At the very first tick every link counts as gained.
    const bool first = tick_index_ == 0;
    for (NodeId n : cur) {
      if (n < self) continue;
      if (first || !std::binary_search(prev.begin(), prev.end(), n)) gained_.emplace_back(self, n);
    }
    if (first) continue;
    for (NodeId n : prev) {
      if (n < self) continue;
      if (!std::binary_search(cur.begin(), cur.end(), n)) lost_.emplace_back(self, n);
    }
  }
  for (const auto& [a, b] : lost_) trace_.record(now, a, "LINK_DOWN", Fields().add("peer", b));
  for (const auto& [a, b] : gained_) trace_.record(now, a, "LINK_UP", Fields().add("peer", b));

  if (tick_) tick_();

  ++tick_index_;
  schedule(static_cast<double>(tick_index_) * config_.tick, std::nullopt, EventKind::Tick, [this] { run_tick(); });
}

RunStats Kernel::run_until(double t_end) {
  if (t_end < clock_) throw InvalidArgument("run_until target precedes clock");
  if (!started_ && !nodes_.empty()) {
    started_ = true;
    schedule(clock_, std::nullopt, EventKind::Tick, [this] { run_tick(); });
  }
  while (!heap_.empty() && heap_.front().time <= t_end) {
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Event ev = std::move(heap_.back());
    heap_.pop_back();
    if (auto it = cancelled_.find(ev.seq); it != cancelled_.end()) {
      cancelled_.erase(it);
      continue;
    }
    clock_ = ev.time;
    ++stats_.events_processed;
    ev.action();
  }
  clock_ = t_end;
  return stats_;
}

void Kernel::write_stats() {
  trace_.comment(fmt::format("#STAT\tevents_processed={}", stats_.events_processed));
  trace_.comment(fmt::format("#STAT\tmessages_sent={}", stats_.messages_sent));
  trace_.comment(fmt::format("#STAT\tmessages_delivered={}", stats_.messages_delivered));
  trace_.comment(fmt::format("#STAT\tmessages_dropped={}", stats_.messages_dropped));
  trace_.comment(fmt::format("#STAT\tmessages_in_flight={}", stats_.messages_in_flight));
}

}  // namespace adsim::sim
