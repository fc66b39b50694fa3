#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include "adsim/ads/node.hpp"
#include "adsim/carla/app.hpp"
#include "adsim/market/market.hpp"
#include "adsim/routing/router.hpp"
#include "adsim/scenario/config.hpp"
#include "adsim/sim/kernel.hpp"
#include "adsim/support/support_node.hpp"

namespace adsim::scenario {

/// One scenario instance: kernel, per-node middleware, markets, support
/// nodes and the scripted workload.
class Simulation {
 public:
  /// `cfg` must be valid and outlive the simulation. `seed` replaces the
  /// config's seed.
  Simulation(const Config& cfg, std::uint64_t seed, std::ostream* trace_sink = nullptr);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Runs to the configured duration, appends the #STAT block and flushes.
  sim::RunStats run();
  sim::RunStats run_until(double t);

  const Config& config() const { return cfg_; }
  const Layout& layout() const { return layout_; }
  sim::Kernel& kernel() { return *kernel_; }
  sim::Trace& trace() { return *trace_; }
  double now() const { return kernel_->now(); }

  const std::vector<NodeId>& ads_nodes() const { return ads_ids_; }
  bool is_ads(NodeId n) const { return n.value < nodes_.size() && nodes_[n.value] != nullptr; }
  bool is_support(NodeId n) const { return n.value < supports_.size() && supports_[n.value] != nullptr; }
  ads::Node& node(NodeId n);
  carla::App& app(NodeId n);
  routing::Router& router(NodeId n);
  support::SupportNode& support(NodeId n);
  std::vector<NodeId> support_nodes() const;
  const std::vector<std::unique_ptr<market::Market>>& markets() const { return markets_; }
  market::Market* market(MarketId id);
  market::Market* market_at(std::string_view hotspot);

  ads::ItemId label(const std::string& name) const;
  const ads::MovementPlan& plan_of(NodeId n) const;

  /// Called at the end of every tick, after all protocol work.
  void on_tick(std::function<void()> fn) { observers_.push_back(std::move(fn)); }

  routing::MsgId send_probe(NodeId from, const Region& dest, double ttl);

 private:
  void build_nodes();
  void wire_kernel();
  void schedule_script();
  void tick();
  void dispatch(NodeId to, NodeId from, const std::string& bytes);
  routing::Delivery deliver(NodeId at, const routing::RoutedMessage& msg);
  void execute(const Directive& d);
  void run_directive(const Directive& d, NodeId n);
  void rank_oracle();
  void script_error(const Directive& d, std::optional<NodeId> n, const std::string& what);

  const Config& cfg_;
  Layout layout_;
  std::unique_ptr<sim::Trace> trace_;
  std::unique_ptr<sim::Kernel> kernel_;
  std::shared_ptr<carla::Roster> roster_;

  std::vector<NodeId> ads_ids_;
  std::vector<std::unique_ptr<routing::Router>> routers_;
  std::vector<std::unique_ptr<ads::Node>> nodes_;
  std::vector<std::unique_ptr<carla::App>> apps_;
  std::vector<std::unique_ptr<support::SupportNode>> supports_;
  std::vector<std::unique_ptr<market::Market>> markets_;
  std::vector<ads::MovementPlan> plans_;

  std::vector<std::function<void()>> observers_;
  double next_purge_ = 0.0;
};

}  // namespace adsim::scenario
