#pragma once

#include <string>
#include <vector>

#include "adsim/core/geometry.hpp"

namespace adsim::ads {

struct PlanEntry {
  double from = 0.0;
  double to = 0.0;
  Region region;
  friend bool operator==(const PlanEntry&, const PlanEntry&) = default;
};

/// Calendar of where a node expects to be. Entries are time ordered,
/// non-overlapping and contiguous over the plan's span.
struct MovementPlan {
  std::vector<PlanEntry> entries;

  bool empty() const { return entries.empty(); }
  double start() const { return entries.empty() ? 0.0 : entries.front().from; }
  double end() const { return entries.empty() ? 0.0 : entries.back().to; }
  bool covers(double from, double to) const { return !entries.empty() && start() <= from && to <= end(); }

  /// Region of the entry containing `t`; the plan's last region when no
  /// entry does. Requires a non-empty plan.
  const Region& region_at(double t) const;

  /// Human-readable problems; empty when the plan is well formed.
  std::vector<std::string> problems() const;

  friend bool operator==(const MovementPlan&, const MovementPlan&) = default;
};

}  // namespace adsim::ads
