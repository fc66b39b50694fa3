#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "adsim/scenario/config.hpp"
#include "adsim/scenario/metrics.hpp"
#include "adsim/sim/kernel.hpp"

namespace adsim::scenario {

struct RunOutput {
  std::uint64_t digest = 0;
  std::uint64_t lines = 0;
  sim::RunStats stats;
  MetricsReport report;
};

/// Runs `cfg` to its duration. The trace goes to `trace_path` when given,
/// otherwise it is kept in memory; the report is always derived from the
/// trace text. Throws IoError when the trace cannot be written.
RunOutput run_scenario(const Config& cfg, std::uint64_t seed, const std::optional<std::string>& trace_path = {});

struct BatchRow {
  std::string config;
  std::uint64_t seed = 0;
  std::optional<RunOutput> output;
  std::string error;  // empty on success
  bool ok() const { return output.has_value(); }
};

/// Every (config, seed) pair, ordered by config then seed regardless of the
/// order in which workers finish. A failing config only fails its own rows.
std::vector<BatchRow> run_batch(const std::vector<std::string>& configs, const std::vector<std::uint64_t>& seeds,
                                unsigned jobs = 1);

/// Tab-separated summary: one row per run, then per-config means over the
/// successful seeds.
void write_batch_summary(const std::vector<BatchRow>& rows, std::ostream& out);

}  // namespace adsim::scenario
