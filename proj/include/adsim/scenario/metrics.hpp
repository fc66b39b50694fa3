#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "adsim/core/ids.hpp"

namespace adsim::scenario {

/// One parsed trace line. Views point into the caller's buffer.
struct TraceLine {
  double time = 0.0;
  std::optional<NodeId> node;
  std::string_view kind;
  std::string_view fields;

  std::optional<std::string_view> field(std::string_view key) const;
  double number(std::string_view key, double fallback = 0.0) const;
};

/// False for comments, blank and malformed lines.
bool parse_trace_line(std::string_view line, TraceLine& out);

struct ItemCoverage {
  std::string item;
  std::string category;
  double created_at = 0.0;
  std::uint32_t interested = 0;
  double final_fraction = 0.0;
  std::optional<double> t50;  // seconds after creation
  std::optional<double> t90;
};

struct CoverageStep {
  std::string item;
  double time = 0.0;
  double fraction = 0.0;
};

struct CoverageSample {
  double time = 0.0;
  std::uint32_t items = 0;
  double mean = 0.0;
};

struct AsrqOutcome {
  std::string query;
  std::uint32_t initiator = 0;
  double launched_at = 0.0;
  std::uint64_t sent = 0;
  std::uint64_t received = 0;
  std::optional<double> first_latency;
  std::optional<double> fraction() const {
    if (sent == 0) return std::nullopt;
    return static_cast<double>(received) / static_cast<double>(sent);
  }
};

struct DeliveryCount {
  std::uint64_t routed = 0;
  std::uint64_t delivered = 0;
};

struct ReplicationHealth {
  std::uint64_t ticks = 0;
  std::uint64_t ok = 0;
  std::uint64_t stable = 0;     // ticks without membership change
  std::uint64_t stable_ok = 0;
};

struct AwarenessStep {
  std::uint32_t market = 0;
  double time = 0.0;
  std::uint32_t known = 0;
  double fraction = 0.0;
};

struct QuizView {
  std::uint32_t node = 0;
  double time = 0.0;
  double completeness = 0.0;
  bool matches_oracle = false;
};

/// Everything the report shows, derived from a trace alone.
struct MetricsReport {
  std::uint64_t seed = 0;
  double duration = 0.0;
  double tick = 1.0;
  std::uint32_t nodes = 0;
  std::uint32_t ads_nodes = 0;

  std::vector<CoverageSample> coverage;
  std::vector<ItemCoverage> items;
  std::vector<CoverageStep> coverage_steps;
  std::vector<AsrqOutcome> asrqs;
  std::map<std::string, DeliveryCount> delivery;  // by inner kind
  std::map<std::string, std::uint64_t> drops;     // by reason
  std::map<std::uint32_t, ReplicationHealth> replication;
  std::vector<AwarenessStep> awareness;
  std::vector<QuizView> quiz;
  std::map<std::string, std::string> stats;  // #STAT block

  double mean_final_coverage() const;
  std::optional<double> asrq_mean_fraction() const;
  std::optional<double> asrq_mean_latency() const;
  std::optional<double> delivery_ratio() const;
  std::optional<double> replication_health() const;
  /// Final fraction of ADS nodes knowing each market.
  std::map<std::uint32_t, double> awareness_final() const;
};

MetricsReport compute_metrics(std::istream& trace);
MetricsReport compute_metrics_file(const std::string& path);

/// Tab-separated sections with `#` comments.
void write_report(const MetricsReport& r, std::ostream& out);

}  // namespace adsim::scenario
