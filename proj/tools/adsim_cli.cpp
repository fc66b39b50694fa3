// adsim command-line front end. Exit codes:
//   0 success, 1 internal error, 2 usage error, 3 scenario parse error,
//   4 scenario validation error, 5 file I/O error, 6 batch with failed rows.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "adsim/core/error.hpp"
#include "adsim/scenario/config.hpp"
#include "adsim/scenario/metrics.hpp"
#include "adsim/scenario/runner.hpp"

namespace {

enum Exit : int { kOk = 0, kInternal = 1, kUsage = 2, kParse = 3, kInvalid = 4, kIo = 5, kBatchPartial = 6 };

using namespace adsim;

void emit_report(const scenario::MetricsReport& r, const std::optional<std::string>& path) {
  if (!path) {
    scenario::write_report(r, std::cout);
    return;
  }
  std::ofstream out(*path, std::ios::trunc);
  if (!out) throw IoError("cannot write report " + *path);
  scenario::write_report(r, out);
  if (!out) throw IoError("error writing report " + *path);
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, const std::optional<std::string>& trace,
            const std::optional<std::string>& report) {
  const scenario::Config cfg = scenario::load(config);
  const std::uint64_t s = seed.value_or(cfg.world.seed);
  const auto out = scenario::run_scenario(cfg, s, trace);
  emit_report(out.report, report);
  std::cerr << fmt::format("run {} seed={} lines={} digest={:016x} events={}\n", config, s, out.lines, out.digest,
                           out.stats.events_processed);
  return kOk;
}

int cmd_validate(const std::string& config) {
  const scenario::Config cfg = scenario::load(config);
  const auto layout = scenario::layout(cfg);
  std::cout << fmt::format("{}: ok ({} nodes, {} hotspots, {} directives)\n", config, layout.node_count,
                           cfg.hotspots.size(), cfg.workload.size());
  return kOk;
}

int cmd_replay(const std::string& trace, const std::optional<std::string>& report) {
  emit_report(scenario::compute_metrics_file(trace), report);
  return kOk;
}

int cmd_batch(const std::vector<std::string>& configs, const std::vector<std::uint64_t>& seeds, unsigned jobs,
              const std::optional<std::string>& out_path) {
  const auto rows = scenario::run_batch(configs, seeds, jobs);
  if (out_path) {
    std::ofstream out(*out_path, std::ios::trunc);
    if (!out) throw IoError("cannot write summary " + *out_path);
    scenario::write_batch_summary(rows, out);
  } else {
    scenario::write_batch_summary(rows, std::cout);
  }
  for (const auto& r : rows) {
    if (!r.ok()) return kBatchPartial;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adsim: mobile ad hoc information market simulator"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> trace_path;
  std::optional<std::string> report_path;
  auto* run = app.add_subcommand("run", "Run one scenario and print its metrics report");
  run->add_option("config", config, "Scenario file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--trace", trace_path, "Write the event trace here");
  run->add_option("--report", report_path, "Write the report here instead of stdout");

  std::vector<std::string> configs;
  std::vector<std::uint64_t> seeds;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  std::optional<std::string> summary_path;
  auto* batch = app.add_subcommand("batch", "Run every config with every seed");
  batch->add_option("configs", configs, "Scenario files")->required();
  batch->add_option("--seeds", seeds, "Comma-separated seeds")->required()->delimiter(',');
  batch->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);
  batch->add_option("--out", summary_path, "Write the summary here instead of stdout");

  auto* validate = app.add_subcommand("validate", "Parse and validate a scenario");
  validate->add_option("config", config, "Scenario file")->required();

  std::string trace_in;
  auto* replay = app.add_subcommand("replay-metrics", "Recompute the metrics report from a trace");
  replay->add_option("trace", trace_in, "Trace file")->required();
  replay->add_option("--report", report_path, "Write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(config, seed, trace_path, report_path);
    if (*batch) return cmd_batch(configs, seeds, jobs, summary_path);
    if (*validate) return cmd_validate(config);
    if (*replay) return cmd_replay(trace_in, report_path);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const ValidationError& e) {
    std::cerr << e.what() << '\n';
    return kInvalid;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}
