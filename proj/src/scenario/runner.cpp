#include "adsim/scenario/runner.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "adsim/core/error.hpp"
#include "adsim/scenario/simulation.hpp"

namespace adsim::scenario {

RunOutput run_scenario(const Config& cfg, std::uint64_t seed, const std::optional<std::string>& trace_path) {
  RunOutput out;
  auto finish = [&](Simulation& sim) {
    out.stats = sim.run();
    out.digest = sim.trace().digest();
    out.lines = sim.trace().lines();
  };
  if (trace_path) {
    {
      std::ofstream file(*trace_path, std::ios::binary | std::ios::trunc);
      if (!file) throw IoError("cannot write trace " + *trace_path);
      Simulation sim(cfg, seed, &file);
      finish(sim);
      file.flush();
      if (!file) throw IoError("error writing trace " + *trace_path);
    }
    out.report = compute_metrics_file(*trace_path);
  } else {
    std::stringstream buffer;
    Simulation sim(cfg, seed, &buffer);
    finish(sim);
    buffer.seekg(0);
    out.report = compute_metrics(buffer);
  }
  return out;
}

std::vector<BatchRow> run_batch(const std::vector<std::string>& configs, const std::vector<std::uint64_t>& seeds,
                                unsigned jobs) {
  std::vector<std::optional<Config>> loaded(configs.size());
  std::vector<std::string> load_errors(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    try {
      loaded[i] = load(configs[i]);
    } catch (const std::exception& e) {
      load_errors[i] = e.what();
    }
  }

  std::vector<BatchRow> rows;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    for (auto s : seeds) rows.push_back({configs[i], s, std::nullopt, load_errors[i]});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < rows.size(); r = next++) {
      const std::size_t ci = r / seeds.size();
      if (!loaded[ci]) continue;
      try {
        rows[r].output = run_scenario(*loaded[ci], rows[r].seed);
      } catch (const std::exception& e) {
        rows[r].error = e.what();
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(rows.size())));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

namespace {

std::string opt(const std::optional<double>& v, int digits = 6) {
  return v ? fmt::format("{:.{}f}", *v, digits) : std::string("-");
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\t', ' ');
  return s;
}

}  // namespace

void write_batch_summary(const std::vector<BatchRow>& rows, std::ostream& out) {
  out << "# adsim batch summary\n[runs]\n";
  out << "config\tseed\tstatus\tdigest\tlines\titems\tmean_final_coverage\tasrq_fraction\tasrq_latency\t"
         "delivery_ratio\treplication_health\terror\n";
  struct Acc {
    std::size_t runs = 0;
    double coverage = 0.0;
  };
  std::map<std::string, Acc> acc;
  std::vector<std::string> order;
  for (const auto& row : rows) {
    if (acc.find(row.config) == acc.end()) {
      acc[row.config];
      order.push_back(row.config);
    }
    if (!row.ok()) {
      out << fmt::format("{}\t{}\terror\t-\t-\t-\t-\t-\t-\t-\t-\t{}\n", row.config, row.seed, one_line(row.error));
      continue;
    }
    const auto& o = *row.output;
    const auto& r = o.report;
    out << fmt::format("{}\t{}\tok\t{:016x}\t{}\t{}\t{:.6f}\t{}\t{}\t{}\t{}\t-\n", row.config, row.seed, o.digest,
                       o.lines, r.items.size(), r.mean_final_coverage(), opt(r.asrq_mean_fraction()),
                       opt(r.asrq_mean_latency(), 3), opt(r.delivery_ratio()), opt(r.replication_health()));
    Acc& a = acc[row.config];
    ++a.runs;
    a.coverage += r.mean_final_coverage();
  }
  out << "[means]\nconfig\truns\tmean_final_coverage\n";
  for (const auto& c : order) {
    const Acc& a = acc[c];
    out << fmt::format("{}\t{}\t{}\n", c, a.runs,
                       a.runs == 0 ? std::string("-") : fmt::format("{:.6f}", a.coverage / a.runs));
  }
}

}  // namespace adsim::scenario
