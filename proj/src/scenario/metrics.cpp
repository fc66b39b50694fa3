#include "adsim/scenario/metrics.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "adsim/core/error.hpp"

namespace adsim::scenario {

namespace {

double to_num(std::string_view s, double fallback) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && p == s.data() + s.size() ? v : fallback;
}

std::set<std::string> split_set(std::string_view s) {
  std::set<std::string> out;
  std::size_t start = 0;
  while (start < s.size()) {
    std::size_t end = s.find(',', start);
    if (end == std::string_view::npos) end = s.size();
    if (end > start) out.emplace(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::string opt(const std::optional<double>& v, int digits = 6) {
  return v ? fmt::format("{:.{}f}", *v, digits) : std::string("-");
}

}  // namespace

std::optional<std::string_view> TraceLine::field(std::string_view key) const {
  std::size_t start = 0;
  while (start < fields.size()) {
    std::size_t end = fields.find(';', start);
    if (end == std::string_view::npos) end = fields.size();
    std::string_view kv = fields.substr(start, end - start);
    const auto eq = kv.find('=');
    if (eq != std::string_view::npos && kv.substr(0, eq) == key) return kv.substr(eq + 1);
    start = end + 1;
  }
  return std::nullopt;
}

double TraceLine::number(std::string_view key, double fallback) const {
  auto v = field(key);
  return v ? to_num(*v, fallback) : fallback;
}

bool parse_trace_line(std::string_view line, TraceLine& out) {
  if (line.empty() || line.front() == '#') return false;
  std::string_view parts[4];
  std::size_t start = 0;
  for (int i = 0; i < 3; ++i) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) return false;
    parts[i] = line.substr(start, tab - start);
    start = tab + 1;
  }
  parts[3] = line.substr(start);
  if (!parts[3].empty() && parts[3].back() == '\r') parts[3].remove_suffix(1);
  double t = 0.0;
  auto [p, ec] = std::from_chars(parts[0].data(), parts[0].data() + parts[0].size(), t);
  if (ec != std::errc()) return false;
  out.time = t;
  if (parts[1] == "-") {
    out.node.reset();
  } else {
    std::uint32_t n = 0;
    auto [q, ec2] = std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), n);
    if (ec2 != std::errc()) return false;
    out.node = NodeId{n};
  }
  out.kind = parts[2];
  out.fields = parts[3];
  return true;
}

namespace {

class Builder {
 public:
  void feed(std::string_view raw) {
    if (raw.rfind("#STAT\t", 0) == 0) {
      std::string_view kv = raw.substr(6);
      const auto eq = kv.find('=');
      if (eq != std::string_view::npos) r_.stats[std::string(kv.substr(0, eq))] = std::string(kv.substr(eq + 1));
      return;
    }
    TraceLine l;
    if (!parse_trace_line(raw, l)) return;
    sample_until(l.time, false);
    handle(l);
  }

  MetricsReport finish() {
    sample_until(r_.duration, true);
    for (const auto& id : item_order_) {
      const Item& it = items_.at(id);
      if (it.interested == 0) continue;
      ItemCoverage c;
      c.item = id;
      c.category = it.category;
      c.created_at = it.created_at;
      c.interested = it.interested;
      c.final_fraction = fraction(it);
      c.t50 = it.t50;
      c.t90 = it.t90;
      r_.items.push_back(std::move(c));
    }
    for (const auto& q : asrq_order_) r_.asrqs.push_back(asrqs_.at(q));
    return std::move(r_);
  }

 private:
  struct Item {
    std::string category;
    double created_at = 0.0;
    std::uint32_t interested = 0;
    std::uint32_t holders = 0;
    std::set<std::uint32_t> seen;
    std::optional<double> t50;
    std::optional<double> t90;
  };

  static double fraction(const Item& it) {
    return it.interested == 0 ? 0.0 : static_cast<double>(it.holders) / static_cast<double>(it.interested);
  }

  std::uint32_t interested_in(const std::string& category) const {
    std::uint32_t n = 0;
    for (const auto& [node, interests] : interests_) n += interests.count(category) != 0 ? 1 : 0;
    return n;
  }

  void sample_until(double t, bool inclusive) {
    if (!have_meta_) return;
    while (next_sample_ <= r_.duration + 1e-9 && (inclusive ? next_sample_ <= t + 1e-9 : next_sample_ < t - 1e-9)) {
      CoverageSample s;
      s.time = next_sample_;
      s.items = counted_;
      s.mean = counted_ == 0 ? 0.0 : fraction_sum_ / counted_;
      r_.coverage.push_back(s);
      ++sample_index_;
      next_sample_ = static_cast<double>(sample_index_) * r_.tick;
    }
  }

  void hold(std::uint32_t node, const std::string& id, double time) {
    auto it = items_.find(id);
    if (it == items_.end()) return;
    Item& item = it->second;
    auto n = interests_.find(node);
    if (n == interests_.end() || n->second.count(item.category) == 0) return;
    if (!item.seen.insert(node).second) return;
    const double before = fraction(item);
    ++item.holders;
    const double after = fraction(item);
    fraction_sum_ += after - before;
    if (!item.t50 && after >= 0.5) item.t50 = time - item.created_at;
    if (!item.t90 && after >= 0.9) item.t90 = time - item.created_at;
    r_.coverage_steps.push_back({id, time, after});
  }

  void handle(const TraceLine& l) {
    const std::string_view k = l.kind;
    if (k == "META") {
      r_.seed = static_cast<std::uint64_t>(l.number("seed"));
      r_.duration = l.number("duration");
      r_.tick = l.number("tick", 1.0);
      r_.nodes = static_cast<std::uint32_t>(l.number("nodes"));
      have_meta_ = r_.tick > 0.0;
      next_sample_ = 0.0;
    } else if (k == "NODE") {
      if (l.field("role").value_or("") == "support" || !l.node) return;
      interests_[l.node->value] = split_set(l.field("interests").value_or(""));
      ++r_.ads_nodes;
    } else if (k == "ITEM_NEW") {
      const std::string id(l.field("item").value_or(""));
      if (items_.count(id) != 0) return;
      Item it;
      it.category = std::string(l.field("cat").value_or(""));
      it.created_at = l.time;
      it.interested = interested_in(it.category);
      items_.emplace(id, std::move(it));
      item_order_.push_back(id);
      if (items_.at(id).interested > 0) ++counted_;
    } else if (k == "HOLD") {
      if (l.node) hold(l.node->value, std::string(l.field("item").value_or("")), l.time);
    } else if (k == "ASRQ_LAUNCH") {
      const std::string q(l.field("query").value_or(""));
      AsrqOutcome o;
      o.query = q;
      o.initiator = l.node ? l.node->value : 0;
      o.launched_at = l.time;
      if (asrqs_.emplace(q, o).second) asrq_order_.push_back(q);
    } else if (k == "MKT_CHUNK") {
      auto it = asrqs_.find(std::string(l.field("query").value_or("")));
      if (it != asrqs_.end()) it->second.sent += static_cast<std::uint64_t>(l.number("items"));
    } else if (k == "CHUNK_RECV") {
      auto it = asrqs_.find(std::string(l.field("query").value_or("")));
      if (it == asrqs_.end()) return;
      it->second.received += static_cast<std::uint64_t>(l.number("new"));
      if (!it->second.first_latency) it->second.first_latency = l.time - it->second.launched_at;
    } else if (k == "ROUTE") {
      const std::string msg(l.field("msg").value_or(""));
      const std::string inner(l.field("inner").value_or(""));
      if (routed_.emplace(msg, inner).second) ++r_.delivery[inner].routed;
    } else if (k == "DELIVER") {
      const std::string msg(l.field("msg").value_or(""));
      auto it = routed_.find(msg);
      if (it != routed_.end() && delivered_.insert(msg).second) ++r_.delivery[it->second].delivered;
    } else if (k == "DROP") {
      ++r_.drops[std::string(l.field("reason").value_or("?"))];
    } else if (k == "MKT_HEALTH") {
      ReplicationHealth& h = r_.replication[static_cast<std::uint32_t>(l.number("market"))];
      const bool ok = l.field("ok").value_or("0") == "1";
      const bool churn = l.field("churn").value_or("0") == "1";
      ++h.ticks;
      h.ok += ok ? 1 : 0;
      if (!churn) {
        ++h.stable;
        h.stable_ok += ok ? 1 : 0;
      }
    } else if (k == "MKT_ADV") {
      if (!l.node || interests_.count(l.node->value) == 0) return;
      const auto m = static_cast<std::uint32_t>(l.number("market"));
      auto& known = aware_[m];
      if (!known.insert(l.node->value).second) return;
      const double frac = r_.ads_nodes == 0 ? 0.0 : static_cast<double>(known.size()) / r_.ads_nodes;
      r_.awareness.push_back({m, l.time, static_cast<std::uint32_t>(known.size()), frac});
    } else if (k == "QUIZ_ORACLE") {
      const std::string oracle(l.field("ranking").value_or(""));
      for (auto& [node, view] : pending_quiz_) {
        view.matches_oracle = rankings_[node] == oracle;
        r_.quiz.push_back(view);
      }
      pending_quiz_.clear();
    } else if (k == "QUIZ_RANK") {
      if (!l.node) return;
      QuizView v;
      v.node = l.node->value;
      v.time = l.time;
      v.completeness = l.number("completeness");
      rankings_[v.node] = std::string(l.field("ranking").value_or(""));
      pending_quiz_[v.node] = v;
    }
  }

  MetricsReport r_;
  bool have_meta_ = false;
  double next_sample_ = 0.0;
  std::uint64_t sample_index_ = 0;
  std::map<std::uint32_t, std::set<std::string>> interests_;
  std::map<std::string, Item> items_;
  std::vector<std::string> item_order_;
  std::uint32_t counted_ = 0;
  double fraction_sum_ = 0.0;
  std::map<std::string, AsrqOutcome> asrqs_;
  std::vector<std::string> asrq_order_;
  std::map<std::string, std::string> routed_;
  std::set<std::string> delivered_;
  std::map<std::uint32_t, std::set<std::uint32_t>> aware_;
  std::map<std::uint32_t, std::string> rankings_;
  std::map<std::uint32_t, QuizView> pending_quiz_;
};

}  // namespace

MetricsReport compute_metrics(std::istream& trace) {
  Builder b;
  std::string line;
  while (std::getline(trace, line)) b.feed(line);
  return b.finish();
}

MetricsReport compute_metrics_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read trace " + path);
  return compute_metrics(in);
}

double MetricsReport::mean_final_coverage() const {
  if (items.empty()) return 0.0;
  double s = 0.0;
  for (const auto& i : items) s += i.final_fraction;
  return s / static_cast<double>(items.size());
}

std::optional<double> MetricsReport::asrq_mean_fraction() const {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& q : asrqs) {
    if (auto f = q.fraction()) {
      s += *f;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return s / static_cast<double>(n);
}

std::optional<double> MetricsReport::asrq_mean_latency() const {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& q : asrqs) {
    if (q.first_latency) {
      s += *q.first_latency;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return s / static_cast<double>(n);
}

std::optional<double> MetricsReport::delivery_ratio() const {
  std::uint64_t routed = 0;
  std::uint64_t delivered = 0;
  for (const auto& [k, d] : delivery) {
    routed += d.routed;
    delivered += d.delivered;
  }
  if (routed == 0) return std::nullopt;
  return static_cast<double>(delivered) / static_cast<double>(routed);
}

std::optional<double> MetricsReport::replication_health() const {
  std::uint64_t ticks = 0;
  std::uint64_t ok = 0;
  for (const auto& [m, h] : replication) {
    ticks += h.ticks;
    ok += h.ok;
  }
  if (ticks == 0) return std::nullopt;
  return static_cast<double>(ok) / static_cast<double>(ticks);
}

std::map<std::uint32_t, double> MetricsReport::awareness_final() const {
  std::map<std::uint32_t, double> out;
  for (const auto& [m, h] : replication) out[m] = 0.0;
  for (const auto& a : awareness) out[a.market] = a.fraction;
  return out;
}

void write_report(const MetricsReport& r, std::ostream& out) {
  auto line = [&](const std::string& s) { out << s << '\n'; };
  line("# adsim metrics report");
  line(fmt::format("# seed={} duration={:.3f} tick={:.3f} nodes={}", r.seed, r.duration, r.tick, r.nodes));

  line("[summary]");
  line("key\tvalue");
  line(fmt::format("nodes\t{}", r.nodes));
  line(fmt::format("ads_nodes\t{}", r.ads_nodes));
  line(fmt::format("items\t{}", r.items.size()));
  line(fmt::format("mean_final_coverage\t{:.6f}", r.mean_final_coverage()));
  line(fmt::format("asrq_count\t{}", r.asrqs.size()));
  line(fmt::format("asrq_delivered_fraction\t{}", opt(r.asrq_mean_fraction())));
  line(fmt::format("asrq_first_chunk_latency\t{}", opt(r.asrq_mean_latency(), 3)));
  line(fmt::format("delivery_ratio\t{}", opt(r.delivery_ratio())));
  line(fmt::format("replication_health\t{}", opt(r.replication_health())));
  for (const auto& [m, f] : r.awareness_final()) line(fmt::format("awareness_m{}\t{:.6f}", m, f));
  for (const auto& [k, v] : r.stats) line(fmt::format("{}\t{}", k, v));

  line("[coverage_mean]");
  line("# mean over released items of the fraction of interested nodes holding them");
  line("time\titems\tmean_fraction");
  for (const auto& s : r.coverage) line(fmt::format("{:.3f}\t{}\t{:.6f}", s.time, s.items, s.mean));

  line("[coverage_items]");
  line("item\tcategory\tcreated_at\tinterested\tfinal_fraction\tt50\tt90");
  for (const auto& i : r.items) {
    line(fmt::format("{}\t{}\t{:.3f}\t{}\t{:.6f}\t{}\t{}", i.item, i.category, i.created_at, i.interested,
                     i.final_fraction, opt(i.t50, 3), opt(i.t90, 3)));
  }

  line("[coverage_steps]");
  line("item\ttime\tfraction");
  for (const auto& s : r.coverage_steps) line(fmt::format("{}\t{:.3f}\t{:.6f}", s.item, s.time, s.fraction));

  line("[asrq]");
  line("query\tinitiator\tlaunched_at\tsent\treceived\tfraction\tfirst_chunk_latency");
  for (const auto& q : r.asrqs) {
    line(fmt::format("{}\t{}\t{:.3f}\t{}\t{}\t{}\t{}", q.query, q.initiator, q.launched_at, q.sent, q.received,
                     opt(q.fraction()), opt(q.first_latency, 3)));
  }

  line("[delivery]");
  line("inner\trouted\tdelivered\tratio");
  for (const auto& [k, d] : r.delivery) {
    const std::optional<double> ratio =
        d.routed == 0 ? std::nullopt : std::optional<double>(static_cast<double>(d.delivered) / d.routed);
    line(fmt::format("{}\t{}\t{}\t{}", k, d.routed, d.delivered, opt(ratio)));
  }

  line("[drops]");
  line("reason\tcount");
  for (const auto& [k, n] : r.drops) line(fmt::format("{}\t{}", k, n));

  line("[replication]");
  line("market\tticks\tok_ticks\thealth\tstable_ticks\tstable_ok");
  for (const auto& [m, h] : r.replication) {
    const double health = h.ticks == 0 ? 0.0 : static_cast<double>(h.ok) / static_cast<double>(h.ticks);
    line(fmt::format("{}\t{}\t{}\t{:.6f}\t{}\t{}", m, h.ticks, h.ok, health, h.stable, h.stable_ok));
  }

  line("[awareness]");
  line("market\ttime\tknown\tfraction");
  for (const auto& a : r.awareness) line(fmt::format("{}\t{:.3f}\t{}\t{:.6f}", a.market, a.time, a.known, a.fraction));

  line("[quiz]");
  line("node\ttime\tcompleteness\tmatches_oracle");
  for (const auto& q : r.quiz) line(fmt::format("{}\t{:.3f}\t{:.6f}\t{}", q.node, q.time, q.completeness, q.matches_oracle ? 1 : 0));
}

}  // namespace adsim::scenario
