#include "adsim/sim/trace.hpp"

namespace adsim::sim {

void Trace::record(double time, std::optional<NodeId> node, std::string_view kind, std::string_view fields) {
  fmt::memory_buffer line;
  if (node) {
    fmt::format_to(std::back_inserter(line), "{:.3f}\t{}\t{}\t{}\n", time, node->value, kind, fields);
  } else {
    fmt::format_to(std::back_inserter(line), "{:.3f}\t-\t{}\t{}\n", time, kind, fields);
  }
  emit({line.data(), line.size()});
}

void Trace::comment(std::string_view line) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "{}\n", line);
  emit({buf.data(), buf.size()});
}

void Trace::emit(std::string_view line) {
  hash_.update(line);
  ++lines_;
  if (sink_ == nullptr) return;
  pending_.append(line);
  if (pending_.size() > (1u << 20)) flush();
}

void Trace::flush() {
  if (sink_ != nullptr && pending_.size() > 0) {
    sink_->write(pending_.data(), static_cast<std::streamsize>(pending_.size()));
    sink_->flush();
  }
  pending_.clear();
}

}  // namespace adsim::sim
