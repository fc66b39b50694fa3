#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "adsim/core/hash.hpp"
#include "adsim/core/ids.hpp"

namespace adsim::sim {

/// Builds the `key=value;key=value` column of a trace line.
class Fields {
 public:
  template <typename T>
  Fields& add(std::string_view key, const T& value) {
    if (buf_.size() > 0) buf_.push_back(';');
    fmt::format_to(std::back_inserter(buf_), "{}={}", key, value);
    return *this;
  }
  Fields& add(std::string_view key, double value) {
    if (buf_.size() > 0) buf_.push_back(';');
    fmt::format_to(std::back_inserter(buf_), "{}={:.3f}", key, value);
    return *this;
  }
  Fields& add(std::string_view key, NodeId id) { return add(key, id.value); }
  Fields& add(std::string_view key, MarketId id) { return add(key, id.value); }
  Fields& add(std::string_view key, bool b) { return add(key, b ? 1 : 0); }

  std::string_view view() const { return {buf_.data(), buf_.size()}; }
  std::string str() const { return fmt::to_string(buf_); }

 private:
  fmt::memory_buffer buf_;
};

/// Line-oriented event log: `time<TAB>node<TAB>kind<TAB>fields`. A null sink
/// still maintains the digest and line count.
class Trace {
 public:
  explicit Trace(std::ostream* sink = nullptr) : sink_(sink) {}

  void record(double time, std::optional<NodeId> node, std::string_view kind, std::string_view fields);
  void record(double time, std::optional<NodeId> node, std::string_view kind, const Fields& fields) {
    record(time, node, kind, fields.view());
  }
  /// Raw `#` line (metadata, statistics).
  void comment(std::string_view line);

  std::uint64_t digest() const { return hash_.digest(); }
  std::uint64_t lines() const { return lines_; }
  void flush();

 private:
  void emit(std::string_view line);

  std::ostream* sink_;
  fmt::memory_buffer pending_;
  Fnv1a hash_;
  std::uint64_t lines_ = 0;
};

}  // namespace adsim::sim
