#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

#include "adsim/core/error.hpp"

namespace adsim::wire {

/// Little-endian, varint-based byte writer.
class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void varint(std::uint64_t v) {
    while (v >= 0x80) {
      u8(static_cast<std::uint8_t>(v | 0x80));
      v >>= 7;
    }
    u8(static_cast<std::uint8_t>(v));
  }
  void svarint(std::int64_t v) { varint((static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63)); }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void boolean(bool b) { u8(b ? 1 : 0); }
  void str(std::string_view s) {
    varint(s.size());
    buf_.append(s);
  }

  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    if (pos_ >= bytes_.size()) throw CodecError("truncated message");
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint64_t varint() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      const std::uint8_t b = u8();
      v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
      if ((b & 0x80) == 0) return v;
    }
    throw CodecError("varint too long");
  }
  std::uint32_t u32() {
    const auto v = varint();
    if (v > 0xffffffffULL) throw CodecError("value exceeds 32 bits");
    return static_cast<std::uint32_t>(v);
  }
  std::int64_t svarint() {
    const auto v = varint();
    return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1);
  }
  double f64() {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return std::bit_cast<double>(bits);
  }
  bool boolean() {
    const auto b = u8();
    if (b > 1) throw CodecError("bad boolean");
    return b == 1;
  }
  std::string str() {
    const auto n = varint();
    if (n > bytes_.size() - pos_) throw CodecError("truncated string");
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  /// Bounds a collection length by what could possibly remain in the buffer.
  std::size_t count() {
    const auto n = varint();
    if (n > bytes_.size() - pos_) throw CodecError("implausible element count");
    return static_cast<std::size_t>(n);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace adsim::wire
