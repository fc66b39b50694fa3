#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "adsim/ads/query.hpp"
#include "adsim/ads/store.hpp"
#include "adsim/market/descriptor.hpp"
#include "adsim/routing/geo.hpp"

namespace adsim::wire {

/// Version of the on-air format. Bumped on any field change.
inline constexpr std::uint8_t kProtocolVersion = 1;

enum class MsgType : std::uint8_t {
  Profile = 1,
  Digest = 2,
  Items = 3,
  SyncQuery = 4,
  SyncReply = 5,
  Ack = 6,
  Geo = 7,
  Adv = 8,
  DirReq = 9,
  Dir = 10,
};

struct ProfileMsg {
  NodeId node;
  std::set<ads::Category> interests;
  std::uint32_t budget = 0;
  bool reply_requested = false;
  friend bool operator==(const ProfileMsg&, const ProfileMsg&) = default;
};

struct DigestMsg {
  std::vector<ads::DigestEntry> entries;
  friend bool operator==(const DigestMsg&, const DigestMsg&) = default;
};

struct ItemsMsg {
  std::vector<ads::InfoItem> items;
  friend bool operator==(const ItemsMsg&, const ItemsMsg&) = default;
};

struct SyncQueryMsg {
  ads::QueryId query;
  ads::Selector selector;
  std::uint32_t hops_left = 0;
  double deadline = 0.0;
  friend bool operator==(const SyncQueryMsg&, const SyncQueryMsg&) = default;
};

struct SyncReplyMsg {
  ads::QueryId query;
  std::vector<ads::InfoItem> items;
  friend bool operator==(const SyncReplyMsg&, const SyncReplyMsg&) = default;
};

struct AckMsg {
  routing::MsgId msg;
  std::uint32_t hop = 0;
  friend bool operator==(const AckMsg&, const AckMsg&) = default;
};

struct GeoMsg {
  routing::RoutedMessage routed;
  friend bool operator==(const GeoMsg&, const GeoMsg&) = default;
};

struct AdvMsg {
  std::vector<market::MarketDescriptor> descriptors;
  friend bool operator==(const AdvMsg&, const AdvMsg&) = default;
};

struct DirReqMsg {
  friend bool operator==(const DirReqMsg&, const DirReqMsg&) = default;
};

struct DirMsg {
  std::vector<market::MarketDescriptor> descriptors;
  friend bool operator==(const DirMsg&, const DirMsg&) = default;
};

using Message = std::variant<ProfileMsg, DigestMsg, ItemsMsg, SyncQueryMsg, SyncReplyMsg, AckMsg, GeoMsg, AdvMsg,
                             DirReqMsg, DirMsg>;

std::string encode(const Message& m);
/// Throws CodecError on malformed input or an unknown version/type.
Message decode(std::string_view bytes);

/// Trace kind for a transmission of `m`.
std::string_view kind_name(const Message& m);
/// Short key=value summary for the trace (ids of carried items, etc).
std::string summary(const Message& m);

// Payloads carried inside a routed envelope.
struct PublishMsg {
  ads::InfoItem item;
  MarketId market;
  friend bool operator==(const PublishMsg&, const PublishMsg&) = default;
};

std::string encode_asrq(const ads::Asrq& q);
ads::Asrq decode_asrq(std::string_view bytes);
std::string encode_chunk(const ads::ResultChunk& c);
ads::ResultChunk decode_chunk(std::string_view bytes);
std::string encode_publish(const PublishMsg& p);
PublishMsg decode_publish(std::string_view bytes);

}  // namespace adsim::wire

namespace adsim::sim {
class Kernel;
}

namespace adsim::wire {

/// Encodes `m` and hands it to the kernel radio; the trace line carries the
/// message's kind and summary. Returns whether it will be delivered; a peer
/// that has moved out of range gets nothing.
bool transmit(sim::Kernel& kernel, NodeId from, NodeId to, const Message& m);

}  // namespace adsim::wire
