#include "adsim/support/support_node.hpp"

#include <type_traits>

#include "adsim/market/market.hpp"

namespace adsim::support {

SupportNode::SupportNode(NodeId self, sim::Kernel& kernel, SupportParams params)
    : self_(self), kernel_(kernel), params_(params) {}

std::vector<market::MarketDescriptor> SupportNode::lookup_markets() const {
  std::vector<market::MarketDescriptor> out;
  out.reserve(directory_.size());
  for (const auto& [mid, d] : directory_) out.push_back(d);
  return out;
}

bool SupportNode::learn(const market::MarketDescriptor& d, NodeId from) {
  if (!market::merge_descriptor(directory_, d)) return false;
  kernel_.trace().record(kernel_.now(), self_, "SUP_DIR",
                         sim::Fields().add("market", d.market_id).add("adv", d.advertised_at).add("from", from));
  return true;
}

const std::set<ads::ItemId>& SupportNode::absorbed(MarketId m) const {
  static const std::set<ads::ItemId> none;
  auto it = watch_.find(m);
  return it == watch_.end() ? none : it->second.absorbed;
}

std::size_t SupportNode::observe(market::Market& m) {
  Watch& w = watch_[m.id()];
  const std::size_t members = m.members().size();
  if (members < params_.density_threshold) {
    w.ticks_above = 0;
    std::size_t taken = 0;
    for (const auto& [iid, cat] : m.pool()) {
      if (store_.contains(iid)) continue;
      std::optional<ads::InfoItem> copy = m.copy_of(iid);
      if (!copy) continue;
      store_.put(*copy);
      w.absorbed.insert(iid);
      ++taken;
    }
    if (taken > 0) {
      kernel_.trace().record(kernel_.now(), self_, "SUP_ABSORB",
                             sim::Fields()
                                 .add("market", m.id())
                                 .add("items", taken)
                                 .add("members", members)
                                 .add("pool", m.pool().size()));
    }
    return taken;
  }
  ++w.ticks_above;
  if (w.ticks_above >= params_.recovery_ticks && !w.absorbed.empty()) {
    std::vector<ads::InfoItem> items;
    for (const ads::ItemId& iid : w.absorbed) {
      if (const ads::InfoItem* item = store_.find_visible(iid)) items.push_back(*item);
    }
    const std::size_t held = m.reseed(items);
    kernel_.trace().record(kernel_.now(), self_, "SUP_RESEED",
                           sim::Fields()
                               .add("market", m.id())
                               .add("items", items.size())
                               .add("held", held)
                               .add("members", members));
    w.absorbed.clear();
  }
  return 0;
}

void SupportNode::receive(NodeId from, const wire::Message& msg) {
  if (const auto* adv = std::get_if<wire::AdvMsg>(&msg)) {
    for (const auto& d : adv->descriptors) learn(d, from);
  } else if (const auto* dir = std::get_if<wire::DirMsg>(&msg)) {
    for (const auto& d : dir->descriptors) learn(d, from);
  } else if (std::holds_alternative<wire::DirReqMsg>(msg)) {
    if (!directory_.empty()) wire::transmit(kernel_, self_, from, wire::DirMsg{lookup_markets()});
  }
}

}  // namespace adsim::support
