#include "adsim/ads/query.hpp"

namespace adsim::ads {

std::string to_string(const QueryId& id) { return std::to_string(id.initiator.value) + "/" + std::to_string(id.seq); }

}  // namespace adsim::ads
