#include "adsim/sim/mobility.hpp"

#include <algorithm>

namespace adsim::sim {

void advance(MobilityState& s, double dt) {
  double remaining = dt;
  while (remaining > 0.0 && !s.waypoints.empty()) {
    const Waypoint& head = s.waypoints.front();
    if (!s.dwelling) {
      if (s.speed <= 0.0) return;
      const double gap = distance(s.current, head.target);
      const double reach = s.speed * remaining;
      if (reach < gap) {
        const double f = reach / gap;
        s.current.x += (head.target.x - s.current.x) * f;
        s.current.y += (head.target.y - s.current.y) * f;
        s.odometer += reach;
        return;
      }
      s.current = head.target;
      s.odometer += gap;
      remaining -= gap / s.speed;
      s.dwelling = true;
      s.dwell_left = head.dwell;
    }
    if (s.dwell_left > remaining) {
      s.dwell_left -= remaining;
      return;
    }
    remaining -= s.dwell_left;
    s.dwell_left = 0.0;
    s.dwelling = false;
    s.waypoints.pop_front();
  }
}

}  // namespace adsim::sim
