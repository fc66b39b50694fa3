#pragma once

#include <deque>

#include "adsim/core/geometry.hpp"

namespace adsim::sim {

struct Waypoint {
  Position target;
  double dwell = 0.0;  // seconds spent at target before popping it
};

struct MobilityState {
  Position current;
  std::deque<Waypoint> waypoints;
  double speed = 0.0;  // m/s

  bool dwelling = false;
  double dwell_left = 0.0;
  double odometer = 0.0;  // total distance travelled
};

/// Moves `state` for `dt` seconds toward its head waypoint, consuming dwell
/// time on arrival and popping finished waypoints. Leftover time after an
/// arrival carries into the dwell and the next segment.
void advance(MobilityState& state, double dt);

}  // namespace adsim::sim
