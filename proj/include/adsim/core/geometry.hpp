#pragma once

#include <cmath>

namespace adsim {

struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

inline double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Circular area; membership is euclidean distance <= radius.
struct Region {
  Position center;
  double radius = 1.0;

  bool contains(Position p) const { return distance(p, center) <= radius; }

  friend bool operator==(const Region&, const Region&) = default;
};

}  // namespace adsim
