#include "flysafe/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace flysafe {

Advance advance(const Location3D& from, double heading, double path_len,
                const AreaBounds& bounds) {
  double dx = std::cos(heading);
  double dy = std::sin(heading);
  double x = std::clamp(from.x, bounds.x_min, bounds.x_max);
  double y = std::clamp(from.y, bounds.y_min, bounds.y_max);
  double remaining = path_len;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Each pass either finishes the path or lands on a wall and flips one
  // velocity component. Bounded because every leg but the last spans a wall gap.
  while (remaining > 0.0) {
    const double tx = dx > 0.0 ? (bounds.x_max - x) / dx : dx < 0.0 ? (bounds.x_min - x) / dx : kInf;
    const double ty = dy > 0.0 ? (bounds.y_max - y) / dy : dy < 0.0 ? (bounds.y_min - y) / dy : kInf;
    const double t_hit = std::min(tx, ty);
    if (t_hit >= remaining) {
      x += dx * remaining;
      y += dy * remaining;
      break;
    }
    x += dx * t_hit;
    y += dy * t_hit;
    remaining -= t_hit;
    if (tx <= ty) {
      x = dx > 0.0 ? bounds.x_max : bounds.x_min;
      dx = -dx;
    }
    if (ty <= tx) {
      y = dy > 0.0 ? bounds.y_max : bounds.y_min;
      dy = -dy;
    }
  }
  x = std::clamp(x, bounds.x_min, bounds.x_max);
  y = std::clamp(y, bounds.y_min, bounds.y_max);
  return {Location3D{x, y, from.z}, std::atan2(dy, dx)};
}

MobilityState step(const MobilityState& state, double dt, std::mt19937_64& rng) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("mobility step requires dt > 0, got " + std::to_string(dt));
  }
  std::uniform_real_distribution<double> heading_dist(0.0, 2.0 * std::numbers::pi);
  MobilityState next = state;
  next.heading = heading_dist(rng);
  Location3D start = state.pos;
  start.z = state.altitude;
  next.pos = advance(start, next.heading, state.speed * dt, state.bounds).pos;
  return next;
}

Location3D position_at(std::span<const Waypoint> trajectory, std::int64_t slot) {
  auto it = std::lower_bound(trajectory.begin(), trajectory.end(), slot,
                             [](const Waypoint& w, std::int64_t s) { return w.slot < s; });
  if (it == trajectory.end() || it->slot != slot) {
    throw std::out_of_range("no waypoint recorded for slot " + std::to_string(slot));
  }
  return it->loc;
}

}  // namespace flysafe
