#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "flysafe/core_model.hpp"

namespace flysafe {

/// Rectangular survey area in the horizontal plane.
struct AreaBounds {
  double x_min = 0.0;
  double x_max = 1500.0;
  double y_min = 0.0;
  double y_max = 1500.0;

  bool contains(const Location3D& p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
};

/// 2D random walk at fixed altitude with reflective area boundaries.
struct MobilityState {
  Location3D pos;
  double heading = 0.0;  // radians
  double speed = 20.0;   // m/s
  AreaBounds bounds;
  double altitude = 91.44;
};

struct Advance {
  Location3D pos;
  double heading = 0.0;  // after any reflections
};

/// Moves `path_len` meters from `from` along `heading`, reflecting off the
/// bounds (angle of incidence equals angle of reflection). z is untouched.
Advance advance(const Location3D& from, double heading, double path_len, const AreaBounds& bounds);

/// Resamples the heading uniformly in [0, 2π) then flies speed·dt. Throws on dt <= 0.
MobilityState step(const MobilityState& state, double dt, std::mt19937_64& rng);

struct Waypoint {
  std::int64_t slot = 0;
  Location3D loc;
};

/// Exact lookup of the waypoint recorded for `slot`; throws std::out_of_range otherwise.
Location3D position_at(std::span<const Waypoint> trajectory, std::int64_t slot);

}  // namespace flysafe
