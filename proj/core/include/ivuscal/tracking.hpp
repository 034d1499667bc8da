#pragma once

#include <unordered_map>
#include <vector>

#include "ivuscal/geometry.hpp"

namespace ivuscal {

/// A needle-tip pixel position tied to a frame and (through it) a sensor pose.
struct LandmarkObservation {
  int frame = 0;
  int landmark_id = 0;
  double u_px = 0.0;
  double v_px = 0.0;
};

/// Sensor pose for one frame: T_sensor, mapping sensor coordinates to world.
struct TimedPose {
  int frame = 0;
  RigidTransform pose;
};

/// Frame-indexed lookup over a pose list.
std::unordered_map<int, RigidTransform> pose_index(const std::vector<TimedPose>& poses);

}  // namespace ivuscal
