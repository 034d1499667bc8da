#include "ivuscal/tracking.hpp"

#include <string>

#include "ivuscal/errors.hpp"

namespace ivuscal {

std::unordered_map<int, RigidTransform> pose_index(const std::vector<TimedPose>& poses) {
  std::unordered_map<int, RigidTransform> map;
  map.reserve(poses.size());
  for (const auto& tp : poses) {
    if (!map.emplace(tp.frame, tp.pose).second) {
      throw DuplicateId("duplicate pose for frame " + std::to_string(tp.frame));
    }
  }
  return map;
}

}  // namespace ivuscal
