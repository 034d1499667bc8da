#pragma once

#include <cstdint>
#include <vector>

#include "ivuscal/geometry.hpp"

namespace ivuscal {

/// 8-bit grayscale frame with the sensor pose it was captured under.
/// Pixels are stored row-major, u rightward, v downward, origin top-left.
struct FrameImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
  RigidTransform pose;

  std::uint8_t at(int u, int v) const { return pixels[static_cast<std::size_t>(v) * width + u]; }
  std::uint8_t& at(int u, int v) { return pixels[static_cast<std::size_t>(v) * width + u]; }
};

}  // namespace ivuscal
