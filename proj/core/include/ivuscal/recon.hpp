#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ivuscal/geometry.hpp"
#include "ivuscal/image.hpp"

namespace ivuscal {

enum class Compounding {
  mean,    ///< average of all contributions
  max,     ///< brightest contribution
  latest,  ///< last pasted frame wins (frame order matters)
};

std::string to_string(Compounding mode);
Compounding compounding_from_string(const std::string& name);

/// Axis-aligned scalar voxel grid, isotropic spacing, stored x-fastest then y
/// then z. `origin_mm` is the world position of the center of voxel (0,0,0);
/// `weight` counts contributions per voxel.
struct VoxelVolume {
  std::array<int, 3> dims{0, 0, 0};
  double spacing_mm = 0.0;
  Point3 origin_mm = Point3::Zero();
  Compounding compounding = Compounding::mean;
  std::vector<double> data;
  std::vector<double> weight;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
  }
  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * dims[1] + static_cast<std::size_t>(y)) * dims[0] + x;
  }
};

/// Grid placement computed by plan_volume.
struct VolumePlan {
  std::array<int, 3> dims{0, 0, 0};
  Point3 origin_mm = Point3::Zero();  ///< center of voxel (0,0,0)
  double spacing_mm = 0.0;

  /// Lower corner of voxel (0,0,0), origin - spacing/2 per axis.
  Point3 box_min_mm() const {
    return origin_mm - Point3::Constant(0.5 * spacing_mm);
  }
};

/// Fits an axis-aligned world-space box around every frame's pixel rectangle
/// mapped through T_sensor * C, expands it by `padding_mm`, and sizes the grid
/// as ceil(extent / spacing) per axis (at least 1).
///
/// Throws EmptyInput with no frames, InvalidSpec for spacing <= 0.
VolumePlan plan_volume(const std::vector<FrameImage>& frames, const Homogeneous4& calib,
                       double spacing_mm, double padding_mm);

struct PasteResult {
  VoxelVolume volume;
  std::int64_t pasted_pixels = 0;
  std::int64_t dropped_pixels = 0;
  double pasted_intensity = 0.0;   ///< sum of intensities that landed in the grid
  double dropped_intensity = 0.0;  ///< sum of intensities that fell outside
};

/// Pastes every pixel into its containing voxel: world = T_sensor * C * (u,v,0,1),
/// voxel = floor((world - box_min) / spacing). Out-of-grid pixels are dropped
/// and counted, never fatal. Frames are pasted sequentially in list order
/// (latest mode depends on it); results are deterministic in every mode, with
/// mean computed as exact sum then divide.
PasteResult paste_frames(const std::vector<FrameImage>& frames, const Homogeneous4& calib,
                         const VolumePlan& plan, Compounding mode = Compounding::mean);

/// Intensity-weighted centroid of the volume in world coordinates (mm).
/// Throws EmptyInput when total intensity is zero.
Point3 intensity_centroid(const VoxelVolume& volume);

}  // namespace ivuscal
