#include "ivuscal/recon.hpp"

#include <cmath>
#include <limits>

namespace ivuscal {

std::string to_string(Compounding mode) {
  switch (mode) {
    case Compounding::mean: return "mean";
    case Compounding::max: return "max";
    case Compounding::latest: return "latest";
  }
  return "mean";
}

Compounding compounding_from_string(const std::string& name) {
  if (name == "mean") return Compounding::mean;
  if (name == "max") return Compounding::max;
  if (name == "latest") return Compounding::latest;
  throw InvalidSpec("unknown compounding mode: " + name);
}

VolumePlan plan_volume(const std::vector<FrameImage>& frames, const Homogeneous4& calib,
                       double spacing_mm, double padding_mm) {
  if (frames.empty()) throw EmptyInput("plan_volume: no frames");
  if (!(spacing_mm > 0.0)) throw InvalidSpec("spacing must be > 0");
  if (padding_mm < 0.0) throw InvalidSpec("padding must be >= 0");

  Point3 lo = Point3::Constant(std::numeric_limits<double>::infinity());
  Point3 hi = Point3::Constant(-std::numeric_limits<double>::infinity());
  for (const auto& frame : frames) {
    const Homogeneous4 to_world = compose(Homogeneous4::from_rigid(frame.pose), calib);
    const double w = static_cast<double>(frame.width);
    const double h = static_cast<double>(frame.height);
    const Point3 corners[4] = {
        apply(to_world, Point3(0.0, 0.0, 0.0)), apply(to_world, Point3(w, 0.0, 0.0)),
        apply(to_world, Point3(0.0, h, 0.0)), apply(to_world, Point3(w, h, 0.0))};
    for (const auto& c : corners) {
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
    }
  }
  lo -= Point3::Constant(padding_mm);
  hi += Point3::Constant(padding_mm);

  VolumePlan plan;
  plan.spacing_mm = spacing_mm;
  for (int axis = 0; axis < 3; ++axis) {
    plan.dims[static_cast<std::size_t>(axis)] =
        std::max(1, static_cast<int>(std::ceil((hi(axis) - lo(axis)) / spacing_mm)));
  }
  plan.origin_mm = lo + Point3::Constant(0.5 * spacing_mm);
  return plan;
}

PasteResult paste_frames(const std::vector<FrameImage>& frames, const Homogeneous4& calib,
                         const VolumePlan& plan, Compounding mode) {
  if (!(plan.spacing_mm > 0.0)) throw InvalidSpec("plan has non-positive spacing");

  PasteResult result;
  VoxelVolume& vol = result.volume;
  vol.dims = plan.dims;
  vol.spacing_mm = plan.spacing_mm;
  vol.origin_mm = plan.origin_mm;
  vol.compounding = mode;
  vol.data.assign(vol.voxel_count(), 0.0);
  vol.weight.assign(vol.voxel_count(), 0.0);

  const Point3 box_min = plan.box_min_mm();
  const double inv_spacing = 1.0 / plan.spacing_mm;

  for (const auto& frame : frames) {
    const Homogeneous4 to_world = compose(Homogeneous4::from_rigid(frame.pose), calib);
    const Eigen::Matrix3d lin = to_world.linear();
    const Point3 col_u = lin.col(0);
    const Point3 col_v = lin.col(1);
    const Point3 base = to_world.translation() - box_min;

    for (int v = 0; v < frame.height; ++v) {
      const Point3 row_base = base + col_v * static_cast<double>(v);
      for (int u = 0; u < frame.width; ++u) {
        const double intensity = static_cast<double>(frame.at(u, v));
        const Point3 p = row_base + col_u * static_cast<double>(u);
        const int ix = static_cast<int>(std::floor(p.x() * inv_spacing));
        const int iy = static_cast<int>(std::floor(p.y() * inv_spacing));
        const int iz = static_cast<int>(std::floor(p.z() * inv_spacing));
        if (ix < 0 || iy < 0 || iz < 0 || ix >= vol.dims[0] || iy >= vol.dims[1] ||
            iz >= vol.dims[2]) {
          ++result.dropped_pixels;
          result.dropped_intensity += intensity;
          continue;
        }
        const std::size_t idx = vol.index(ix, iy, iz);
        switch (mode) {
          case Compounding::mean:
            vol.data[idx] += intensity;  // divided by weight below
            break;
          case Compounding::max:
            if (vol.weight[idx] == 0.0 || intensity > vol.data[idx]) vol.data[idx] = intensity;
            break;
          case Compounding::latest:
            vol.data[idx] = intensity;
            break;
        }
        vol.weight[idx] += 1.0;
        ++result.pasted_pixels;
        result.pasted_intensity += intensity;
      }
    }
  }

  if (mode == Compounding::mean) {
    for (std::size_t i = 0; i < vol.data.size(); ++i) {
      if (vol.weight[i] > 0.0) vol.data[i] /= vol.weight[i];
    }
  }
  return result;
}

Point3 intensity_centroid(const VoxelVolume& volume) {
  double total = 0.0;
  Point3 weighted = Point3::Zero();
  std::size_t idx = 0;
  for (int z = 0; z < volume.dims[2]; ++z) {
    for (int y = 0; y < volume.dims[1]; ++y) {
      for (int x = 0; x < volume.dims[0]; ++x, ++idx) {
        const double value = volume.data[idx];
        if (value <= 0.0) continue;
        total += value;
        weighted += value * (volume.origin_mm +
                             volume.spacing_mm * Point3(static_cast<double>(x),
                                                        static_cast<double>(y),
                                                        static_cast<double>(z)));
      }
    }
  }
  if (total <= 0.0) throw EmptyInput("intensity_centroid: volume has no intensity");
  return weighted / total;
}

}  // namespace ivuscal
