#include "ivuscal/sim.hpp"

#include <cmath>

#include "ivuscal/rng.hpp"

namespace ivuscal {

namespace {

// Image-plane-to-phantom map for a probe azimuth: u runs along the cavity
// axis (z), v along the radial direction, with the transducer at the axis
// (u = u0, v = 0). The linear block is scale times a proper rotation.
Homogeneous4 image_to_phantom(double azimuth_rad, double scale, double u0_px) {
  const double c = std::cos(azimuth_rad), s = std::sin(azimuth_rad);
  Eigen::Matrix3d basis;
  basis.col(0) = Eigen::Vector3d(0.0, 0.0, 1.0);  // u: along the axis
  basis.col(1) = Eigen::Vector3d(c, s, 0.0);      // v: radially outward
  basis.col(2) = Eigen::Vector3d(-s, c, 0.0);     // out-of-plane normal
  Homogeneous4 out;
  out.m.topLeftCorner<3, 3>() = scale * basis;
  out.m.topRightCorner<3, 1>() = Eigen::Vector3d(0.0, 0.0, -scale * u0_px);
  return out;
}

void validate_spec(const AcquisitionSpec& spec) {
  if (spec.pose_count < 1) throw InvalidSpec("pose_count must be >= 1");
  if (spec.pixel_noise_sigma_px < 0.0 || spec.pose_translation_noise_sigma_mm < 0.0 ||
      spec.pose_rotation_noise_sigma_deg < 0.0) {
    throw InvalidSpec("noise sigmas must be >= 0");
  }
  if (!(spec.slab_half_thickness_mm > 0.0)) throw InvalidSpec("slab_half_thickness must be > 0");
  if (spec.image_width_px < 1) throw InvalidSpec("image width must be >= 1");
  if (!(spec.depth_mm > 0.0)) throw InvalidSpec("depth must be > 0");
}

bool pixel_in_bounds(double u, double v, int width_px, double scale, double depth_mm) {
  return u >= 0.0 && u < static_cast<double>(width_px) && v >= 0.0 && v * scale <= depth_mm;
}

}  // namespace

TrackedSequence simulate_acquisition(const PhantomModel& phantom, const CalibrationParams& gt,
                                     const AcquisitionSpec& spec) {
  gt.validate();
  validate_spec(spec);
  if (phantom.landmarks.empty()) throw InvalidSpec("phantom has no landmarks");

  Rng rng(spec.seed);

  RigidTransform world_from_phantom;
  if (spec.world_from_phantom) {
    world_from_phantom = *spec.world_from_phantom;
  } else {
    world_from_phantom.rotation = rng.rotation();
    world_from_phantom.translation = Eigen::Vector3d(
        rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0));
  }

  std::vector<double> azimuths_deg;
  azimuths_deg.reserve(static_cast<std::size_t>(spec.pose_count) + spec.extra_azimuths_deg.size());
  for (int k = 0; k < spec.pose_count; ++k) {
    azimuths_deg.push_back(spec.start_azimuth_deg +
                           spec.sweep_deg * static_cast<double>(k) /
                               static_cast<double>(spec.pose_count));
  }
  for (const double az : spec.extra_azimuths_deg) azimuths_deg.push_back(az);

  const Homogeneous4 calib = calibration_matrix(gt);
  const Homogeneous4 calib_inv = inverse(calib);
  const Homogeneous4 world_h = Homogeneous4::from_rigid(world_from_phantom);
  const double scale = gt.scale_mm_per_px;
  const double u0 = static_cast<double>(spec.image_width_px) / 2.0;

  TrackedSequence seq;
  seq.ground_truth = gt;
  seq.world_from_phantom = world_from_phantom;

  for (std::size_t f = 0; f < azimuths_deg.size(); ++f) {
    const double az_rad = azimuths_deg[f] * M_PI / 180.0;
    const Homogeneous4 plane = image_to_phantom(az_rad, scale, u0);
    const Homogeneous4 sensor_h = compose(compose(world_h, plane), calib_inv);

    RigidTransform sensor;
    sensor.rotation = sensor_h.linear();
    sensor.translation = sensor_h.translation();
    seq.true_poses.push_back({static_cast<int>(f), sensor});

    const Homogeneous4 plane_inv = inverse(plane);
    for (int id = 0; id < phantom.landmark_count(); ++id) {
      const Point3 g = apply(plane_inv, phantom.landmarks[static_cast<std::size_t>(id)]);
      const double out_of_plane_mm = std::abs(g.z()) * scale;
      if (out_of_plane_mm > spec.slab_half_thickness_mm) continue;
      if (!pixel_in_bounds(g.x(), g.y(), spec.image_width_px, scale, spec.depth_mm)) continue;

      LandmarkObservation obs;
      obs.frame = static_cast<int>(f);
      obs.landmark_id = id;
      obs.u_px = g.x();
      obs.v_px = g.y();
      if (spec.pixel_noise_sigma_px > 0.0) {
        obs.u_px += rng.normal(spec.pixel_noise_sigma_px);
        obs.v_px += rng.normal(spec.pixel_noise_sigma_px);
      }
      seq.observations.push_back(obs);
    }
  }

  if (seq.observations.empty()) {
    throw NoVisibleLandmarks("acquisition produced zero observations");
  }

  // Pose noise corrupts the stored poses only; observations above were
  // synthesized from the noise-free geometry.
  seq.poses = seq.true_poses;
  if (spec.pose_translation_noise_sigma_mm > 0.0 || spec.pose_rotation_noise_sigma_deg > 0.0) {
    const double rot_sigma_rad = spec.pose_rotation_noise_sigma_deg * M_PI / 180.0;
    for (auto& tp : seq.poses) {
      RigidTransform noise;
      if (spec.pose_rotation_noise_sigma_deg > 0.0) {
        noise.rotation = rng.rotation_perturbation(rot_sigma_rad);
      }
      if (spec.pose_translation_noise_sigma_mm > 0.0) {
        noise.translation =
            Eigen::Vector3d(rng.normal(spec.pose_translation_noise_sigma_mm),
                            rng.normal(spec.pose_translation_noise_sigma_mm),
                            rng.normal(spec.pose_translation_noise_sigma_mm));
      }
      tp.pose = noise * tp.pose;
    }
  }
  return seq;
}

CalibrationParams random_calibration(const CalibrationRanges& ranges, std::uint64_t seed) {
  if (!(ranges.scale_min > 0.0) || ranges.scale_max < ranges.scale_min ||
      ranges.angle_max_rad < ranges.angle_min_rad ||
      ranges.translation_max_mm < ranges.translation_min_mm) {
    throw InvalidSpec("invalid calibration ranges");
  }
  Rng rng(seed);
  CalibrationParams p;
  p.roll_rad = rng.uniform(ranges.angle_min_rad, ranges.angle_max_rad);
  p.pitch_rad = rng.uniform(ranges.angle_min_rad, ranges.angle_max_rad);
  p.yaw_rad = rng.uniform(ranges.angle_min_rad, ranges.angle_max_rad);
  p.tx_mm = rng.uniform(ranges.translation_min_mm, ranges.translation_max_mm);
  p.ty_mm = rng.uniform(ranges.translation_min_mm, ranges.translation_max_mm);
  p.tz_mm = rng.uniform(ranges.translation_min_mm, ranges.translation_max_mm);
  p.scale_mm_per_px = rng.uniform(ranges.scale_min, ranges.scale_max);
  return p;
}

FrameImage render_frame(const PhantomModel& phantom, const CalibrationParams& gt,
                        const RigidTransform& pose, int width_px, int height_px, double depth_mm,
                        double slab_half_thickness_mm, const RigidTransform& world_from_phantom) {
  gt.validate();
  FrameImage frame;
  frame.width = width_px;
  frame.height = height_px;
  frame.pose = pose;
  frame.pixels.assign(static_cast<std::size_t>(width_px) * static_cast<std::size_t>(height_px), 0);

  const Homogeneous4 image_to_world =
      compose(Homogeneous4::from_rigid(pose), calibration_matrix(gt));
  const Homogeneous4 world_to_image = inverse(image_to_world);
  const double scale = gt.scale_mm_per_px;

  constexpr double kBlobSigmaPx = 2.0;
  constexpr int kBlobRadiusPx = 9;  // ~4.5 sigma

  for (const auto& landmark : phantom.landmarks) {
    const Point3 g = apply(world_to_image, world_from_phantom.apply(landmark));
    if (std::abs(g.z()) * scale > slab_half_thickness_mm) continue;
    const double cu = g.x(), cv = g.y();
    if (!(cu >= 0.0 && cu < width_px && cv >= 0.0 && cv < height_px &&
          cv * scale <= depth_mm)) {
      continue;
    }

    const int u_lo = std::max(0, static_cast<int>(std::floor(cu)) - kBlobRadiusPx);
    const int u_hi = std::min(width_px - 1, static_cast<int>(std::ceil(cu)) + kBlobRadiusPx);
    const int v_lo = std::max(0, static_cast<int>(std::floor(cv)) - kBlobRadiusPx);
    const int v_hi = std::min(height_px - 1, static_cast<int>(std::ceil(cv)) + kBlobRadiusPx);
    for (int v = v_lo; v <= v_hi; ++v) {
      for (int u = u_lo; u <= u_hi; ++u) {
        const double r2 = (u - cu) * (u - cu) + (v - cv) * (v - cv);
        const double value = 255.0 * std::exp(-r2 / (2.0 * kBlobSigmaPx * kBlobSigmaPx));
        const auto quantized = static_cast<std::uint8_t>(std::lround(std::min(value, 255.0)));
        frame.at(u, v) = std::max(frame.at(u, v), quantized);
      }
    }
  }
  return frame;
}

}  // namespace ivuscal
