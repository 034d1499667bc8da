#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ivuscal/calibration.hpp"
#include "ivuscal/image.hpp"
#include "ivuscal/phantom.hpp"
#include "ivuscal/tracking.hpp"

namespace ivuscal {

/// Synthetic acquisition settings. The probe sits on the cavity axis and
/// rotates about it; pose k of the sweep is at azimuth
/// start_azimuth_deg + k * sweep_deg / pose_count, and extra_azimuths_deg are
/// appended as additional poses (e.g. the three cluster angles).
///
/// Image convention: u rightward, v downward, origin top-left, transducer at
/// top-center (u = image_width_px / 2, v = 0). The u axis lies along the
/// cavity axis, the v axis along the radial direction of the current azimuth.
/// A pixel position is in bounds when 0 <= u < image_width_px, v >= 0 and
/// v * scale <= depth_mm.
struct AcquisitionSpec {
  int pose_count = 150;
  double sweep_deg = 360.0;
  double depth_mm = 90.0;
  double pixel_noise_sigma_px = 0.0;
  double pose_translation_noise_sigma_mm = 0.0;
  double pose_rotation_noise_sigma_deg = 0.0;
  double slab_half_thickness_mm = 1.0;  ///< stand-in for elevational beam width
  std::uint64_t seed = 0;
  int image_width_px = 680;
  double start_azimuth_deg = 0.0;
  std::vector<double> extra_azimuths_deg;
  /// World (EM tracker) frame relative to the phantom frame; random per seed
  /// when unset.
  std::optional<RigidTransform> world_from_phantom;
};

/// A tracked acquisition: per-frame sensor poses and the landmark pixels
/// observed in those frames. ground_truth, world_from_phantom and true_poses
/// are simulator provenance (absent on sequences loaded from disk);
/// true_poses are the noise-free poses the observations were synthesized with.
struct TrackedSequence {
  std::vector<TimedPose> poses;
  std::vector<LandmarkObservation> observations;
  std::optional<CalibrationParams> ground_truth;
  std::optional<RigidTransform> world_from_phantom;
  std::vector<TimedPose> true_poses;
};

/// Generates poses over the sweep and, for every phantom landmark whose
/// out-of-plane distance is within the slab and whose pixel position is in
/// bounds, emits an observation. Pixel noise perturbs (u,v); pose noise is
/// applied to the stored poses after observation synthesis, so noise corrupts
/// the data but never informs it. Deterministic given (inputs, seed).
///
/// Throws NoVisibleLandmarks when zero observations are produced.
TrackedSequence simulate_acquisition(const PhantomModel& phantom, const CalibrationParams& gt,
                                     const AcquisitionSpec& spec);

/// Uniform sampling box for ground-truth calibrations.
struct CalibrationRanges {
  double angle_min_rad = -20.0 * M_PI / 180.0;
  double angle_max_rad = 20.0 * M_PI / 180.0;
  double translation_min_mm = -10.0;
  double translation_max_mm = 10.0;
  double scale_min = 0.5;
  double scale_max = 1.5;
};

/// Uniform sample within the given bounds, deterministic per seed.
CalibrationParams random_calibration(const CalibrationRanges& ranges, std::uint64_t seed);

/// Renders the view from `pose`: black frame with a Gaussian blob
/// (sigma 2 px, peak 255) at every visible landmark pixel. Landmark
/// coordinates are taken in the world frame via `world_from_phantom`
/// (identity: phantom frame == world frame).
FrameImage render_frame(const PhantomModel& phantom, const CalibrationParams& gt,
                        const RigidTransform& pose, int width_px = 680, int height_px = 480,
                        double depth_mm = 90.0, double slab_half_thickness_mm = 1.0,
                        const RigidTransform& world_from_phantom = RigidTransform{});

}  // namespace ivuscal
