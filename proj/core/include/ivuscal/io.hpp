#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ivuscal/calibration.hpp"
#include "ivuscal/image.hpp"
#include "ivuscal/phantom.hpp"
#include "ivuscal/recon.hpp"
#include "ivuscal/tracking.hpp"

namespace ivuscal {

// All text formats are UTF-8 with LF line endings; floats carry 9 significant
// digits, so every save/load pair round-trips value-exactly and a
// save-load-save cycle is byte-identical. CSV loaders reject extra columns.

/// CSV, header `id,x_mm,y_mm,z_mm`. Landmark ids must be unique and
/// contiguous from 0.
void save_phantom(const PhantomModel& phantom, const std::filesystem::path& path);
PhantomModel load_phantom(const std::filesystem::path& path);

/// CSV, header `frame,r00,r01,r02,tx_mm,r10,r11,r12,ty_mm,r20,r21,r22,tz_mm`
/// (row-major 3x4), entries in shortest exact-round-trip form. The loader
/// projects each rotation to the nearest proper orthogonal matrix and throws
/// NonRigidPose when the correction exceeds 1e-3 Frobenius (reflections
/// always do); corrections at floating-point noise level keep the parsed
/// values so a save-load-save cycle is byte-identical.
void save_poses(const std::vector<TimedPose>& poses, const std::filesystem::path& path);
std::vector<TimedPose> load_poses(const std::filesystem::path& path);

/// CSV, header `frame,landmark_id,u_px,v_px`. Duplicate (frame, landmark_id)
/// pairs are rejected.
void save_observations(const std::vector<LandmarkObservation>& observations,
                       const std::filesystem::path& path);
std::vector<LandmarkObservation> load_observations(const std::filesystem::path& path);

/// Versioned key-value text: the 7 parameters with units, the Euler
/// convention tag, the 16-entry row-major matrix, final error, iteration
/// count and convergence flag.
void save_calibration(const CalibrationResult& result, const std::filesystem::path& path);
CalibrationResult load_calibration(const std::filesystem::path& path);

/// Writes `<prefix>.meta` (dims, spacing, origin, compounding, element type)
/// and `<prefix>.raw`, a little-endian float32 payload in x-fastest order.
/// Weights are not serialized.
void save_volume(const VoxelVolume& volume, const std::string& path_prefix);
VoxelVolume load_volume(const std::string& path_prefix);

/// Binary 8-bit PGM (P5), maxval 255. The loaded frame carries an identity
/// pose; poses travel in the pose CSV.
void save_pgm(const FrameImage& frame, const std::filesystem::path& path);
FrameImage load_pgm(const std::filesystem::path& path);

/// Ties one acquisition's files together. Paths are relative to the manifest
/// location; frames_dir may be empty when no frames were written.
struct Manifest {
  int format_version = 1;
  std::string poses_path;
  std::string observations_path;
  std::string frames_dir;
  double depth_mm = 0.0;
  std::string notes;
};

void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Loads and verifies that every referenced file exists; throws IoError
/// otherwise.
Manifest load_manifest(const std::filesystem::path& path);

/// Frame file name for a frame index within a frames directory.
std::string frame_file_name(int frame);

}  // namespace ivuscal
