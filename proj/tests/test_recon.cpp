#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "ivuscal/recon.hpp"
#include "ivuscal/sim.hpp"
#include "support.hpp"

using namespace ivuscal;

namespace {

FrameImage flat_frame(int width, int height, std::uint8_t value,
                      const RigidTransform& pose = RigidTransform{}) {
  FrameImage frame;
  frame.width = width;
  frame.height = height;
  frame.pixels.assign(static_cast<std::size_t>(width) * height, value);
  frame.pose = pose;
  return frame;
}

}  // namespace

TEST_CASE("plan_volume: single identity frame at unit spacing") {
  const std::vector<FrameImage> frames = {flat_frame(680, 480, 0)};
  const VolumePlan plan = plan_volume(frames, Homogeneous4::identity(), 1.0, 0.0);
  CHECK(plan.dims[0] == 680);
  CHECK(plan.dims[1] == 480);
  CHECK(plan.dims[2] == 1);

  const VolumePlan again =
      plan_volume({frames[0], frames[0]}, Homogeneous4::identity(), 1.0, 0.0);
  CHECK(again.dims == plan.dims);
  CHECK((again.origin_mm - plan.origin_mm).norm() == 0.0);

  const VolumePlan fine = plan_volume(frames, Homogeneous4::identity(), 0.25, 0.0);
  CHECK(fine.dims[0] == 4 * plan.dims[0]);
  CHECK(fine.dims[1] == 4 * plan.dims[1]);
}

TEST_CASE("plan_volume rejects empty input and bad spacing") {
  CHECK_THROWS_AS(plan_volume({}, Homogeneous4::identity(), 1.0, 0.0), EmptyInput);
  const std::vector<FrameImage> frames = {flat_frame(4, 4, 0)};
  CHECK_THROWS_AS(plan_volume(frames, Homogeneous4::identity(), 0.0, 0.0), InvalidSpec);
}

TEST_CASE("paste_frames: identity mapping reproduces pixels with weight 1") {
  FrameImage frame = flat_frame(8, 4, 0);
  for (int v = 0; v < 4; ++v) {
    for (int u = 0; u < 8; ++u) frame.at(u, v) = static_cast<std::uint8_t>(10 * v + u);
  }
  const VolumePlan plan = plan_volume({frame}, Homogeneous4::identity(), 1.0, 0.0);
  const PasteResult result = paste_frames({frame}, Homogeneous4::identity(), plan);

  CHECK(result.dropped_pixels == 0);
  for (int v = 0; v < 4; ++v) {
    for (int u = 0; u < 8; ++u) {
      const std::size_t idx = result.volume.index(u, v, 0);
      CHECK(result.volume.data[idx] == static_cast<double>(frame.at(u, v)));
      CHECK(result.volume.weight[idx] == 1.0);
    }
  }
}

TEST_CASE("paste_frames: compounding semantics on coincident frames") {
  const FrameImage first = flat_frame(4, 4, 100);
  const FrameImage second = flat_frame(4, 4, 200);
  const std::vector<FrameImage> frames = {first, second};
  const VolumePlan plan = plan_volume(frames, Homogeneous4::identity(), 1.0, 0.0);

  const PasteResult mean = paste_frames(frames, Homogeneous4::identity(), plan, Compounding::mean);
  const PasteResult mx = paste_frames(frames, Homogeneous4::identity(), plan, Compounding::max);
  const PasteResult latest =
      paste_frames(frames, Homogeneous4::identity(), plan, Compounding::latest);

  const std::size_t idx = mean.volume.index(1, 2, 0);
  CHECK(mean.volume.data[idx] == 150.0);
  CHECK(mx.volume.data[idx] == 200.0);
  CHECK(latest.volume.data[idx] == 200.0);
  CHECK(mean.volume.weight[idx] == 2.0);
}

TEST_CASE("paste_frames: mean-mode conservation is exact, drops accounted") {
  Rng rng(55);
  FrameImage inside = flat_frame(16, 16, 0);
  FrameImage outside = flat_frame(16, 16, 0);
  std::int64_t total = 0;
  for (auto& px : inside.pixels) {
    px = static_cast<std::uint8_t>(rng.uniform(0, 256));
    total += px;
  }
  for (auto& px : outside.pixels) {
    px = static_cast<std::uint8_t>(rng.uniform(0, 256));
    total += px;
  }
  outside.pose.translation = Eigen::Vector3d(8.0, 0.0, 0.0);  // half off the grid

  // Plan covers only the first frame; half of the second drops.
  const VolumePlan plan = plan_volume({inside}, Homogeneous4::identity(), 1.0, 0.0);
  const PasteResult result =
      paste_frames({inside, outside}, Homogeneous4::identity(), plan, Compounding::mean);

  CHECK(result.dropped_pixels == 8 * 16);
  CHECK(result.pasted_pixels + result.dropped_pixels == 2 * 16 * 16);

  double weighted = 0.0;
  for (std::size_t i = 0; i < result.volume.data.size(); ++i) {
    weighted += result.volume.data[i] * result.volume.weight[i];
  }
  CHECK(std::llround(weighted) == std::llround(result.pasted_intensity));
  CHECK(std::llround(result.pasted_intensity + result.dropped_intensity) == total);
}

TEST_CASE("paste_frames: larger padding never drops more pixels") {
  Rng rng(56);
  std::vector<FrameImage> frames;
  for (int i = 0; i < 3; ++i) {
    frames.push_back(flat_frame(12, 10, 50, testsup::random_rigid(rng, 10.0)));
  }

  // Plans grown from a one-frame box so some pixels genuinely drop.
  std::int64_t previous = std::numeric_limits<std::int64_t>::max();
  for (const double padding : {0.0, 2.0, 5.0, 20.0}) {
    const VolumePlan plan =
        plan_volume({frames[0]}, Homogeneous4::identity(), 1.0, padding);
    const PasteResult result = paste_frames(frames, Homogeneous4::identity(), plan);
    CHECK(result.dropped_pixels <= previous);
    previous = result.dropped_pixels;
  }
}

TEST_CASE("paste_frames: quarter-turn pose gauge permutes voxels exactly") {
  // Dyadic geometry keeps the arithmetic exact under the rotation, and padding
  // of 2.25 voxels keeps every pixel strictly inside its voxel so the floor
  // convention is unambiguous on both grids.
  FrameImage frame = flat_frame(8, 6, 0);
  Rng rng(57);
  for (auto& px : frame.pixels) px = static_cast<std::uint8_t>(rng.uniform(0, 256));
  frame.pose.translation = Eigen::Vector3d(0.125, 0.125, 0.0);

  const double spacing = 0.5;
  const VolumePlan plan = plan_volume({frame}, Homogeneous4::identity(), spacing, 1.125);
  const PasteResult base = paste_frames({frame}, Homogeneous4::identity(), plan);

  RigidTransform gauge;  // z quarter turn: (x, y, z) -> (-y, x, z)
  gauge.rotation << 0, -1, 0, 1, 0, 0, 0, 0, 1;

  FrameImage rotated = frame;
  rotated.pose = gauge * frame.pose;

  VolumePlan rotated_plan;
  rotated_plan.spacing_mm = spacing;
  rotated_plan.dims = {plan.dims[1], plan.dims[0], plan.dims[2]};
  const Point3 box_min = plan.box_min_mm();
  const Point3 box_max_y = box_min + Point3(0, plan.dims[1] * spacing, 0);
  rotated_plan.origin_mm =
      Point3(-box_max_y.y(), box_min.x(), box_min.z()) + Point3::Constant(0.5 * spacing);

  const PasteResult turned = paste_frames({rotated}, Homogeneous4::identity(), rotated_plan);
  CHECK(turned.dropped_pixels == base.dropped_pixels);

  for (int z = 0; z < plan.dims[2]; ++z) {
    for (int y = 0; y < plan.dims[1]; ++y) {
      for (int x = 0; x < plan.dims[0]; ++x) {
        const std::size_t from = base.volume.index(x, y, z);
        const std::size_t to = turned.volume.index(plan.dims[1] - 1 - y, x, z);
        CHECK(base.volume.data[from] == turned.volume.data[to]);
        CHECK(base.volume.weight[from] == turned.volume.weight[to]);
      }
    }
  }
}

TEST_CASE("rotational sweep centroid lands on the landmark") {
  // Single-needle phantom watched over a short rotational sweep; frames are
  // rendered and pasted at 0.25 mm, and the bright centroid must match the
  // landmark's true world position within one voxel.
  PhantomSpec spec;
  spec.cluster_angles_deg = {60.0};
  spec.needles_per_cluster = 1;
  spec.needle_lengths_mm = {50.0};
  spec.cavity_radius_mm = 65.0;
  spec.axial_offsets_mm = {0.0};
  const PhantomModel phantom = build_phantom(spec);

  CalibrationParams gt;
  gt.roll_rad = 0.02;
  gt.pitch_rad = -0.03;
  gt.yaw_rad = 0.05;
  gt.tx_mm = 1.0;
  gt.ty_mm = -2.0;
  gt.tz_mm = 0.5;
  gt.scale_mm_per_px = 0.3;

  AcquisitionSpec acq;
  acq.pose_count = 9;
  acq.start_azimuth_deg = 52.0;
  acq.sweep_deg = 18.0;  // 52..68 in 2 degree steps, hits 60 exactly
  acq.image_width_px = 120;
  acq.seed = 21;
  acq.world_from_phantom = RigidTransform{};  // phantom frame == world frame
  const TrackedSequence seq = simulate_acquisition(phantom, gt, acq);

  std::vector<FrameImage> frames;
  for (const auto& tp : seq.true_poses) {
    frames.push_back(render_frame(phantom, gt, tp.pose, 120, 100, acq.depth_mm,
                                  acq.slab_half_thickness_mm, RigidTransform{}));
  }

  const Homogeneous4 calib = calibration_matrix(gt);
  const VolumePlan plan = plan_volume(frames, calib, 0.25, 2.0);
  const PasteResult result = paste_frames(frames, calib, plan, Compounding::mean);

  const Point3 centroid = intensity_centroid(result.volume);
  CHECK((centroid - phantom.landmarks[0]).norm() <= 0.25);
}

TEST_CASE("intensity_centroid rejects an empty volume") {
  const std::vector<FrameImage> frames = {flat_frame(4, 4, 0)};
  const VolumePlan plan = plan_volume(frames, Homogeneous4::identity(), 1.0, 0.0);
  const PasteResult result = paste_frames(frames, Homogeneous4::identity(), plan);
  CHECK_THROWS_AS(intensity_centroid(result.volume), EmptyInput);
}
