#pragma once

// Shared fixtures and independent oracles for the test suites. Everything
// here must stay independent of the implementation paths it checks.

#include <vector>

#include "ivuscal/calibration.hpp"
#include "ivuscal/phantom.hpp"
#include "ivuscal/rng.hpp"
#include "ivuscal/sim.hpp"

namespace testsup {

using namespace ivuscal;

// Noiseless acquisition used by the recovery and gradient suites: 147 sweep
// poses plus the three cluster-aligned poses, slab thin enough that only
// exactly-aligned poses contribute.
inline AcquisitionSpec recovery_acquisition(std::uint64_t seed) {
  AcquisitionSpec spec;
  spec.pose_count = 147;
  spec.sweep_deg = 360.0;
  spec.extra_azimuths_deg = {60.0, 90.0, 120.0};
  spec.slab_half_thickness_mm = 1e-4;
  spec.depth_mm = 90.0;
  spec.seed = seed;
  return spec;
}

inline CalibrationProblem problem_from(const PhantomModel& phantom, const TrackedSequence& seq) {
  return CalibrationProblem::assemble(phantom, seq.observations, seq.poses);
}

// Solver settings for ground-truth recovery: epsilon at the 1e-3 mm RMSE
// target, plateau stop disabled so plain Adam runs to the threshold.
inline OptimizerConfig recovery_config() {
  OptimizerConfig config;
  config.epsilon_mm2 = 1e-6;
  config.max_iters = 2000000;
  config.plateau_rel_tol = 0.0;
  return config;
}

// Central finite differences of the fixed-registration error. Step sizes:
// 1e-6 rad for angles, 1e-4 mm for translations, 1e-6 for scale.
inline Eigen::Matrix<double, 7, 1> fd_gradient(const CalibrationProblem& problem,
                                               const CalibrationParams& params,
                                               const RigidTransform& registration) {
  const auto eval = [&](const CalibrationParams& p) {
    return registered_error_fixed(problem, p, registration);
  };
  const auto bump = [&](int component, double step) {
    CalibrationParams lo = params, hi = params;
    double* fields_lo[7] = {&lo.roll_rad, &lo.pitch_rad, &lo.yaw_rad, &lo.tx_mm,
                            &lo.ty_mm,    &lo.tz_mm,     &lo.scale_mm_per_px};
    double* fields_hi[7] = {&hi.roll_rad, &hi.pitch_rad, &hi.yaw_rad, &hi.tx_mm,
                            &hi.ty_mm,    &hi.tz_mm,     &hi.scale_mm_per_px};
    *fields_lo[component] -= step;
    *fields_hi[component] += step;
    return (eval(hi) - eval(lo)) / (2.0 * step);
  };

  Eigen::Matrix<double, 7, 1> grad;
  for (int i = 0; i < 3; ++i) grad(i) = bump(i, 1e-6);
  for (int i = 3; i < 6; ++i) grad(i) = bump(i, 1e-4);
  grad(6) = bump(6, 1e-6);
  return grad;
}

inline std::vector<Point3> random_points(Rng& rng, int count, double extent_mm = 100.0) {
  std::vector<Point3> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    pts.emplace_back(rng.uniform(-extent_mm, extent_mm), rng.uniform(-extent_mm, extent_mm),
                     rng.uniform(-extent_mm, extent_mm));
  }
  return pts;
}

inline RigidTransform random_rigid(Rng& rng, double translation_extent_mm = 100.0) {
  RigidTransform t;
  t.rotation = rng.rotation();
  t.translation = Eigen::Vector3d(rng.uniform(-translation_extent_mm, translation_extent_mm),
                                  rng.uniform(-translation_extent_mm, translation_extent_mm),
                                  rng.uniform(-translation_extent_mm, translation_extent_mm));
  return t;
}

}  // namespace testsup
