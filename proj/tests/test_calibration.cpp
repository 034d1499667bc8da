#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ivuscal/calibration.hpp"
#include "ivuscal/sim.hpp"
#include "support.hpp"

using namespace ivuscal;
using testsup::problem_from;

namespace {

CalibrationProblem noiseless_problem(std::uint64_t seed, const CalibrationParams& gt) {
  const PhantomModel phantom = default_phantom();
  const TrackedSequence seq =
      simulate_acquisition(phantom, gt, testsup::recovery_acquisition(seed));
  return problem_from(phantom, seq);
}

}  // namespace

TEST_CASE("calibration_matrix: identity parameters give the identity matrix") {
  CHECK((calibration_matrix(CalibrationParams{}).m - Eigen::Matrix4d::Identity()).norm() == 0.0);
}

TEST_CASE("calibration_matrix: pure translation") {
  CalibrationParams p;
  p.tx_mm = 1.0;
  p.ty_mm = 2.0;
  p.tz_mm = 3.0;
  const Homogeneous4 c = calibration_matrix(p);
  CHECK((c.m - Homogeneous4::translate(1, 2, 3).m).norm() == 0.0);
}

TEST_CASE("calibration_matrix: uniform scale acts on pixels") {
  CalibrationParams p;
  p.scale_mm_per_px = 2.0;
  CHECK((apply(calibration_matrix(p), Point3(3, 4, 0)) - Point3(6, 8, 0)).norm() == 0.0);
}

TEST_CASE("calibration_matrix: scaled block stays orthonormal, bottom row exact") {
  Rng rng(61);
  for (int i = 0; i < 1000; ++i) {
    CalibrationParams p;
    p.roll_rad = rng.uniform(-M_PI, M_PI);
    p.pitch_rad = rng.uniform(-M_PI, M_PI);
    p.yaw_rad = rng.uniform(-M_PI, M_PI);
    p.tx_mm = rng.uniform(-100, 100);
    p.ty_mm = rng.uniform(-100, 100);
    p.tz_mm = rng.uniform(-100, 100);
    p.scale_mm_per_px = rng.uniform(0.05, 10.0);

    const Homogeneous4 c = calibration_matrix(p);
    const Eigen::Matrix3d unscaled = c.linear() / p.scale_mm_per_px;
    CHECK(is_proper_rotation(unscaled, 1e-9));
    CHECK(c.m(3, 0) == 0.0);
    CHECK(c.m(3, 1) == 0.0);
    CHECK(c.m(3, 2) == 0.0);
    CHECK(c.m(3, 3) == 1.0);
  }
}

TEST_CASE("project_landmarks: identity pose and params pass pixels through") {
  CalibrationProblem problem;
  problem.phantom.landmarks = {Point3(0, 0, 0), Point3(1, 1, 1), Point3(2, 2, 2)};
  problem.observations = {{0, 0, 1.0, 2.0}};
  problem.poses[0] = RigidTransform{};

  const auto pairs = project_landmarks(problem, CalibrationParams{});
  REQUIRE(pairs.size() == 1);
  CHECK((pairs[0].first - Point3(1, 2, 0)).norm() == 0.0);
  CHECK((pairs[0].second - Point3(0, 0, 0)).norm() == 0.0);
}

TEST_CASE("project_landmarks: scale then translate, identity pose") {
  CalibrationProblem problem;
  problem.phantom.landmarks = {Point3(0, 0, 0)};
  problem.observations = {{0, 0, 3.0, 5.0}};
  problem.poses[0] = RigidTransform{};

  CalibrationParams p;
  p.scale_mm_per_px = 0.5;
  p.tx_mm = 10.0;
  p.ty_mm = -1.0;
  p.tz_mm = 2.0;
  const auto pairs = project_landmarks(problem, p);
  CHECK((pairs[0].first - Point3(0.5 * 3 + 10, 0.5 * 5 - 1, 2)).norm() < 1e-12);
}

TEST_CASE("project_landmarks: ground truth maps pixels onto the offset phantom") {
  const PhantomModel phantom = default_phantom();
  const CalibrationParams gt = random_calibration(CalibrationRanges{}, 500);
  const TrackedSequence seq =
      simulate_acquisition(phantom, gt, testsup::recovery_acquisition(77));
  const CalibrationProblem problem = problem_from(phantom, seq);

  const RigidTransform& world = seq.world_from_phantom.value();
  for (const auto& [world_pt, phantom_pt] : project_landmarks(problem, gt)) {
    CHECK((world_pt - world.apply(phantom_pt)).norm() <= 1e-9);
  }
}

TEST_CASE("registered_error: exact at ground truth") {
  const CalibrationParams gt = random_calibration(CalibrationRanges{}, 501);
  const CalibrationProblem problem = noiseless_problem(78, gt);
  const RegisteredError re = registered_error(problem, gt);
  CHECK(re.error_mm2 <= 1e-12);
}

TEST_CASE("registered_error_fixed: unit residuals with identity registration") {
  // Two landmarks at the phantom origin observed as (1,0) and (0,1) px under
  // identity pose and params: E = (1 + 1) / 2 = 1 mm^2.
  CalibrationProblem problem;
  problem.phantom.landmarks = {Point3(0, 0, 0), Point3(0, 0, 0)};
  problem.observations = {{0, 0, 1.0, 0.0}, {0, 1, 0.0, 1.0}};
  problem.poses[0] = RigidTransform{};
  CHECK(registered_error_fixed(problem, CalibrationParams{}, RigidTransform{}) == 1.0);
}

TEST_CASE("registered_error: scale perturbation strictly increases the error") {
  const CalibrationParams gt = random_calibration(CalibrationRanges{}, 502);
  const CalibrationProblem problem = noiseless_problem(79, gt);
  CalibrationParams off = gt;
  off.scale_mm_per_px *= 1.1;
  CHECK(registered_error(problem, off).error_mm2 > 1e-3);
}

TEST_CASE("registered_error: icp variant agrees with paired kabsch near truth") {
  // Nearest-neighbor ICP is a local method: keep the world frame close to the
  // phantom frame so the first correspondence pass is sane.
  const PhantomModel phantom = default_phantom();
  const CalibrationParams gt = random_calibration(CalibrationRanges{}, 503);
  AcquisitionSpec spec = testsup::recovery_acquisition(80);
  RigidTransform offset;
  offset.rotation = Eigen::AngleAxisd(0.017, Eigen::Vector3d(0, 0, 1)).toRotationMatrix();
  offset.translation = Eigen::Vector3d(2.0, -1.0, 1.5);
  spec.world_from_phantom = offset;
  const TrackedSequence seq = simulate_acquisition(phantom, gt, spec);
  const CalibrationProblem problem = problem_from(phantom, seq);

  const double paired = registered_error(problem, gt, RegistrationMethod::kabsch_paired).error_mm2;
  const double icp = registered_error(problem, gt, RegistrationMethod::icp_nearest).error_mm2;
  CHECK(paired <= 1e-12);
  CHECK(icp <= 1e-12);
}

TEST_CASE("objective_gradient: vanishes at the ground truth") {
  const CalibrationParams gt = random_calibration(CalibrationRanges{}, 504);
  const CalibrationProblem problem = noiseless_problem(81, gt);
  CHECK(objective_gradient(problem, gt).norm() <= 1e-9);
}

TEST_CASE("objective_gradient matches central finite differences") {
  const CalibrationParams gt = random_calibration(CalibrationRanges{}, 505);
  const CalibrationProblem problem = noiseless_problem(82, gt);

  Rng rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    CalibrationParams p;
    p.roll_rad = rng.uniform(-0.5, 0.5);
    p.pitch_rad = rng.uniform(-0.5, 0.5);
    p.yaw_rad = rng.uniform(-0.5, 0.5);
    p.tx_mm = rng.uniform(-20, 20);
    p.ty_mm = rng.uniform(-20, 20);
    p.tz_mm = rng.uniform(-20, 20);
    p.scale_mm_per_px = rng.uniform(0.4, 2.0);

    const RigidTransform reg = registered_error(problem, p).registration;
    const auto analytic = objective_gradient(problem, p);
    const auto numeric = testsup::fd_gradient(problem, p, reg);
    for (int k = 0; k < 7; ++k) {
      const double denom = std::max({std::abs(numeric(k)), std::abs(analytic(k)), 1e-6});
      CHECK(std::abs(analytic(k) - numeric(k)) / denom <= 1e-5);
    }
  }
}

TEST_CASE("objective_gradient: translation block closed form") {
  // Identity registration, single identity pose: d E / d t = (2/N) sum r_i.
  CalibrationProblem problem;
  problem.phantom.landmarks = {Point3(1, 2, 3), Point3(-2, 0, 1), Point3(0, 4, -1)};
  problem.observations = {{0, 0, 10.0, 20.0}, {0, 1, -5.0, 3.0}, {0, 2, 7.0, -2.0}};
  problem.poses[0] = RigidTransform{};

  CalibrationParams p;
  p.roll_rad = 0.3;
  p.pitch_rad = -0.2;
  p.yaw_rad = 0.15;
  p.tx_mm = 1.0;
  p.ty_mm = -2.0;
  p.tz_mm = 0.5;
  p.scale_mm_per_px = 0.8;

  Eigen::Vector3d residual_sum = Eigen::Vector3d::Zero();
  for (const auto& [world_pt, phantom_pt] : project_landmarks(problem, p)) {
    residual_sum += world_pt - phantom_pt;
  }
  const Eigen::Vector3d expected = residual_sum * 2.0 / 3.0;

  const auto grad = objective_gradient_fixed(problem, p, RigidTransform{});
  CHECK((grad.segment<3>(3) - expected).norm() <= 1e-12);
}

TEST_CASE("solve: starting at the truth converges immediately") {
  const CalibrationParams gt = random_calibration(CalibrationRanges{}, 506);
  const CalibrationProblem problem = noiseless_problem(83, gt);
  const CalibrationResult result = solve(problem, OptimizerConfig{}, gt);
  CHECK(result.converged);
  CHECK(result.iterations <= 2);
  CHECK(result.final_error_mm2 <= OptimizerConfig{}.epsilon_mm2);
}

TEST_CASE("solve: recovers a noiseless synthetic calibration") {
  const CalibrationParams gt = random_calibration(CalibrationRanges{}, 1003);
  const CalibrationProblem problem = noiseless_problem(2003, gt);
  const CalibrationResult result = solve(problem, testsup::recovery_config());

  CHECK(result.converged);
  CHECK(std::sqrt(result.final_error_mm2) <= 1e-3);
  CHECK(std::abs(result.params.scale_mm_per_px - gt.scale_mm_per_px) / gt.scale_mm_per_px <= 1e-4);
  CHECK(landmark_rmse(problem, result.params) <= 1e-3);
}

TEST_CASE("solve: result bookkeeping") {
  const CalibrationParams gt = random_calibration(CalibrationRanges{}, 507);
  const CalibrationProblem problem = noiseless_problem(84, gt);
  OptimizerConfig config;
  config.max_iters = 500;
  config.epsilon_mm2 = 0.0;  // force a full run
  config.plateau_rel_tol = 0.0;
  const CalibrationResult result = solve(problem, config);

  CHECK(result.iterations == 500);
  CHECK(result.error_trace.size() == 500);
  CHECK(!result.converged);
  CHECK(result.final_error_mm2 == *std::min_element(result.error_trace.begin(),
                                                    result.error_trace.end()));
  CHECK((result.matrix.m - calibration_matrix(result.params).m).norm() == 0.0);

  // Best-so-far envelope never increases.
  double best = result.error_trace.front();
  for (const double e : result.error_trace) {
    best = std::min(best, e);
    CHECK(best <= result.error_trace.front());
  }
  CHECK(registered_error(problem, result.params).error_mm2 ==
        doctest::Approx(result.final_error_mm2).epsilon(1e-12));
}

TEST_CASE("solve is deterministic") {
  const CalibrationParams gt = random_calibration(CalibrationRanges{}, 508);
  const CalibrationProblem problem = noiseless_problem(85, gt);
  OptimizerConfig config;
  config.max_iters = 300;
  config.epsilon_mm2 = 0.0;
  config.plateau_rel_tol = 0.0;

  const CalibrationResult a = solve(problem, config);
  const CalibrationResult b = solve(problem, config);
  REQUIRE(a.error_trace.size() == b.error_trace.size());
  for (std::size_t i = 0; i < a.error_trace.size(); ++i) {
    CHECK(a.error_trace[i] == b.error_trace[i]);
  }
}

TEST_CASE("solve: restarts never hurt the final error") {
  const CalibrationParams gt = random_calibration(CalibrationRanges{}, 509);
  const CalibrationProblem problem = noiseless_problem(86, gt);
  OptimizerConfig config;
  config.max_iters = 2000;
  config.plateau_rel_tol = 0.0;
  config.epsilon_mm2 = 0.0;

  const double single = solve(problem, config).final_error_mm2;
  config.restarts = 2;
  config.restart_seed = 9;
  CHECK(solve(problem, config).final_error_mm2 <= single);
}

TEST_CASE("solve: plateau stop flags non-convergence") {
  const CalibrationParams gt = random_calibration(CalibrationRanges{}, 510);
  const CalibrationProblem problem = noiseless_problem(87, gt);
  OptimizerConfig config;
  config.epsilon_mm2 = 1e-12;  // unreachable before the plateau triggers
  config.max_iters = 100000;
  config.plateau_window = 200;
  config.plateau_rel_tol = 1e-9;

  const CalibrationResult result = solve(problem, config);
  CHECK(!result.converged);
  CHECK(result.iterations < config.max_iters);
}

TEST_CASE("landmark_rmse is the square root of the registered error") {
  const CalibrationParams gt = random_calibration(CalibrationRanges{}, 511);
  const CalibrationProblem problem = noiseless_problem(88, gt);
  CalibrationParams off = gt;
  off.tx_mm += 0.5;
  const double e = registered_error(problem, off).error_mm2;
  CHECK(landmark_rmse(problem, off) == doctest::Approx(std::sqrt(e)).epsilon(1e-12));

  // sqrt arithmetic on crafted squared errors.
  const std::vector<Point3> a1 = {{1, 0, 0}, {0, 1, 0}};
  const std::vector<Point3> b1 = {{0, 0, 0}, {0, 0, 0}};
  CHECK(std::sqrt(mean_squared_error(a1, b1)) == 1.0);
  const std::vector<Point3> a2 = {{2, 0, 0}, {0, 2, 0}};
  CHECK(std::sqrt(mean_squared_error(a2, b1)) == 2.0);
}

TEST_CASE("registered error is invariant to a world-frame gauge transform") {
  Rng rng(90);
  for (int trial = 0; trial < 5; ++trial) {
    const CalibrationParams gt = random_calibration(CalibrationRanges{}, 600 + trial);
    CalibrationProblem problem = noiseless_problem(700 + trial, gt);

    CalibrationParams near = gt;
    near.roll_rad += 0.01;
    near.tx_mm -= 0.2;
    near.scale_mm_per_px *= 1.002;
    const double before = registered_error(problem, near).error_mm2;

    const RigidTransform gauge = testsup::random_rigid(rng, 50.0);
    for (auto& [frame, pose] : problem.poses) pose = gauge * pose;
    const double after = registered_error(problem, near).error_mm2;
    CHECK(std::abs(after - before) <= 1e-9);
  }
}

TEST_CASE("problem assembly enforces cross-references and the floor") {
  const PhantomModel phantom = default_phantom();
  const CalibrationParams gt = random_calibration(CalibrationRanges{}, 512);
  const TrackedSequence seq =
      simulate_acquisition(phantom, gt, testsup::recovery_acquisition(89));

  {
    auto observations = seq.observations;
    observations.front().landmark_id = 99;
    CHECK_THROWS_AS(CalibrationProblem::assemble(phantom, observations, seq.poses),
                    UnknownLandmark);
  }
  {
    auto observations = seq.observations;
    observations.front().frame = 100000;
    CHECK_THROWS_AS(CalibrationProblem::assemble(phantom, observations, seq.poses), MissingPose);
  }
  {
    // Single pose: below the identifiability floor.
    std::vector<LandmarkObservation> observations;
    for (const auto& obs : seq.observations) {
      if (obs.frame == seq.observations.front().frame) observations.push_back(obs);
    }
    CHECK_THROWS_AS(CalibrationProblem::assemble(phantom, observations, seq.poses),
                    DegenerateGeometry);
  }
}
