#include "ivuscal/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ivuscal/rng.hpp"

namespace ivuscal {

void CalibrationParams::validate() const {
  const double fields[] = {roll_rad, pitch_rad, yaw_rad, tx_mm, ty_mm, tz_mm, scale_mm_per_px};
  for (const double f : fields) {
    if (!std::isfinite(f)) throw InvalidSpec("calibration parameter not finite");
  }
  if (!(scale_mm_per_px > 0.0)) throw InvalidSpec("scale must be positive");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidSpec("learning_rate must be positive");
  if (epsilon_mm2 < 0.0) throw InvalidSpec("epsilon must be >= 0");
  if (max_iters < 1) throw InvalidSpec("max_iters must be >= 1");
  if (restarts < 0) throw InvalidSpec("restarts must be >= 0");
}

CalibrationProblem CalibrationProblem::assemble(PhantomModel phantom,
                                                std::vector<LandmarkObservation> observations,
                                                const std::vector<TimedPose>& poses) {
  CalibrationProblem problem;
  problem.phantom = std::move(phantom);
  problem.observations = std::move(observations);
  problem.poses = pose_index(poses);
  problem.validate();
  return problem;
}

void CalibrationProblem::validate() const {
  std::set<int> landmark_ids;
  std::set<int> frames;
  for (const auto& obs : observations) {
    if (obs.landmark_id < 0 || obs.landmark_id >= phantom.landmark_count()) {
      throw UnknownLandmark("observation references landmark " + std::to_string(obs.landmark_id) +
                            " absent from the phantom");
    }
    if (poses.find(obs.frame) == poses.end()) {
      throw MissingPose("observation references frame " + std::to_string(obs.frame) +
                        " with no pose");
    }
    landmark_ids.insert(obs.landmark_id);
    frames.insert(obs.frame);
  }
  if (landmark_ids.size() < 3 || frames.size() < 2) {
    throw DegenerateGeometry("calibration needs >= 3 distinct landmarks over >= 2 poses");
  }
}

Homogeneous4 calibration_matrix(const CalibrationParams& params) {
  Homogeneous4 c;
  c.m.topLeftCorner<3, 3>() =
      params.scale_mm_per_px * euler_to_rotation(params.roll_rad, params.pitch_rad, params.yaw_rad);
  c.m.topRightCorner<3, 1>() = Eigen::Vector3d(params.tx_mm, params.ty_mm, params.tz_mm);
  return c;
}

namespace {

// Observation resolved against its pose and phantom landmark.
struct ResolvedObs {
  Eigen::Matrix3d pose_rot;
  Eigen::Vector3d pose_trans;
  Eigen::Vector3d image_pt;  // (u, v, 0) px
  Eigen::Vector3d phantom_pt;
};

std::vector<ResolvedObs> resolve(const CalibrationProblem& problem) {
  std::vector<ResolvedObs> out;
  out.reserve(problem.observations.size());
  for (const auto& obs : problem.observations) {
    const RigidTransform& pose = problem.poses.at(obs.frame);
    out.push_back({pose.rotation, pose.translation, Eigen::Vector3d(obs.u_px, obs.v_px, 0.0),
                   problem.phantom.landmarks.at(static_cast<std::size_t>(obs.landmark_id))});
  }
  return out;
}

std::vector<Point3> project_world(const std::vector<ResolvedObs>& obs,
                                  const CalibrationParams& params) {
  const Eigen::Matrix3d rot = euler_to_rotation(params.roll_rad, params.pitch_rad, params.yaw_rad);
  const Eigen::Vector3d trans(params.tx_mm, params.ty_mm, params.tz_mm);
  std::vector<Point3> world;
  world.reserve(obs.size());
  for (const auto& o : obs) {
    const Eigen::Vector3d sensor_pt = params.scale_mm_per_px * (rot * o.image_pt) + trans;
    world.push_back(o.pose_rot * sensor_pt + o.pose_trans);
  }
  return world;
}

RigidTransform register_points(const std::vector<Point3>& world,
                               const std::vector<Point3>& phantom_pts,
                               const PhantomModel& phantom, RegistrationMethod method) {
  if (method == RegistrationMethod::icp_nearest) {
    return icp_align(world, phantom.landmarks);
  }
  return kabsch_align(world, phantom_pts);
}

double mse_after(const RigidTransform& reg, const std::vector<Point3>& world,
                 const std::vector<Point3>& phantom_pts) {
  double sum = 0.0;
  for (std::size_t i = 0; i < world.size(); ++i) {
    sum += (reg.apply(world[i]) - phantom_pts[i]).squaredNorm();
  }
  return sum / static_cast<double>(world.size());
}

Eigen::Matrix<double, 7, 1> gradient_with_registration(const std::vector<ResolvedObs>& obs,
                                                       const CalibrationParams& params,
                                                       const RigidTransform& reg) {
  const double cr = std::cos(params.roll_rad), sr = std::sin(params.roll_rad);
  const double cp = std::cos(params.pitch_rad), sp = std::sin(params.pitch_rad);
  const double cy = std::cos(params.yaw_rad), sy = std::sin(params.yaw_rad);

  Eigen::Matrix3d rx, ry, rz, drx, dry, drz;
  rx << 1, 0, 0, 0, cr, -sr, 0, sr, cr;
  ry << cp, 0, sp, 0, 1, 0, -sp, 0, cp;
  rz << cy, -sy, 0, sy, cy, 0, 0, 0, 1;
  drx << 0, 0, 0, 0, -sr, -cr, 0, cr, -sr;
  dry << -sp, 0, cp, 0, 0, 0, -cp, 0, -sp;
  drz << -sy, -cy, 0, cy, -sy, 0, 0, 0, 0;

  const Eigen::Matrix3d rot = rz * ry * rx;
  const Eigen::Matrix3d d_roll = rz * ry * drx;
  const Eigen::Matrix3d d_pitch = rz * dry * rx;
  const Eigen::Matrix3d d_yaw = drz * ry * rx;

  const Eigen::Vector3d trans(params.tx_mm, params.ty_mm, params.tz_mm);
  const double s = params.scale_mm_per_px;

  Eigen::Matrix<double, 7, 1> grad = Eigen::Matrix<double, 7, 1>::Zero();
  for (const auto& o : obs) {
    const Eigen::Vector3d rot_h = rot * o.image_pt;
    const Eigen::Vector3d sensor_pt = s * rot_h + trans;
    const Eigen::Vector3d world = o.pose_rot * sensor_pt + o.pose_trans;
    const Eigen::Vector3d residual = reg.apply(world) - o.phantom_pt;

    // chain = (reg.rotation * pose_rot)^T residual: gradient of the residual
    // pulled back into the sensor frame.
    const Eigen::Vector3d chain = o.pose_rot.transpose() * (reg.rotation.transpose() * residual);

    grad(0) += chain.dot(s * (d_roll * o.image_pt));
    grad(1) += chain.dot(s * (d_pitch * o.image_pt));
    grad(2) += chain.dot(s * (d_yaw * o.image_pt));
    grad(3) += chain.x();
    grad(4) += chain.y();
    grad(5) += chain.z();
    grad(6) += chain.dot(rot_h);
  }
  grad *= 2.0 / static_cast<double>(obs.size());
  return grad;
}

std::vector<Point3> phantom_points_of(const std::vector<ResolvedObs>& obs) {
  std::vector<Point3> pts;
  pts.reserve(obs.size());
  for (const auto& o : obs) pts.push_back(o.phantom_pt);
  return pts;
}

}  // namespace

std::vector<std::pair<Point3, Point3>> project_landmarks(const CalibrationProblem& problem,
                                                         const CalibrationParams& params) {
  const auto obs = resolve(problem);
  const auto world = project_world(obs, params);
  std::vector<std::pair<Point3, Point3>> out;
  out.reserve(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    out.emplace_back(world[i], obs[i].phantom_pt);
  }
  return out;
}

RegisteredError registered_error(const CalibrationProblem& problem,
                                 const CalibrationParams& params, RegistrationMethod method) {
  params.validate();
  const auto obs = resolve(problem);
  if (obs.empty()) throw DegenerateGeometry("no observations");
  const auto world = project_world(obs, params);
  const auto phantom_pts = phantom_points_of(obs);
  const RigidTransform reg = register_points(world, phantom_pts, problem.phantom, method);
  return {mse_after(reg, world, phantom_pts), reg};
}

double registered_error_fixed(const CalibrationProblem& problem, const CalibrationParams& params,
                              const RigidTransform& registration) {
  const auto obs = resolve(problem);
  if (obs.empty()) throw DegenerateGeometry("no observations");
  const auto world = project_world(obs, params);
  return mse_after(registration, world, phantom_points_of(obs));
}

Eigen::Matrix<double, 7, 1> objective_gradient(const CalibrationProblem& problem,
                                               const CalibrationParams& params,
                                               RegistrationMethod method) {
  params.validate();
  const auto obs = resolve(problem);
  if (obs.empty()) throw DegenerateGeometry("no observations");
  const auto world = project_world(obs, params);
  const RigidTransform reg =
      register_points(world, phantom_points_of(obs), problem.phantom, method);
  return gradient_with_registration(obs, params, reg);
}

Eigen::Matrix<double, 7, 1> objective_gradient_fixed(const CalibrationProblem& problem,
                                                     const CalibrationParams& params,
                                                     const RigidTransform& registration) {
  const auto obs = resolve(problem);
  if (obs.empty()) throw DegenerateGeometry("no observations");
  return gradient_with_registration(obs, params, registration);
}

namespace {

Eigen::Matrix<double, 7, 1> to_internal(const CalibrationParams& p) {
  Eigen::Matrix<double, 7, 1> x;
  x << p.roll_rad, p.pitch_rad, p.yaw_rad, p.tx_mm, p.ty_mm, p.tz_mm, std::log(p.scale_mm_per_px);
  return x;
}

CalibrationParams from_internal(const Eigen::Matrix<double, 7, 1>& x) {
  CalibrationParams p;
  p.roll_rad = x(0);
  p.pitch_rad = x(1);
  p.yaw_rad = x(2);
  p.tx_mm = x(3);
  p.ty_mm = x(4);
  p.tz_mm = x(5);
  p.scale_mm_per_px = std::exp(x(6));
  return p;
}

CalibrationResult solve_single(const std::vector<ResolvedObs>& obs, const PhantomModel& phantom,
                               const OptimizerConfig& config, const CalibrationParams& init) {
  using Vec7 = Eigen::Matrix<double, 7, 1>;

  Vec7 x = to_internal(init);
  Vec7 m = Vec7::Zero();
  Vec7 v = Vec7::Zero();

  CalibrationResult result;
  result.params = init;
  result.final_error_mm2 = std::numeric_limits<double>::infinity();

  std::vector<double> best_envelope;
  best_envelope.reserve(static_cast<std::size_t>(config.max_iters));
  const auto phantom_pts = phantom_points_of(obs);

  for (int iter = 0; iter < config.max_iters; ++iter) {
    const CalibrationParams params = from_internal(x);
    const auto world = project_world(obs, params);
    const RigidTransform reg =
        register_points(world, phantom_pts, phantom, config.registration);
    const double error = mse_after(reg, world, phantom_pts);

    result.error_trace.push_back(error);
    if (error < result.final_error_mm2) {
      result.final_error_mm2 = error;
      result.params = params;
    }
    best_envelope.push_back(result.final_error_mm2);

    if (error <= config.epsilon_mm2) {
      result.converged = true;
      break;
    }
    if (config.plateau_window > 0 &&
        static_cast<int>(best_envelope.size()) > config.plateau_window) {
      const double before =
          best_envelope[best_envelope.size() - 1 - static_cast<std::size_t>(config.plateau_window)];
      const double now = best_envelope.back();
      if (before > 0.0 && (before - now) / before < config.plateau_rel_tol) break;
    }

    Vec7 grad = gradient_with_registration(obs, params, reg);
    grad(6) *= params.scale_mm_per_px;  // d/d(log s) = s * d/ds

    const double t = static_cast<double>(iter + 1);
    m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * grad;
    v = config.adam_beta2 * v + (1.0 - config.adam_beta2) * grad.cwiseProduct(grad).eval();
    const Vec7 m_hat = m / (1.0 - std::pow(config.adam_beta1, t));
    const Vec7 v_hat = v / (1.0 - std::pow(config.adam_beta2, t));
    x -= config.learning_rate *
         (m_hat.array() / (v_hat.array().sqrt() + config.adam_eps)).matrix();
  }

  result.iterations = static_cast<int>(result.error_trace.size());
  result.converged = result.final_error_mm2 <= config.epsilon_mm2;
  result.matrix = calibration_matrix(result.params);
  return result;
}

}  // namespace

CalibrationResult solve(const CalibrationProblem& problem, const OptimizerConfig& config,
                        const CalibrationParams& init) {
  config.validate();
  init.validate();
  problem.validate();

  const auto obs = resolve(problem);
  CalibrationResult best = solve_single(obs, problem.phantom, config, init);

  if (config.restarts > 0) {
    Rng rng(config.restart_seed);
    for (int r = 0; r < config.restarts; ++r) {
      CalibrationParams jittered = init;
      jittered.roll_rad += rng.uniform(-0.2, 0.2);
      jittered.pitch_rad += rng.uniform(-0.2, 0.2);
      jittered.yaw_rad += rng.uniform(-0.2, 0.2);
      jittered.tx_mm += rng.uniform(-5.0, 5.0);
      jittered.ty_mm += rng.uniform(-5.0, 5.0);
      jittered.tz_mm += rng.uniform(-5.0, 5.0);
      jittered.scale_mm_per_px *= std::exp(rng.uniform(-0.2, 0.2));
      CalibrationResult candidate = solve_single(obs, problem.phantom, config, jittered);
      if (candidate.final_error_mm2 < best.final_error_mm2) best = std::move(candidate);
    }
  }
  return best;
}

double landmark_rmse(const CalibrationProblem& problem, const CalibrationParams& params,
                     RegistrationMethod method) {
  return std::sqrt(registered_error(problem, params, method).error_mm2);
}

}  // namespace ivuscal
