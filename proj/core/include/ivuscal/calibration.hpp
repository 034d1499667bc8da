#pragma once

#include <cstdint>
#include <vector>

#include "ivuscal/geometry.hpp"
#include "ivuscal/phantom.hpp"
#include "ivuscal/tracking.hpp"

namespace ivuscal {

/// The 7 calibration unknowns: image-to-sensor rotation (Euler, radians),
/// translation (mm) and isotropic pixel scale (mm per px).
///
/// Euler convention: roll about x, pitch about y, yaw about z, composed as
/// Rz(yaw) * Ry(pitch) * Rx(roll). Calibration files record this as
/// `ZYX-extrinsic-rzryrx`.
struct CalibrationParams {
  double roll_rad = 0.0;
  double pitch_rad = 0.0;
  double yaw_rad = 0.0;
  double tx_mm = 0.0;
  double ty_mm = 0.0;
  double tz_mm = 0.0;
  double scale_mm_per_px = 1.0;

  /// Throws InvalidSpec unless all fields are finite and scale > 0.
  void validate() const;
};

/// How projected landmarks are registered to the phantom each iteration.
enum class RegistrationMethod {
  kabsch_paired,  ///< closed-form on the known index correspondences
  icp_nearest,    ///< nearest-neighbor ICP against the full phantom set
};

/// One calibration dataset: phantom model, annotated pixel landmarks and the
/// tracker pose for every referenced frame.
struct CalibrationProblem {
  PhantomModel phantom;
  std::vector<LandmarkObservation> observations;
  std::unordered_map<int, RigidTransform> poses;

  /// Validates cross-references and the identifiability floor (>= 3 distinct
  /// landmarks, >= 2 distinct poses). Throws UnknownLandmark, MissingPose or
  /// DegenerateGeometry.
  static CalibrationProblem assemble(PhantomModel phantom,
                                     std::vector<LandmarkObservation> observations,
                                     const std::vector<TimedPose>& poses);

  void validate() const;
};

/// Optimization settings. The stated defaults are used everywhere unless
/// overridden; only the learning rate is prescribed by the method itself.
struct OptimizerConfig {
  double learning_rate = 0.05;
  double epsilon_mm2 = 1e-4;     ///< stop when E_MSE falls to or below this
  int max_iters = 10000;
  int plateau_window = 200;      ///< iterations without relative improvement
  double plateau_rel_tol = 1e-9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  RegistrationMethod registration = RegistrationMethod::kabsch_paired;
  int restarts = 0;              ///< extra jittered starts; best result wins
  std::uint64_t restart_seed = 0;

  void validate() const;
};

struct CalibrationResult {
  CalibrationParams params;       ///< best-so-far iterate, not necessarily the last
  Homogeneous4 matrix;            ///< calibration_matrix(params)
  double final_error_mm2 = 0.0;
  int iterations = 0;
  bool converged = false;         ///< final_error_mm2 <= epsilon reached
  std::vector<double> error_trace;  ///< E_MSE per iteration, length == iterations
};

/// Error and the rigid registration that produced it.
struct RegisteredError {
  double error_mm2 = 0.0;
  RigidTransform registration;
};

/// The calibration matrix: upper-left block scale * Rz(yaw)*Ry(pitch)*Rx(roll),
/// upper-right column (tx,ty,tz), bottom row (0,0,0,1).
Homogeneous4 calibration_matrix(const CalibrationParams& params);

/// Projects every observation into the world frame, world = T_sensor * C * (u,v,0,1),
/// paired with its phantom landmark. Order follows the observation list.
std::vector<std::pair<Point3, Point3>> project_landmarks(const CalibrationProblem& problem,
                                                         const CalibrationParams& params);

/// Registers the projected world points to their phantom landmarks and returns
/// the residual mean squared misalignment, E_MSE = (1/N) sum ||p''_i - q_i||^2.
RegisteredError registered_error(const CalibrationProblem& problem,
                                 const CalibrationParams& params,
                                 RegistrationMethod method = RegistrationMethod::kabsch_paired);

/// E_MSE evaluated with the registration transform held at `registration`
/// instead of re-estimated. This is the function objective_gradient
/// differentiates.
double registered_error_fixed(const CalibrationProblem& problem,
                              const CalibrationParams& params,
                              const RigidTransform& registration);

/// Analytic gradient of E_MSE with respect to
/// (roll, pitch, yaw, tx, ty, tz, scale), holding the registration transform
/// constant at its current optimum (alternating-minimization semantics).
Eigen::Matrix<double, 7, 1> objective_gradient(
    const CalibrationProblem& problem, const CalibrationParams& params,
    RegistrationMethod method = RegistrationMethod::kabsch_paired);

/// Same gradient with an explicitly supplied (frozen) registration; this is
/// the exact derivative of registered_error_fixed.
Eigen::Matrix<double, 7, 1> objective_gradient_fixed(const CalibrationProblem& problem,
                                                     const CalibrationParams& params,
                                                     const RigidTransform& registration);

/// Runs the full optimization loop: rebuild C, project, register, evaluate,
/// Adam step. Stops on error <= epsilon, max_iters, or a plateau of the
/// best-so-far error. Deterministic. Scale positivity is maintained by
/// stepping in log(scale).
///
/// A run that stops without reaching epsilon is returned with
/// converged = false; DegenerateGeometry from the registration propagates.
CalibrationResult solve(const CalibrationProblem& problem, const OptimizerConfig& config,
                        const CalibrationParams& init = CalibrationParams{});

/// Root mean square landmark distance after registration, sqrt(E_MSE), in mm.
double landmark_rmse(const CalibrationProblem& problem, const CalibrationParams& params,
                     RegistrationMethod method = RegistrationMethod::kabsch_paired);

}  // namespace ivuscal
