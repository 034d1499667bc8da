#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ivuscal/errors.hpp"

namespace ivuscal {

/// 3D point or vector. Units are mm in world/phantom frames and px in the
/// image frame (where z = 0 by convention).
using Point3 = Eigen::Vector3d;

/// Rotation + translation. Rotation is a proper orthonormal 3x3 matrix
/// (det +1), translation in mm.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Point3 apply(const Point3& p) const { return rotation * p + translation; }

  RigidTransform inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }
};

/// Composition: (a * b) applies b first, then a.
inline RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

/// True if `rotation` is orthonormal with det +1 within `tol` per entry.
bool is_proper_rotation(const Eigen::Matrix3d& rotation, double tol = 1e-9);

/// Homogeneous 4x4 transform, row-major semantics, bottom row pinned to
/// (0,0,0,1). Unlike RigidTransform the linear block may include scale.
struct Homogeneous4 {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();

  static Homogeneous4 identity() { return Homogeneous4{}; }

  /// Wraps an existing matrix; throws InvalidSpec if the bottom row is not
  /// exactly (0,0,0,1).
  static Homogeneous4 from_matrix(const Eigen::Matrix4d& mat);

  static Homogeneous4 from_rigid(const RigidTransform& t);

  static Homogeneous4 translate(double x, double y, double z);

  /// Linear (upper-left 3x3) block.
  Eigen::Matrix3d linear() const { return m.topLeftCorner<3, 3>(); }

  /// Translation (upper-right) column.
  Eigen::Vector3d translation() const { return m.topRightCorner<3, 1>(); }
};

/// Matrix product a*b with the bottom-row invariant re-pinned exactly.
Homogeneous4 compose(const Homogeneous4& a, const Homogeneous4& b);

inline Homogeneous4 operator*(const Homogeneous4& a, const Homogeneous4& b) {
  return compose(a, b);
}

/// Homogeneous action on a point: first three components of m * (x,y,z,1).
Point3 apply(const Homogeneous4& t, const Point3& p);

/// Inverse with the bottom row re-pinned. The linear block must be invertible.
Homogeneous4 inverse(const Homogeneous4& t);

/// Rz(yaw) * Ry(pitch) * Rx(roll). Angles in radians; roll is about x,
/// pitch about y, yaw about z.
Eigen::Matrix3d euler_to_rotation(double roll, double pitch, double yaw);

/// Closed-form least-squares rigid alignment of corresponded point sets
/// (Kabsch). Returns the transform minimizing sum ||R*source[i] + t - target[i]||^2.
/// Reflections are corrected: the result always has det +1.
///
/// Throws DegenerateGeometry for fewer than 3 points or when the centered
/// covariance has rank < 2 (collinear or coincident sets).
RigidTransform kabsch_align(const std::vector<Point3>& source,
                            const std::vector<Point3>& target);

/// Iterative closest point for uncorresponded sets: alternates nearest-neighbor
/// matching against `target` with kabsch_align until the mean residual changes
/// by less than `tol` (mm) or `max_iters` is reached.
RigidTransform icp_align(const std::vector<Point3>& source,
                         const std::vector<Point3>& target,
                         int max_iters = 50, double tol = 1e-9);

/// Mean squared distance between index-paired point sets (mm^2).
double mean_squared_error(const std::vector<Point3>& a, const std::vector<Point3>& b);

}  // namespace ivuscal
