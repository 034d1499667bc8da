#include "ivuscal/geometry.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>

namespace ivuscal {

bool is_proper_rotation(const Eigen::Matrix3d& rotation, double tol) {
  const Eigen::Matrix3d gram = rotation.transpose() * rotation;
  if (((gram - Eigen::Matrix3d::Identity()).array().abs() > tol).any()) {
    return false;
  }
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

Homogeneous4 Homogeneous4::from_matrix(const Eigen::Matrix4d& mat) {
  if (mat(3, 0) != 0.0 || mat(3, 1) != 0.0 || mat(3, 2) != 0.0 || mat(3, 3) != 1.0) {
    throw InvalidSpec("Homogeneous4 bottom row must be (0,0,0,1)");
  }
  Homogeneous4 h;
  h.m = mat;
  return h;
}

Homogeneous4 Homogeneous4::from_rigid(const RigidTransform& t) {
  Homogeneous4 h;
  h.m.topLeftCorner<3, 3>() = t.rotation;
  h.m.topRightCorner<3, 1>() = t.translation;
  return h;
}

Homogeneous4 Homogeneous4::translate(double x, double y, double z) {
  Homogeneous4 h;
  h.m(0, 3) = x;
  h.m(1, 3) = y;
  h.m(2, 3) = z;
  return h;
}

Homogeneous4 compose(const Homogeneous4& a, const Homogeneous4& b) {
  Homogeneous4 out;
  out.m = a.m * b.m;
  out.m.row(3) << 0.0, 0.0, 0.0, 1.0;
  return out;
}

Point3 apply(const Homogeneous4& t, const Point3& p) {
  return t.linear() * p + t.translation();
}

Homogeneous4 inverse(const Homogeneous4& t) {
  const Eigen::Matrix3d lin_inv = t.linear().inverse();
  Homogeneous4 out;
  out.m.topLeftCorner<3, 3>() = lin_inv;
  out.m.topRightCorner<3, 1>() = -(lin_inv * t.translation());
  return out;
}

Eigen::Matrix3d euler_to_rotation(double roll, double pitch, double yaw) {
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cy = std::cos(yaw), sy = std::sin(yaw);

  Eigen::Matrix3d rx, ry, rz;
  rx << 1, 0, 0,
        0, cr, -sr,
        0, sr, cr;
  ry << cp, 0, sp,
        0, 1, 0,
        -sp, 0, cp;
  rz << cy, -sy, 0,
        sy, cy, 0,
        0, 0, 1;
  return rz * ry * rx;
}

namespace {

Point3 centroid(const std::vector<Point3>& pts) {
  Point3 c = Point3::Zero();
  for (const auto& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

}  // namespace

RigidTransform kabsch_align(const std::vector<Point3>& source,
                            const std::vector<Point3>& target) {
  if (source.size() != target.size()) {
    throw DegenerateGeometry("kabsch_align: point sets differ in size");
  }
  if (source.size() < 3) {
    throw DegenerateGeometry("kabsch_align: need at least 3 point pairs");
  }

  const Point3 cs = centroid(source);
  const Point3 ct = centroid(target);

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    cov += (source[i] - cs) * (target[i] - ct).transpose();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  // Rank < 2 means the rotation about the null direction is unconstrained.
  if (sv(1) <= 1e-12 * std::max(sv(0), std::numeric_limits<double>::min())) {
    throw DegenerateGeometry("kabsch_align: centered covariance rank < 2");
  }

  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) {
    d(2, 2) = -1.0;
  }

  RigidTransform out;
  out.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  out.translation = ct - out.rotation * cs;
  return out;
}

RigidTransform icp_align(const std::vector<Point3>& source,
                         const std::vector<Point3>& target,
                         int max_iters, double tol) {
  if (source.empty() || target.empty()) {
    throw DegenerateGeometry("icp_align: empty point set");
  }

  RigidTransform current;
  double prev_residual = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < max_iters; ++iter) {
    // Brute-force nearest neighbor; the landmark sets here are tens of points.
    std::vector<Point3> moved(source.size());
    std::vector<Point3> matched(source.size());
    double residual = 0.0;
    for (std::size_t i = 0; i < source.size(); ++i) {
      moved[i] = current.apply(source[i]);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& t : target) {
        const double d2 = (t - moved[i]).squaredNorm();
        if (d2 < best) {
          best = d2;
          matched[i] = t;
        }
      }
      residual += std::sqrt(best);
    }
    residual /= static_cast<double>(source.size());

    if (std::abs(prev_residual - residual) < tol) break;
    prev_residual = residual;

    current = kabsch_align(moved, matched) * current;
  }
  return current;
}

double mean_squared_error(const std::vector<Point3>& a, const std::vector<Point3>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw DegenerateGeometry("mean_squared_error: sets must be equal-sized and non-empty");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += (a[i] - b[i]).squaredNorm();
  }
  return sum / static_cast<double>(a.size());
}

}  // namespace ivuscal
