#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace ivuscal {

/// Seeded random source with platform-stable uniform and normal draws.
/// std::mt19937_64 output is specified by the standard; the distributions
/// below avoid the implementation-defined std:: distribution adapters so a
/// given seed yields identical streams everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double sigma) { return sigma * normal(); }

  /// Uniformly distributed rotation matrix (random unit quaternion).
  Eigen::Matrix3d rotation() {
    Eigen::Vector4d q(normal(), normal(), normal(), normal());
    q.normalize();
    return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
  }

  /// Small rotation: random axis, normally distributed angle (radians).
  Eigen::Matrix3d rotation_perturbation(double angle_sigma_rad) {
    Eigen::Vector3d axis(normal(), normal(), normal());
    const double n = axis.norm();
    if (n == 0.0) return Eigen::Matrix3d::Identity();
    axis /= n;
    return Eigen::AngleAxisd(normal(angle_sigma_rad), axis).toRotationMatrix();
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ivuscal
