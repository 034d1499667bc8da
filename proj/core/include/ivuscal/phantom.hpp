#pragma once

#include <optional>
#include <vector>

#include "ivuscal/geometry.hpp"

namespace ivuscal {

/// Parametric description of the needle phantom: clusters of needles mounted
/// on the wall of a half-cylinder cavity, tips pointing at the axis.
struct PhantomSpec {
  std::vector<double> cluster_angles_deg;  ///< azimuth of each cluster
  int needles_per_cluster = 0;
  std::vector<double> needle_lengths_mm;   ///< per needle within a cluster
  double cavity_radius_mm = 0.0;
  std::vector<double> axial_offsets_mm;    ///< per needle, along the cavity axis
};

/// Needle-tip landmark coordinates in the phantom frame. Landmark ids are the
/// vector indices: unique and contiguous from 0, assigned cluster-major,
/// needle-minor.
struct PhantomModel {
  std::vector<Point3> landmarks;
  std::optional<PhantomSpec> spec;

  int landmark_count() const { return static_cast<int>(landmarks.size()); }
};

/// Evaluates the tip formula for every (cluster, needle) pair. The phantom
/// frame has the cavity axis along z with the origin at the cylinder center;
/// a needle of length L in a cluster at azimuth theta has its tip at
/// ((r-L)cos(theta), (r-L)sin(theta), axial_offset).
///
/// Throws InvalidSpec when list lengths disagree with needles_per_cluster or
/// any length is outside (0, cavity_radius).
PhantomModel build_phantom(const PhantomSpec& spec);

/// The phantom used throughout: clusters at 60/90/120 degrees, five needles
/// per cluster with lengths {10,30,50,20,40} mm and axial offsets
/// {-10,-5,0,5,10} mm, 65 mm cavity radius. 15 landmarks total.
PhantomModel default_phantom();

/// The spec behind default_phantom().
PhantomSpec default_phantom_spec();

}  // namespace ivuscal
