#include "ivuscal/phantom.hpp"

#include <cmath>

namespace ivuscal {

PhantomModel build_phantom(const PhantomSpec& spec) {
  const std::size_t n = static_cast<std::size_t>(spec.needles_per_cluster);
  if (spec.needles_per_cluster <= 0 || spec.cluster_angles_deg.empty()) {
    throw InvalidSpec("phantom spec needs at least one cluster and one needle");
  }
  if (spec.needle_lengths_mm.size() != n || spec.axial_offsets_mm.size() != n) {
    throw InvalidSpec("needle_lengths and axial_offsets must each have needles_per_cluster entries");
  }
  if (!(spec.cavity_radius_mm > 0.0)) {
    throw InvalidSpec("cavity radius must be positive");
  }
  for (const double len : spec.needle_lengths_mm) {
    if (!(len > 0.0) || !(len < spec.cavity_radius_mm)) {
      throw InvalidSpec("needle lengths must lie in (0, cavity_radius)");
    }
  }

  PhantomModel model;
  model.spec = spec;
  model.landmarks.reserve(spec.cluster_angles_deg.size() * n);
  for (const double angle_deg : spec.cluster_angles_deg) {
    const double theta = angle_deg * M_PI / 180.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double radial = spec.cavity_radius_mm - spec.needle_lengths_mm[k];
      model.landmarks.emplace_back(radial * std::cos(theta), radial * std::sin(theta),
                                   spec.axial_offsets_mm[k]);
    }
  }
  return model;
}

PhantomSpec default_phantom_spec() {
  PhantomSpec spec;
  spec.cluster_angles_deg = {60.0, 90.0, 120.0};
  spec.needles_per_cluster = 5;
  spec.needle_lengths_mm = {10.0, 30.0, 50.0, 20.0, 40.0};
  spec.cavity_radius_mm = 65.0;
  spec.axial_offsets_mm = {-10.0, -5.0, 0.0, 5.0, 10.0};
  return spec;
}

PhantomModel default_phantom() { return build_phantom(default_phantom_spec()); }

}  // namespace ivuscal
