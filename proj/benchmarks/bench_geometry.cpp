#include <benchmark/benchmark.h>

#include "ivuscal/geometry.hpp"
#include "ivuscal/rng.hpp"

using namespace ivuscal;

namespace {

std::vector<Point3> make_cloud(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point3> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    pts.emplace_back(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-100, 100));
  }
  return pts;
}

}  // namespace

static void BM_EulerToRotation(benchmark::State& state) {
  double angle = 0.0;
  for (auto _ : state) {
    angle += 1e-6;
    benchmark::DoNotOptimize(euler_to_rotation(angle, -angle, 0.5 * angle));
  }
}
BENCHMARK(BM_EulerToRotation);

static void BM_KabschAlign(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto source = make_cloud(n, 1);
  Rng rng(2);
  RigidTransform motion;
  motion.rotation = rng.rotation();
  motion.translation = Eigen::Vector3d(5, -3, 2);
  std::vector<Point3> target;
  for (const auto& p : source) target.push_back(motion.apply(p));

  for (auto _ : state) {
    benchmark::DoNotOptimize(kabsch_align(source, target));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_KabschAlign)->Arg(15)->Arg(150)->Arg(1500);

static void BM_IcpAlign(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto target = make_cloud(n, 3);
  RigidTransform motion;
  motion.rotation = Eigen::AngleAxisd(0.01, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  motion.translation = Eigen::Vector3d(0.5, -0.2, 0.3);
  std::vector<Point3> source;
  for (const auto& p : target) source.push_back(motion.apply(p));

  for (auto _ : state) {
    benchmark::DoNotOptimize(icp_align(source, target));
  }
}
BENCHMARK(BM_IcpAlign)->Arg(15)->Arg(150);
