#include <benchmark/benchmark.h>

#include "ivuscal/recon.hpp"
#include "ivuscal/rng.hpp"

using namespace ivuscal;

namespace {

std::vector<FrameImage> make_frames(int count, int width, int height) {
  Rng rng(5);
  std::vector<FrameImage> frames;
  for (int i = 0; i < count; ++i) {
    FrameImage frame;
    frame.width = width;
    frame.height = height;
    frame.pixels.resize(static_cast<std::size_t>(width) * height);
    for (auto& px : frame.pixels) px = static_cast<std::uint8_t>(rng.uniform(0, 256));
    frame.pose.rotation =
        Eigen::AngleAxisd(0.02 * i, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    frame.pose.translation = Eigen::Vector3d(0.1 * i, 0, 0);
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace

static void BM_PasteFrames(benchmark::State& state) {
  const auto frames = make_frames(static_cast<int>(state.range(0)), 320, 240);
  const Homogeneous4 calib = Homogeneous4::identity();
  const VolumePlan plan = plan_volume(frames, calib, 1.0, 2.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(paste_frames(frames, calib, plan, Compounding::mean));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 320 * 240);
}
BENCHMARK(BM_PasteFrames)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_PlanVolume(benchmark::State& state) {
  const auto frames = make_frames(150, 680, 480);
  for (auto _ : state) {
    benchmark::DoNotOptimize(plan_volume(frames, Homogeneous4::identity(), 0.25, 5.0));
  }
}
BENCHMARK(BM_PlanVolume);
