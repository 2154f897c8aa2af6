// Serial reference kernels vs the OpenMP ones. The OpenMP variants take the
// thread count as the benchmark argument.

#include <benchmark/benchmark.h>

#include <random>

#include "fbe/morphology.hpp"
#include "fbe/parallel.hpp"
#include "fbe/reference.hpp"
#include "fbe/windowing.hpp"

using namespace fbe;

// Fixtures are built on first use, outside the timed loops.

namespace {

Volume random_volume(const Index3& dims, const Spacing3& sp, VolumeKind kind, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Volume v(dims, sp, kind);
  for (auto& x : v.data()) x = kind == VolumeKind::mask ? float(u(gen) < 0.5f) : u(gen);
  return v;
}

struct WindowsFixture {
  std::shared_ptr<Volume> gt;
  PredictorHandle predictor;
  WindowPlan plan;
};

const WindowsFixture& windows_fixture() {
  static const WindowsFixture f = [] {
    WindowsFixture f;
    f.gt = std::make_shared<Volume>(random_volume({128, 128, 128}, {1, 1, 1}, VolumeKind::mask, 1));
    NoiseSpec noise;
    noise.per_voxel_fp = 0.1;
    f.predictor = make_noisy_oracle(f.gt, 64, noise, 7, 8);
    f.plan = plan_windows({{0, 0, 0}, {128, 128, 128}}, 64, 32);
    return f;
  }();
  return f;
}

const Volume& prob_volume() {
  static const Volume v = random_volume({192, 192, 192}, {1, 1, 1}, VolumeKind::probability, 2);
  return v;
}

const std::vector<Volume>& vote_masks() {
  static const std::vector<Volume> m{
      random_volume({192, 192, 192}, {1, 1, 1}, VolumeKind::mask, 3),
      random_volume({192, 192, 192}, {1, 1, 1}, VolumeKind::mask, 4),
      random_volume({192, 192, 192}, {1, 1, 1}, VolumeKind::mask, 5)};
  return m;
}

const Volume& anisotropic_volume() {
  static const Volume v = random_volume({256, 256, 60}, {1, 1, 3}, VolumeKind::intensity, 6);
  return v;
}

const Index3 kResampled{256, 256, 180};

void BM_RunWindowsSerial(benchmark::State& state) {
  const auto& f = windows_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(reference::run_windows(*f.gt, f.plan, f.predictor));
}

void BM_RunWindowsOmp(benchmark::State& state) {
  const auto& f = windows_fixture();
  ThreadScope scope(int(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_windows(*f.gt, f.plan, f.predictor));
}

void BM_ThresholdSerial(benchmark::State& state) {
  prob_volume();
  for (auto _ : state) benchmark::DoNotOptimize(reference::threshold(prob_volume(), 0.2));
}

void BM_ThresholdOmp(benchmark::State& state) {
  prob_volume();
  ThreadScope scope(int(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(threshold(prob_volume(), 0.2));
}

void BM_MajorityVoteSerial(benchmark::State& state) {
  vote_masks();
  for (auto _ : state) benchmark::DoNotOptimize(reference::majority_vote(vote_masks()));
}

void BM_MajorityVoteOmp(benchmark::State& state) {
  vote_masks();
  ThreadScope scope(int(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(majority_vote(vote_masks()));
}

void BM_ResampleSerial(benchmark::State& state) {
  anisotropic_volume();
  for (auto _ : state)
    benchmark::DoNotOptimize(reference::resample_linear(anisotropic_volume(), kResampled, {1, 1, 1}));
}

void BM_ResampleOmp(benchmark::State& state) {
  anisotropic_volume();
  ThreadScope scope(int(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(resample_to(anisotropic_volume(), kResampled, {1, 1, 1}, Interp::linear));
}

}  // namespace

BENCHMARK(BM_RunWindowsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunWindowsOmp)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ThresholdSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ThresholdOmp)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MajorityVoteSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MajorityVoteOmp)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ResampleSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ResampleOmp)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
