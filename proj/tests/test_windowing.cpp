#include <doctest.h>

#include <memory>
#include <random>

#include "fbe/parallel.hpp"
#include "fbe/windowing.hpp"
#include "oracles.hpp"

using namespace fbe;

namespace {

class Failing final : public Predictor {
 public:
  explicit Failing(Index3 bad) : bad_(bad) {}
  Volume predict(const Index3& origin, const Volume& patch) const override {
    if (origin == bad_) throw std::runtime_error("model crashed");
    return Volume(patch.dims(), patch.spacing(), VolumeKind::probability, 0.5f);
  }

 private:
  Index3 bad_;
};

}  // namespace

TEST_CASE("worked plans") {
  CHECK(plan_windows(BoundingBox::full({192, 192, 192}), 128, 64).origins.size() == 8);
  CHECK(plan_windows(BoundingBox::full({192, 192, 192}), 96, 32).origins.size() == 64);
  CHECK(plan_windows(BoundingBox::full({192, 192, 192}), 192, 32).origins.size() == 1);
  const auto p = plan_windows(BoundingBox::full({10, 10, 10}), 4, 4);
  CHECK(p.axis_origins[0] == std::vector<std::int64_t>{0, 4, 6});
  const auto shifted = plan_windows({{5, 5, 5}, {15, 8, 20}}, 4, 3);
  CHECK(shifted.axis_origins[0] == std::vector<std::int64_t>{5, 8, 11});
  CHECK(shifted.axis_origins[1] == std::vector<std::int64_t>{5});
  CHECK(shifted.axis_origins[2] == std::vector<std::int64_t>{5, 8, 11, 14, 16});
  CHECK(shifted.origins.front() == Index3{5, 5, 5});
  CHECK(shifted.origins[1] == Index3{5, 5, 8});
  CHECK_THROWS_AS(plan_windows(BoundingBox::full({8, 8, 8}), 4, 0), std::invalid_argument);
  CHECK_THROWS_AS(plan_windows(BoundingBox::full({8, 8, 8}), 0, 1), std::invalid_argument);
}

TEST_CASE("plan origins match walking enumeration") {
  std::mt19937 gen(77);
  for (int trial = 0; trial < 300; ++trial) {
    BoundingBox r;
    for (int a = 0; a < 3; ++a) {
      r.min[a] = std::int64_t(gen() % 20);
      r.max[a] = r.min[a] + std::int64_t(gen() % 60 + 1);
    }
    const std::int64_t w = std::int64_t(gen() % 40 + 1);
    const std::int64_t s = std::int64_t(gen() % w + 1);
    const auto plan = plan_windows(r, w, s);
    for (int a = 0; a < 3; ++a)
      CHECK(plan.axis_origins[a] == oracle::axis_origins(r.min[a], r.max[a], w, s));
  }
}

TEST_CASE("coverage counts equal a brute-force window count") {
  std::mt19937 gen(8);
  for (int trial = 0; trial < 25; ++trial) {
    const Index3 dims{std::int64_t(gen() % 14 + 2), std::int64_t(gen() % 14 + 2),
                      std::int64_t(gen() % 14 + 2)};
    const std::int64_t w = std::int64_t(gen() % 8 + 1);
    const std::int64_t s = std::int64_t(gen() % w + 1);
    const auto plan = plan_windows(BoundingBox::full(dims), w, s);
    const Volume cov = coverage_counts(plan);
    bool ok = true;
    for (std::int64_t i = 0; i < dims[0]; ++i)
      for (std::int64_t j = 0; j < dims[1]; ++j)
        for (std::int64_t k = 0; k < dims[2]; ++k) {
          int n = 0;
          for (const auto& o : plan.origins) n += plan.window_box(o).contains(Index3{i, j, k});
          ok &= cov.at(i, j, k) == float(n) && n >= 1;
        }
    CHECK(ok);
  }
}

TEST_CASE("in-frame planning centers a short axis inside the frame") {
  const BoundingBox r{{50, 0, 180}, {60, 100, 190}};
  const auto plan = plan_windows_in_frame(r, {192, 192, 192}, 32, 16);
  CHECK(plan.axis_origins[0] == std::vector<std::int64_t>{39});
  CHECK(plan.axis_origins[1] == plan_windows(r, 32, 16).axis_origins[1]);
  CHECK(plan.axis_origins[2] == std::vector<std::int64_t>{160});  // clamped to 192 - 32
  const auto tiny_frame = plan_windows_in_frame({{0, 0, 0}, {4, 4, 4}}, {8, 8, 8}, 16, 8);
  CHECK(tiny_frame.origins == std::vector<Index3>{{0, 0, 0}});
  // Every region voxel is still covered.
  const Volume cov = coverage_counts(plan);
  bool covered = true;
  for (float c : cov.data()) covered &= c >= 1.0f;
  CHECK(covered);
}

TEST_CASE("oracle accumulation: sum equals gt times coverage, mean equals gt") {
  std::mt19937 gen(31);
  auto gt = std::make_shared<Volume>(oracle::random_mask(gen, {24, 20, 28}, 0.3));
  const auto handle = make_oracle(gt, 8);
  const BoundingBox region{{2, 3, 1}, {22, 17, 27}};
  const auto plan = plan_windows(region, 8, 3);
  const Volume cov = coverage_counts(plan);
  const Volume sum = run_windows(*gt, plan, handle, AccumulateMode::sum);
  const Volume mean = run_windows(*gt, plan, handle, AccumulateMode::mean);
  CHECK(sum.dims() == region.extents());
  bool ok = true;
  for (std::int64_t i = 0; i < region.extent(0); ++i)
    for (std::int64_t j = 0; j < region.extent(1); ++j)
      for (std::int64_t k = 0; k < region.extent(2); ++k) {
        const float g = gt->at(i + 2, j + 3, k + 1);
        ok &= sum.at(i, j, k) == g * cov.at(i, j, k);
        ok &= mean.at(i, j, k) == g;
      }
  CHECK(ok);
}

TEST_CASE("run_windows is independent of the thread count") {
  std::mt19937 gen(5);
  auto gt = std::make_shared<Volume>(oracle::random_mask(gen, {40, 40, 40}, 0.4));
  NoiseSpec noise;
  noise.per_voxel_fp = 0.1;
  noise.fp_blob_rate = 1.0;
  noise.fn_hole_rate = 1.0;
  const auto handle = make_noisy_oracle(gt, 16, noise, 123, 9);
  const auto plan = plan_windows(BoundingBox::full(gt->dims()), 16, 5);
  Volume one, eight;
  {
    ThreadScope t(1);
    one = run_windows(*gt, plan, handle, AccumulateMode::mean);
  }
  {
    ThreadScope t(8);
    eight = run_windows(*gt, plan, handle, AccumulateMode::mean);
  }
  CHECK(one == eight);
}

TEST_CASE("a failing window is reported with its origin") {
  const Volume img({20, 20, 20}, {1, 1, 1}, VolumeKind::intensity);
  PredictorHandle h("bad", 8, Backend::constant, std::make_shared<Failing>(Index3{6, 0, 12}));
  const auto plan = plan_windows(BoundingBox::full(img.dims()), 8, 6);
  try {
    run_windows(img, plan, h);
    FAIL("expected PredictorError");
  } catch (const PredictorError& e) {
    REQUIRE(e.origin());
    CHECK(*e.origin() == Index3{6, 0, 12});
  }
}
