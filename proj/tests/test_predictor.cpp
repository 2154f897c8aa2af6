#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fbe/predictor.hpp"
#include "oracles.hpp"

using namespace fbe;
using namespace std::chrono_literals;

namespace {

std::shared_ptr<const Volume> empty_gt(std::int64_t side) {
  return std::make_shared<Volume>(Index3{side, side, side}, Spacing3{1, 1, 1}, VolumeKind::mask);
}

Volume blank(std::int64_t w) { return Volume({w, w, w}, {1, 1, 1}, VolumeKind::intensity); }

class Returns final : public Predictor {
 public:
  explicit Returns(float v) : v_(v) {}
  Volume predict(const Index3&, const Volume& patch) const override {
    return Volume(patch.dims(), patch.spacing(), VolumeKind::probability, v_);
  }

 private:
  float v_;
};

std::vector<std::string> echo(std::vector<std::string> args = {}) {
  args.insert(args.begin(), FBE_ECHO_PREDICTOR);
  return args;
}

}  // namespace

TEST_CASE("oracle returns the ground truth window, zeros outside") {
  std::mt19937 gen(1);
  auto gt = std::make_shared<Volume>(oracle::random_mask(gen, {10, 10, 10}, 0.5));
  const auto h = make_oracle(gt, 4);
  const Volume p = h.predict({8, -1, 3}, blank(4));
  CHECK(p.kind() == VolumeKind::probability);
  for (std::int64_t i = 0; i < 4; ++i)
    for (std::int64_t j = 0; j < 4; ++j)
      for (std::int64_t k = 0; k < 4; ++k) {
        const Index3 g{8 + i, -1 + j, 3 + k};
        const float want = gt->in_bounds(g[0], g[1], g[2]) ? gt->at(g[0], g[1], g[2]) : 0.0f;
        CHECK(p.at(i, j, k) == want);
      }
  CHECK_THROWS_AS(h.predict({0, 0, 0}, blank(5)), std::invalid_argument);
}

TEST_CASE("handle clamps outputs and rejects NaN") {
  PredictorHandle hi("hi", 2, Backend::constant, std::make_shared<Returns>(1.5f));
  CHECK(hi.predict({0, 0, 0}, blank(2)).sum() == 8.0);
  PredictorHandle lo("lo", 2, Backend::constant, std::make_shared<Returns>(-3.0f));
  CHECK(lo.predict({0, 0, 0}, blank(2)).sum() == 0.0);
  PredictorHandle nan("nan", 2, Backend::constant,
                      std::make_shared<Returns>(std::numeric_limits<float>::quiet_NaN()));
  CHECK_THROWS_AS(nan.predict({0, 0, 0}, blank(2)), PredictorError);
  CHECK(make_constant(0.3f, 3).predict({1, 2, 3}, blank(3)).at(2, 2, 2) == 0.3f);
}

TEST_CASE("per-voxel false positives follow a binomial law") {
  // n = 32^3 GT-negative voxels, p = 0.1: mean n p, sd sqrt(n p (1 - p)).
  const std::int64_t w = 32;
  NoiseSpec noise;
  noise.per_voxel_fp = 0.1;
  const auto h = make_noisy_oracle(empty_gt(64), w, noise, 5);
  const double n = double(w * w * w), mean = n * 0.1, sd = std::sqrt(n * 0.1 * 0.9);
  for (const Index3 o : {Index3{0, 0, 0}, Index3{32, 0, 16}, Index3{5, 7, 9}}) {
    const double fp = double(h.predict(o, blank(w)).count_nonzero());
    CHECK(std::abs(fp - mean) < 3.0 * sd);
  }
}

TEST_CASE("per-voxel flips of different models are independent") {
  NoiseSpec noise;
  noise.per_voxel_fp = 0.1;
  const auto a = make_noisy_oracle(empty_gt(48), 48, noise, 1);
  const auto b = make_noisy_oracle(empty_gt(48), 48, noise, 2);
  const Volume pa = a.predict({0, 0, 0}, blank(48)), pb = b.predict({0, 0, 0}, blank(48));
  double both = 0;
  for (std::size_t n = 0; n < pa.size(); ++n) both += pa[n] * pb[n];
  const double N = double(pa.size()), mean = N * 0.01, sd = std::sqrt(N * 0.01 * 0.99);
  CHECK(std::abs(both - mean) < 3.0 * sd);
}

TEST_CASE("overlapping windows see the same per-voxel noise") {
  NoiseSpec noise;
  noise.per_voxel_fp = 0.2;
  const auto h = make_noisy_oracle(empty_gt(40), 16, noise, 7, 3);
  const Volume p0 = h.predict({0, 0, 0}, blank(16)), p1 = h.predict({6, 3, 0}, blank(16));
  bool same = true;
  for (std::int64_t i = 6; i < 16; ++i)
    for (std::int64_t j = 3; j < 16; ++j)
      for (std::int64_t k = 0; k < 16; ++k) same &= p0.at(i, j, k) == p1.at(i - 6, j - 3, k);
  CHECK(same);
}

TEST_CASE("noise depends on seeds and position, not call order") {
  NoiseSpec noise;
  noise.per_voxel_fp = 0.05;
  noise.fp_blob_rate = 2.0;
  noise.fn_hole_rate = 2.0;
  std::mt19937 gen(4);
  auto gt = std::make_shared<Volume>(oracle::random_mask(gen, {30, 30, 30}, 0.5));
  const auto h = make_noisy_oracle(gt, 12, noise, 11, 99);
  const Volume first = h.predict({3, 4, 5}, blank(12));
  h.predict({0, 0, 0}, blank(12));
  CHECK(h.predict({3, 4, 5}, blank(12)) == first);
  CHECK(make_noisy_oracle(gt, 12, noise, 11, 99).predict({3, 4, 5}, blank(12)) == first);
  CHECK_FALSE(make_noisy_oracle(gt, 12, noise, 12, 99).predict({3, 4, 5}, blank(12)) == first);
  CHECK_FALSE(make_noisy_oracle(gt, 12, noise, 11, 98).predict({3, 4, 5}, blank(12)) == first);
  NoiseSpec shifted = noise;
  shifted.seed_offset = 1;
  CHECK_FALSE(make_noisy_oracle(gt, 12, shifted, 11, 99).predict({3, 4, 5}, blank(12)) == first);
}

TEST_CASE("blob size and count match an independent simulation") {
  // Reference: draw the same distribution (Poisson count, uniform center in
  // the window, uniform radius) with a different generator and count voxel
  // centers inside each sphere.
  const std::int64_t w = 24;
  const double rate = 0.5, rmin = 2.0, rmax = 4.0;
  const int trials = 1500;
  NoiseSpec noise;
  noise.fp_blob_rate = rate;
  noise.fp_blob_radius_min = rmin;
  noise.fp_blob_radius_max = rmax;
  const auto h = make_noisy_oracle(empty_gt(w), w, noise, 21);

  double painted = 0;
  int empty_windows = 0;
  for (int t = 0; t < trials; ++t) {
    const auto n = h.predict({t, 0, 0}, blank(w)).count_nonzero();
    painted += double(n);
    empty_windows += n == 0;
  }

  std::mt19937_64 gen(12345);
  std::poisson_distribution<int> count(rate);
  std::uniform_real_distribution<double> pos(0.0, double(w)), rad(rmin, rmax);
  double ref = 0;
  for (int t = 0; t < 20000; ++t) {
    Volume m({w, w, w}, {1, 1, 1}, VolumeKind::mask);
    const int blobs = count(gen);
    for (int b = 0; b < blobs; ++b) {
      const double ci = pos(gen), cj = pos(gen), ck = pos(gen), r = rad(gen);
      for (std::int64_t i = 0; i < w; ++i)
        for (std::int64_t j = 0; j < w; ++j)
          for (std::int64_t k = 0; k < w; ++k) {
            const double di = i + 0.5 - ci, dj = j + 0.5 - cj, dk = k + 0.5 - ck;
            if (std::abs(di) > r || std::abs(dj) > r || std::abs(dk) > r) continue;
            if (di * di + dj * dj + dk * dk <= r * r) m.at(i, j, k) = 1.0f;
          }
    }
    ref += double(m.count_nonzero());
    if (t == 2000) break;  // enough for a 10% tolerance
  }
  const double ref_mean = ref / 2001.0, mean = painted / trials;
  CHECK(mean == doctest::Approx(ref_mean).epsilon(0.12));
  const double p0 = std::exp(-rate), sd = std::sqrt(p0 * (1 - p0) / trials);
  CHECK(std::abs(double(empty_windows) / trials - p0) < 3.5 * sd);
}

TEST_CASE("holes only delete foreground") {
  NoiseSpec noise;
  noise.fn_hole_rate = 3.0;
  auto full = std::make_shared<Volume>(Index3{20, 20, 20}, Spacing3{1, 1, 1}, VolumeKind::mask, 1.0f);
  const auto h = make_noisy_oracle(full, 20, noise, 2);
  std::size_t deleted = 0;
  for (int t = 0; t < 20; ++t) deleted += 8000 - h.predict({t, 0, 0}, blank(20)).count_nonzero();
  CHECK(deleted > 0);
  CHECK(make_noisy_oracle(empty_gt(20), 20, noise, 2).predict({0, 0, 0}, blank(20)).sum() == 0.0);
}

TEST_CASE("invalid noise specs are rejected") {
  NoiseSpec bad;
  bad.per_voxel_fp = 1.0;
  CHECK_THROWS(make_noisy_oracle(empty_gt(4), 4, bad, 0));
  bad = NoiseSpec{};
  bad.fp_blob_rate = -1;
  CHECK_THROWS(make_noisy_oracle(empty_gt(4), 4, bad, 0));
  bad = NoiseSpec{};
  bad.fp_blob_radius_min = 5;
  CHECK_THROWS(make_noisy_oracle(empty_gt(4), 4, bad, 0));
}

TEST_CASE("external predictor") {
  SUBCASE("constant server") {
    const auto h = make_external(echo({"--value", "0.25"}), 6, 5000ms);
    CHECK(h.backend() == Backend::external);
    const Volume p = h.predict({1, 2, 3}, blank(6));
    CHECK(p.sum() == doctest::Approx(0.25 * 216));
    CHECK(h.predict({0, 0, 0}, blank(6)).sum() == doctest::Approx(0.25 * 216));
  }
  SUBCASE("mirror returns the patch, clamped") {
    const auto h = make_external(echo({"--mirror"}), 3, 5000ms);
    Volume patch = blank(3);
    for (std::size_t n = 0; n < patch.size(); ++n) patch[n] = float(n) / 20.0f;
    const Volume p = h.predict({0, 0, 0}, patch);
    CHECK(p[4] == patch[4]);
    CHECK(p[26] == 1.0f);
  }
  SUBCASE("window mismatch fails the handshake") {
    CHECK_THROWS_AS(make_external(echo({"--advertise", "8"}), 6, 5000ms), PredictorError);
  }
  SUBCASE("bad magic fails the handshake") {
    CHECK_THROWS_AS(make_external(echo({"--bad-magic"}), 6, 5000ms), PredictorError);
  }
  SUBCASE("missing program") {
    CHECK_THROWS_AS(make_external({"/nonexistent/predictor"}, 6, 2000ms), PredictorError);
  }
  SUBCASE("a dying server names the window and stays dead") {
    const auto h = make_external(echo({"--die-after", "1"}), 4, 5000ms);
    h.predict({0, 0, 0}, blank(4));
    try {
      h.predict({4, 8, 12}, blank(4));
      FAIL("expected PredictorError");
    } catch (const PredictorError& e) {
      REQUIRE(e.origin());
      CHECK(*e.origin() == Index3{4, 8, 12});
      CHECK(std::string(e.what()).find("4, 8, 12") != std::string::npos);
    }
    CHECK_THROWS_AS(h.predict({0, 0, 0}, blank(4)), PredictorError);
  }
  SUBCASE("timeout") {
    const auto h = make_external(echo({"--sleep-ms", "3000"}), 4, 200ms);
    CHECK_THROWS_AS(h.predict({0, 0, 0}, blank(4)), PredictorError);
  }
}
