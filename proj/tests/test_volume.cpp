#include <doctest.h>

#include <cmath>
#include <random>

#include "fbe/volume.hpp"

using namespace fbe;

namespace {

Volume ramp(const Index3& dims, const Spacing3& spacing) {
  Volume v(dims, spacing, VolumeKind::intensity);
  for (std::int64_t i = 0; i < dims[0]; ++i)
    for (std::int64_t j = 0; j < dims[1]; ++j)
      for (std::int64_t k = 0; k < dims[2]; ++k) v.at(i, j, k) = float(i * 10000 + j * 100 + k);
  return v;
}

}  // namespace

TEST_CASE("linear offset puts axis 2 fastest") {
  Volume v({2, 3, 4}, {1, 1, 1}, VolumeKind::intensity);
  CHECK(v.offset(0, 0, 1) == 1);
  CHECK(v.offset(0, 1, 0) == 4);
  CHECK(v.offset(1, 0, 0) == 12);
  CHECK(v.size() == 24);
  CHECK_THROWS_AS(Volume({0, 1, 1}, {1, 1, 1}, VolumeKind::mask), std::invalid_argument);
  CHECK_THROWS_AS(Volume({1, 1, 1}, {1, 0, 1}, VolumeKind::mask), std::invalid_argument);
  CHECK_THROWS_AS(Volume({2, 2, 2}, {1, 1, 1}, VolumeKind::mask, std::vector<float>(7)),
                  std::invalid_argument);
}

TEST_CASE("kind invariants") {
  Volume m({2, 2, 2}, {1, 1, 1}, VolumeKind::mask);
  CHECK(m.values_match_kind());
  m[3] = 0.5f;
  CHECK_FALSE(m.values_match_kind());
  Volume l({2, 2, 2}, {1, 1, 1}, VolumeKind::label, 7.0f);
  CHECK(l.values_match_kind());
  l[0] = -1.0f;
  CHECK_FALSE(l.values_match_kind());
}

TEST_CASE("bounding box intersect") {
  BoundingBox a{{0, 0, 0}, {10, 10, 10}}, b{{5, 8, -3}, {20, 9, 4}};
  auto r = intersect(a, b);
  REQUIRE(r);
  CHECK(*r == BoundingBox{{5, 8, 0}, {10, 9, 4}});
  CHECK_FALSE(intersect(a, BoundingBox{{10, 0, 0}, {12, 2, 2}}));
  CHECK(a.contains(*r));
  CHECK(a.volume() == 1000);
}

TEST_CASE("resample at the same spacing is the identity") {
  Volume v = ramp({5, 6, 7}, {1.5, 2, 0.5});
  CHECK(resample(v, {1.5, 2, 0.5}, Interp::linear) == v);
  CHECK(resample(v, {1.5, 2, 0.5}, Interp::nearest) == v);
}

TEST_CASE("resample dims round half up") {
  Volume v({256, 256, 60}, {1, 1, 3}, VolumeKind::intensity);
  CHECK(resample(v, {1, 1, 1}, Interp::linear).dims() == Index3{256, 256, 180});
  Volume w({5, 3, 7}, {1.5, 0.5, 1}, VolumeKind::intensity);
  // 7.5 -> 8, 1.5 -> 2, 7 -> 7
  CHECK(resample(w, {1, 1, 1}, Interp::linear).dims() == Index3{8, 2, 7});
}

TEST_CASE("linear resampling reproduces an affine field away from the edges") {
  // f is affine in physical position, so trilinear interpolation must be exact
  // wherever the source coordinate is not clamped.
  const Index3 in{12, 10, 9};
  const Spacing3 sp{1.0, 2.0, 3.0};
  auto phys = [&](int a, double idx, std::int64_t n, double s) { return (idx - 0.5 * double(n - 1)) * s; };
  Volume v(in, sp, VolumeKind::intensity);
  auto f = [](double x, double y, double z) { return 0.5 * x - 0.25 * y + 0.125 * z + 3.0; };
  for (std::int64_t i = 0; i < in[0]; ++i)
    for (std::int64_t j = 0; j < in[1]; ++j)
      for (std::int64_t k = 0; k < in[2]; ++k)
        v.at(i, j, k) = float(f(phys(0, double(i), in[0], sp[0]), phys(1, double(j), in[1], sp[1]),
                                phys(2, double(k), in[2], sp[2])));
  const Volume out = resample(v, {1, 1, 1}, Interp::linear);
  const Index3 od = out.dims();
  CHECK(od == Index3{12, 20, 27});
  int checked = 0;
  for (std::int64_t i = 0; i < od[0]; ++i)
    for (std::int64_t j = 2; j < od[1] - 2; ++j)
      for (std::int64_t k = 2; k < od[2] - 2; ++k) {
        const double x = phys(0, double(i), od[0], 1), y = phys(1, double(j), od[1], 1),
                     z = phys(2, double(k), od[2], 1);
        CHECK(out.at(i, j, k) == doctest::Approx(f(x, y, z)).epsilon(1e-5));
        ++checked;
      }
  CHECK(checked > 1000);
}

TEST_CASE("nearest resampling keeps label values and linear is refused") {
  std::mt19937 gen(3);
  Volume l({7, 8, 9}, {1.3, 0.7, 2.0}, VolumeKind::label);
  for (auto& x : l.data()) x = float(gen() % 5);
  const Volume r = resample(l, {1, 1, 1}, Interp::nearest);
  CHECK(r.kind() == VolumeKind::label);
  CHECK(r.values_match_kind());
  for (float x : r.data()) CHECK(x <= 4.0f);
  CHECK_THROWS_AS(resample(l, {1, 1, 1}, Interp::linear), std::invalid_argument);
  Volume m({4, 4, 4}, {1, 1, 1}, VolumeKind::mask);
  CHECK_THROWS_AS(resample(m, {2, 2, 2}, Interp::linear), std::invalid_argument);
}

TEST_CASE("conform_cube pads and crops symmetrically with the extra voxel high") {
  Volume v = ramp({5, 9, 8}, {1, 1, 1});
  const Volume c = conform_cube(v, 8);
  CHECK(c.dims() == Index3{8, 8, 8});
  // axis 0: pad 3 -> 1 low, 2 high. axis 1: crop 1 -> drops 0 low, 1 high. axis 2 untouched.
  CHECK(c.at(0, 0, 0) == 0.0f);
  CHECK(c.at(1, 0, 0) == v.at(0, 0, 0));
  CHECK(c.at(5, 7, 7) == v.at(4, 7, 7));
  CHECK(c.at(6, 3, 3) == 0.0f);
  CHECK(c.at(7, 3, 3) == 0.0f);
  const Volume odd_crop = conform_cube(ramp({11, 8, 8}, {1, 1, 1}), 8);
  // crop 3 -> 1 low, 2 high
  CHECK(odd_crop.at(0, 0, 0) == float(1 * 10000));
  CHECK(odd_crop.at(7, 0, 0) == float(8 * 10000));
}

TEST_CASE("unconform_cube inverts conform_cube on the kept region") {
  std::mt19937 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Index3 dims{std::int64_t(gen() % 20 + 3), std::int64_t(gen() % 20 + 3),
                      std::int64_t(gen() % 20 + 3)};
    const std::int64_t side = std::int64_t(gen() % 16 + 4);
    Volume v(dims, {1, 1, 1}, VolumeKind::intensity);
    for (auto& x : v.data()) x = float(gen() % 1000) + 1.0f;
    const Volume back = unconform_cube(conform_cube(v, side), dims);
    for (std::int64_t i = 0; i < dims[0]; ++i)
      for (std::int64_t j = 0; j < dims[1]; ++j)
        for (std::int64_t k = 0; k < dims[2]; ++k) {
          const float b = back.at(i, j, k);
          CHECK((b == v.at(i, j, k) || b == 0.0f));
        }
    // Everything survives when nothing is cropped.
    if (dims[0] <= side && dims[1] <= side && dims[2] <= side) CHECK(back == v);
  }
}

TEST_CASE("extract_patch reads zeros outside and pads symmetrically") {
  Volume v = ramp({4, 4, 4}, {1, 1, 1});
  const Volume p = extract_patch(v, {{-1, 0, 2}, {2, 2, 6}});
  CHECK(p.dims() == Index3{3, 2, 4});
  CHECK(p.at(0, 0, 0) == 0.0f);
  CHECK(p.at(1, 1, 1) == v.at(0, 1, 3));
  CHECK(p.at(2, 0, 2) == 0.0f);
  const Volume padded = extract_patch(v, {{1, 1, 1}, {3, 3, 3}}, Index3{5, 4, 2});
  CHECK(padded.at(1, 1, 0) == v.at(1, 1, 1));
  CHECK(padded.at(2, 2, 1) == v.at(2, 2, 2));
  CHECK(padded.at(0, 1, 0) == 0.0f);
  CHECK_THROWS_AS(extract_patch(v, {{5, 5, 5}, {6, 6, 6}}), std::invalid_argument);
  CHECK_THROWS_AS(extract_patch(v, {{0, 0, 0}, {3, 3, 3}}, Index3{2, 3, 3}), std::invalid_argument);
}

TEST_CASE("minmax normalization") {
  Volume v({1, 1, 3}, {1, 1, 1}, VolumeKind::intensity, std::vector<float>{-2, 0, 6});
  const Volume n = minmax_normalize(v);
  CHECK(n[0] == 0.0f);
  CHECK(n[1] == doctest::Approx(0.25));
  CHECK(n[2] == 1.0f);
  CHECK(minmax_normalize(Volume({2, 2, 2}, {1, 1, 1}, VolumeKind::intensity, 4.0f)).sum() == 0.0);
}

TEST_CASE("conformer inverse returns a mask to its native grid") {
  SUBCASE("isotropic, smaller than the cube") {
    std::mt19937 gen(5);
    Volume m({30, 25, 40}, {1, 1, 1}, VolumeKind::mask);
    for (auto& x : m.data()) x = float(gen() % 2);
    Conformer c(m.dims(), m.spacing(), 1.0, 48);
    const Volume fwd = c.forward(m, Interp::nearest);
    CHECK(fwd.dims() == Index3{48, 48, 48});
    CHECK(c.inverse(fwd) == m);
  }
  SUBCASE("anisotropic grid is restored exactly for slab-aligned masks") {
    // Whole voxels at 3 mm map onto three 1 mm voxels each, so nearest
    // neighbor round trips them.
    Volume m({20, 20, 10}, {1, 1, 3}, VolumeKind::mask);
    for (std::int64_t i = 4; i < 15; ++i)
      for (std::int64_t j = 6; j < 12; ++j)
        for (std::int64_t k = 2; k < 8; ++k) m.at(i, j, k) = 1.0f;
    Conformer c(m.dims(), m.spacing(), 1.0, 32);
    CHECK(c.resampled_dims() == Index3{20, 20, 30});
    const Volume back = c.inverse(c.forward(m, Interp::nearest));
    CHECK(back.dims() == m.dims());
    CHECK(back.spacing() == m.spacing());
    CHECK(back == m);
  }
}
