#include <doctest.h>

#include <random>

#include "fbe/morphology.hpp"
#include "oracles.hpp"

using namespace fbe;

TEST_CASE("threshold is inclusive, threshold_strict is not") {
  Volume p({1, 1, 4}, {1, 1, 1}, VolumeKind::probability, std::vector<float>{0.0f, 0.2f, 0.5f, 1.0f});
  const Volume a = threshold(p, 0.2);
  CHECK(a.kind() == VolumeKind::mask);
  CHECK(a.data()[0] == 0.0f);
  CHECK(a.data()[1] == 1.0f);
  const Volume b = threshold_strict(p, 0.0);
  CHECK(b.data()[0] == 0.0f);
  CHECK(b.data()[1] == 1.0f);
  CHECK(threshold_strict(p, 0.5).data()[2] == 0.0f);
  CHECK(threshold(p, 0.5).data()[2] == 1.0f);
}

TEST_CASE("diagonal neighbors join under 26 but not under 6") {
  Volume m({5, 5, 5}, {1, 1, 1}, VolumeKind::mask);
  m.at(0, 0, 0) = 1;
  m.at(1, 1, 1) = 1;
  m.at(2, 2, 2) = 1;
  m.at(4, 0, 3) = 1;
  m.at(4, 0, 4) = 1;
  auto c26 = connected_components(m, Connectivity::twenty_six);
  auto c6 = connected_components(m, Connectivity::six);
  CHECK(c26.count() == 2);
  CHECK(c6.count() == 4);
  CHECK(c26.sizes[0] == 3);
  CHECK(c26.labels.at(2, 2, 2) == 1.0f);
  CHECK(c26.labels.at(4, 0, 4) == 2.0f);
}

TEST_CASE("connected components match flood fill on random masks") {
  std::mt19937 gen(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const Index3 dims{std::int64_t(gen() % 12 + 1), std::int64_t(gen() % 12 + 1),
                      std::int64_t(gen() % 12 + 1)};
    const double density = 0.1 + 0.6 * double(gen() % 100) / 100.0;
    const Volume m = oracle::random_mask(gen, dims, density);
    for (int conn : {6, 26}) {
      std::int32_t count = 0;
      const auto expected = oracle::flood_fill_labels(m, conn, &count);
      const auto got = connected_components(m, Connectivity(conn));
      REQUIRE(got.count() == std::size_t(count));
      bool same = true;
      for (std::size_t n = 0; n < m.size(); ++n) same &= got.labels[n] == float(expected[n]);
      CHECK(same);
      std::vector<std::int64_t> sizes(std::size_t(count), 0);
      for (auto l : expected)
        if (l) ++sizes[std::size_t(l - 1)];
      CHECK(got.sizes == sizes);
    }
  }
}

TEST_CASE("largest component prefers the smaller label on ties") {
  Volume m({1, 1, 7}, {1, 1, 1}, VolumeKind::mask, std::vector<float>{1, 1, 0, 1, 1, 0, 1});
  const auto cc = connected_components(m);
  const Volume lcc = largest_component(cc);
  CHECK(lcc.data()[0] == 1.0f);
  CHECK(lcc.data()[1] == 1.0f);
  CHECK(lcc.data()[3] == 0.0f);
  CHECK(lcc.count_nonzero() == 2);
  CHECK(largest_component(connected_components(Volume({2, 2, 2}, {1, 1, 1}, VolumeKind::mask)))
            .count_nonzero() == 0);
}

TEST_CASE("bounding box") {
  Volume m({6, 7, 8}, {1, 1, 1}, VolumeKind::mask);
  m.at(1, 5, 2) = 1;
  m.at(4, 2, 6) = 1;
  CHECK(bounding_box(m) == BoundingBox{{1, 2, 2}, {5, 6, 7}});
  CHECK_THROWS_AS(bounding_box(Volume({2, 2, 2}, {1, 1, 1}, VolumeKind::mask)), EmptyMaskError);
}

TEST_CASE("majority vote matches counting for 1 to 6 masks") {
  std::mt19937 gen(9);
  for (std::size_t n = 1; n <= 6; ++n) {
    std::vector<Volume> masks;
    for (std::size_t i = 0; i < n; ++i) masks.push_back(oracle::random_mask(gen, {5, 6, 7}, 0.5));
    CHECK(majority_vote(masks) == oracle::vote(masks));
  }
  // Two of four is a tie and does not pass.
  std::vector<Volume> tie(4, Volume({1, 1, 1}, {1, 1, 1}, VolumeKind::mask));
  tie[0][0] = tie[1][0] = 1.0f;
  CHECK(majority_vote(tie)[0] == 0.0f);
  CHECK_THROWS(majority_vote(std::vector<Volume>{}));
}

TEST_CASE("union and intersection") {
  Volume a({1, 1, 4}, {1, 1, 1}, VolumeKind::mask, std::vector<float>{1, 1, 0, 0});
  Volume b({1, 1, 4}, {1, 1, 1}, VolumeKind::mask, std::vector<float>{0, 1, 1, 0});
  CHECK(mask_union(a, b).count_nonzero() == 3);
  CHECK(mask_intersection(a, b).count_nonzero() == 1);
  CHECK_THROWS(mask_union(a, Volume({1, 1, 3}, {1, 1, 1}, VolumeKind::mask)));
}
