#include "fbe/morphology.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace fbe {

namespace {

void require_same_dims(const Volume& a, const Volume& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": dims mismatch");
}

// Disjoint sets over provisional labels. The root of every set is its
// smallest member, so unions never depend on the order they are issued in.
class DisjointSet {
 public:
  std::uint32_t make() {
    parent_.push_back(static_cast<std::uint32_t>(parent_.size()));
    return parent_.back();
  }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent_[b] = a;
    else parent_[a] = b;
  }

 private:
  std::vector<std::uint32_t> parent_;
};

// Neighbors preceding the current voxel in scan order.
std::vector<Index3> backward_offsets(Connectivity c) {
  std::vector<Index3> out;
  for (std::int64_t di = -1; di <= 0; ++di)
    for (std::int64_t dj = -1; dj <= 1; ++dj)
      for (std::int64_t dk = -1; dk <= 1; ++dk) {
        if (di == 0 && (dj > 0 || (dj == 0 && dk >= 0))) continue;
        const int manhattan = int(std::abs(di) + std::abs(dj) + std::abs(dk));
        if (c == Connectivity::six && manhattan != 1) continue;
        out.push_back({di, dj, dk});
      }
  return out;
}

}  // namespace

Volume threshold(const Volume& p, double alpha) {
  Volume out(p.dims(), p.spacing(), VolumeKind::mask);
  const auto src = p.data();
  auto dst = out.data();
  const auto n = static_cast<std::int64_t>(src.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) dst[i] = double(src[i]) >= alpha ? 1.0f : 0.0f;
  return out;
}

Volume threshold_strict(const Volume& p, double tau) {
  Volume out(p.dims(), p.spacing(), VolumeKind::mask);
  const auto src = p.data();
  auto dst = out.data();
  const auto n = static_cast<std::int64_t>(src.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) dst[i] = double(src[i]) > tau ? 1.0f : 0.0f;
  return out;
}

LabeledComponents connected_components(const Volume& mask, Connectivity connectivity) {
  const Index3& d = mask.dims();
  const auto offsets = backward_offsets(connectivity);

  // Pass 1: provisional labels (0 reserved for background).
  std::vector<std::uint32_t> provisional(mask.size(), 0);
  DisjointSet sets;
  sets.make();
  for (std::int64_t i = 0; i < d[0]; ++i)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t k = 0; k < d[2]; ++k) {
        const std::size_t here = mask.offset(i, j, k);
        if (mask[here] == 0.0f) continue;
        std::uint32_t label = 0;
        for (const auto& o : offsets) {
          const std::int64_t ni = i + o[0], nj = j + o[1], nk = k + o[2];
          if (!mask.in_bounds(ni, nj, nk)) continue;
          const std::uint32_t nl = provisional[mask.offset(ni, nj, nk)];
          if (nl == 0) continue;
          if (label == 0) label = nl;
          else if (nl != label) sets.unite(label, nl);
        }
        provisional[here] = label != 0 ? label : sets.make();
      }

  // Pass 2: final ids in first-encounter order.
  LabeledComponents out{Volume(d, mask.spacing(), VolumeKind::label), {}};
  std::vector<std::uint32_t> final_id;
  auto labels = out.labels.data();
  for (std::size_t n = 0; n < provisional.size(); ++n) {
    if (provisional[n] == 0) continue;
    const std::uint32_t root = sets.find(provisional[n]);
    if (root >= final_id.size()) final_id.resize(root + 1, 0);
    if (final_id[root] == 0) {
      out.sizes.push_back(0);
      final_id[root] = static_cast<std::uint32_t>(out.sizes.size());
    }
    const std::uint32_t id = final_id[root];
    labels[n] = static_cast<float>(id);
    ++out.sizes[id - 1];
  }
  return out;
}

Volume largest_component(const LabeledComponents& components) {
  Volume out(components.labels.dims(), components.labels.spacing(), VolumeKind::mask);
  if (components.sizes.empty()) return out;
  const auto best = std::max_element(components.sizes.begin(), components.sizes.end());
  const auto keep = static_cast<float>(std::distance(components.sizes.begin(), best) + 1);
  const auto src = components.labels.data();
  auto dst = out.data();
  const auto n = static_cast<std::int64_t>(src.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) dst[i] = src[i] == keep ? 1.0f : 0.0f;
  return out;
}

BoundingBox bounding_box(const Volume& mask) {
  const Index3& d = mask.dims();
  constexpr auto big = std::numeric_limits<std::int64_t>::max();
  BoundingBox box{{big, big, big}, {-1, -1, -1}};
  bool any = false;
  for (std::int64_t i = 0; i < d[0]; ++i)
    for (std::int64_t j = 0; j < d[1]; ++j) {
      const float* row = &mask.data()[mask.offset(i, j, 0)];
      std::int64_t first = -1, last = -1;
      for (std::int64_t k = 0; k < d[2]; ++k)
        if (row[k] != 0.0f) {
          if (first < 0) first = k;
          last = k;
        }
      if (first < 0) continue;
      any = true;
      box.min = {std::min(box.min[0], i), std::min(box.min[1], j), std::min(box.min[2], first)};
      box.max = {std::max(box.max[0], i + 1), std::max(box.max[1], j + 1),
                 std::max(box.max[2], last + 1)};
    }
  if (!any) throw EmptyMaskError("bounding_box: mask is empty");
  return box;
}

Volume majority_vote(std::span<const Volume> masks) {
  if (masks.empty()) throw std::invalid_argument("majority_vote: no masks");
  for (const auto& m : masks) require_same_dims(masks.front(), m, "majority_vote");
  const int need = static_cast<int>(masks.size() / 2 + 1);
  Volume out(masks.front().dims(), masks.front().spacing(), VolumeKind::mask);
  auto dst = out.data();
  const auto n = static_cast<std::int64_t>(dst.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    int votes = 0;
    for (const auto& m : masks) votes += m[static_cast<std::size_t>(i)] != 0.0f;
    dst[i] = votes >= need ? 1.0f : 0.0f;
  }
  return out;
}

Volume mask_union(const Volume& a, const Volume& b) {
  require_same_dims(a, b, "mask_union");
  Volume out(a.dims(), a.spacing(), VolumeKind::mask);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (a[i] != 0.0f || b[i] != 0.0f) ? 1.0f : 0.0f;
  return out;
}

Volume mask_intersection(const Volume& a, const Volume& b) {
  require_same_dims(a, b, "mask_intersection");
  Volume out(a.dims(), a.spacing(), VolumeKind::mask);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (a[i] != 0.0f && b[i] != 0.0f) ? 1.0f : 0.0f;
  return out;
}

}  // namespace fbe
