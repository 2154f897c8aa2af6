#include "fbe/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fbe {

const char* to_string(VolumeKind kind) {
  switch (kind) {
    case VolumeKind::intensity: return "intensity";
    case VolumeKind::label: return "label";
    case VolumeKind::probability: return "probability";
    case VolumeKind::mask: return "mask";
  }
  return "unknown";
}

std::int64_t voxel_count(const Index3& dims) { return dims[0] * dims[1] * dims[2]; }

std::optional<BoundingBox> intersect(const BoundingBox& a, const BoundingBox& b) {
  BoundingBox r;
  for (int ax = 0; ax < 3; ++ax) {
    r.min[ax] = std::max(a.min[ax], b.min[ax]);
    r.max[ax] = std::min(a.max[ax], b.max[ax]);
    if (r.max[ax] <= r.min[ax]) return std::nullopt;
  }
  return r;
}

namespace {

void check_dims(const Index3& dims) {
  for (auto d : dims)
    if (d <= 0) throw std::invalid_argument("volume dims must be positive");
}

void check_spacing(const Spacing3& spacing) {
  for (auto s : spacing)
    if (!(s > 0.0) || !std::isfinite(s))
      throw std::invalid_argument("volume spacing must be strictly positive");
}

}  // namespace

Volume::Volume(Index3 dims, Spacing3 spacing, VolumeKind kind, float fill)
    : dims_(dims), spacing_(spacing), kind_(kind) {
  check_dims(dims_);
  check_spacing(spacing_);
  data_.assign(static_cast<std::size_t>(voxel_count(dims_)), fill);
}

Volume::Volume(Index3 dims, Spacing3 spacing, VolumeKind kind, std::vector<float> data)
    : dims_(dims), spacing_(spacing), kind_(kind), data_(std::move(data)) {
  check_dims(dims_);
  check_spacing(spacing_);
  if (data_.size() != static_cast<std::size_t>(voxel_count(dims_)))
    throw std::invalid_argument("volume data length does not match dims");
}

void Volume::set_spacing(const Spacing3& spacing) {
  check_spacing(spacing);
  spacing_ = spacing;
}

std::size_t Volume::count_nonzero() const {
  std::size_t n = 0;
  for (float v : data_) n += (v != 0.0f);
  return n;
}

double Volume::sum() const {
  double s = 0.0;
  for (float v : data_) s += v;
  return s;
}

bool Volume::values_match_kind() const {
  switch (kind_) {
    case VolumeKind::mask:
      return std::all_of(data_.begin(), data_.end(), [](float v) { return v == 0.0f || v == 1.0f; });
    case VolumeKind::label:
      return std::all_of(data_.begin(), data_.end(),
                         [](float v) { return v >= 0.0f && std::floor(v) == v; });
    default:
      return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
  }
}

// ---------------------------------------------------------------------------
// Resampling

namespace {

std::int64_t round_half_up(double x) { return static_cast<std::int64_t>(std::floor(x + 0.5)); }

// Continuous source index for output index j, aligning field-of-view centers.
struct AxisMap {
  double center_in;
  double center_out;
  double ratio;
  double operator()(std::int64_t j) const { return center_in + (double(j) - center_out) * ratio; }
};

}  // namespace

Volume resample(const Volume& vol, const Spacing3& target_spacing, Interp interp) {
  check_spacing(target_spacing);
  Index3 out_dims;
  for (int a = 0; a < 3; ++a)
    out_dims[a] = std::max<std::int64_t>(1, round_half_up(double(vol.dims()[a]) * vol.spacing()[a] /
                                                           target_spacing[a]));
  return resample_to(vol, out_dims, target_spacing, interp);
}

Volume resample_to(const Volume& vol, const Index3& out_dims, const Spacing3& target_spacing,
                   Interp interp) {
  check_dims(out_dims);
  check_spacing(target_spacing);
  if (interp == Interp::linear &&
      (vol.kind() == VolumeKind::label || vol.kind() == VolumeKind::mask))
    throw std::invalid_argument(std::string("linear interpolation is not allowed for ") +
                                to_string(vol.kind()) + " volumes");

  const Index3& in_dims = vol.dims();
  std::array<AxisMap, 3> map;
  for (int a = 0; a < 3; ++a)
    map[a] = {0.5 * double(in_dims[a] - 1), 0.5 * double(out_dims[a] - 1),
              target_spacing[a] / vol.spacing()[a]};

  Volume out(out_dims, target_spacing, vol.kind());
  const std::int64_t n0 = out_dims[0], n1 = out_dims[1], n2 = out_dims[2];

  if (interp == Interp::nearest) {
    // Per-axis source index tables.
    std::array<std::vector<std::int64_t>, 3> src;
    for (int a = 0; a < 3; ++a) {
      src[a].resize(static_cast<std::size_t>(out_dims[a]));
      for (std::int64_t j = 0; j < out_dims[a]; ++j)
        src[a][j] = std::clamp<std::int64_t>(round_half_up(map[a](j)), 0, in_dims[a] - 1);
    }
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n0; ++i)
      for (std::int64_t j = 0; j < n1; ++j)
        for (std::int64_t k = 0; k < n2; ++k)
          out.at(i, j, k) = vol.at(src[0][i], src[1][j], src[2][k]);
    return out;
  }

  struct Tap {
    std::int64_t lo, hi;
    double frac;
  };
  std::array<std::vector<Tap>, 3> taps;
  for (int a = 0; a < 3; ++a) {
    taps[a].resize(static_cast<std::size_t>(out_dims[a]));
    const double top = double(in_dims[a] - 1);
    for (std::int64_t j = 0; j < out_dims[a]; ++j) {
      double x = std::clamp(map[a](j), 0.0, top);
      auto lo = static_cast<std::int64_t>(std::floor(x));
      auto hi = std::min(lo + 1, in_dims[a] - 1);
      taps[a][j] = {lo, hi, x - double(lo)};
    }
  }
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n0; ++i) {
    const Tap& ti = taps[0][i];
    for (std::int64_t j = 0; j < n1; ++j) {
      const Tap& tj = taps[1][j];
      for (std::int64_t k = 0; k < n2; ++k) {
        const Tap& tk = taps[2][k];
        auto lerp_k = [&](std::int64_t a, std::int64_t b) {
          return double(vol.at(a, b, tk.lo)) * (1.0 - tk.frac) + double(vol.at(a, b, tk.hi)) * tk.frac;
        };
        double c0 = lerp_k(ti.lo, tj.lo) * (1.0 - tj.frac) + lerp_k(ti.lo, tj.hi) * tj.frac;
        double c1 = lerp_k(ti.hi, tj.lo) * (1.0 - tj.frac) + lerp_k(ti.hi, tj.hi) * tj.frac;
        out.at(i, j, k) = static_cast<float>(c0 * (1.0 - ti.frac) + c1 * ti.frac);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conforming

namespace {

// Signed shift such that out[o] = in[o + shift] along one axis.
std::int64_t conform_shift(std::int64_t in_size, std::int64_t side) {
  const std::int64_t diff = side - in_size;
  if (diff >= 0) return -(diff / 2);  // pad: low margin = floor(diff / 2)
  return (-diff) / 2;                 // crop: low margin removed = floor(|diff| / 2)
}

}  // namespace

Volume conform_cube(const Volume& vol, std::int64_t side) {
  if (side <= 0) throw std::invalid_argument("conform side must be positive");
  Index3 shift;
  for (int a = 0; a < 3; ++a) shift[a] = conform_shift(vol.dims()[a], side);
  Volume out({side, side, side}, vol.spacing(), vol.kind());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < side; ++i) {
    const std::int64_t si = i + shift[0];
    if (si < 0 || si >= vol.dims()[0]) continue;
    for (std::int64_t j = 0; j < side; ++j) {
      const std::int64_t sj = j + shift[1];
      if (sj < 0 || sj >= vol.dims()[1]) continue;
      for (std::int64_t k = 0; k < side; ++k) {
        const std::int64_t sk = k + shift[2];
        if (sk >= 0 && sk < vol.dims()[2]) out.at(i, j, k) = vol.at(si, sj, sk);
      }
    }
  }
  return out;
}

Volume unconform_cube(const Volume& cube, const Index3& original_dims) {
  const Index3& d = cube.dims();
  if (d[0] != d[1] || d[1] != d[2]) throw std::invalid_argument("unconform_cube expects a cube");
  const std::int64_t side = d[0];
  Index3 shift;
  for (int a = 0; a < 3; ++a) shift[a] = conform_shift(original_dims[a], side);
  Volume out(original_dims, cube.spacing(), cube.kind());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < original_dims[0]; ++i) {
    const std::int64_t ci = i - shift[0];
    if (ci < 0 || ci >= side) continue;
    for (std::int64_t j = 0; j < original_dims[1]; ++j) {
      const std::int64_t cj = j - shift[1];
      if (cj < 0 || cj >= side) continue;
      for (std::int64_t k = 0; k < original_dims[2]; ++k) {
        const std::int64_t ck = k - shift[2];
        if (ck >= 0 && ck < side) out.at(i, j, k) = cube.at(ci, cj, ck);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Volume extract_patch(const Volume& vol, const BoundingBox& box, std::optional<Index3> pad_to) {
  if (!box.valid()) throw std::invalid_argument("extract_patch: empty box");
  if (!intersect(box, BoundingBox::full(vol.dims())))
    throw std::invalid_argument("extract_patch: box does not intersect the volume");

  Index3 out_dims = box.extents();
  Index3 lead{0, 0, 0};
  if (pad_to) {
    for (int a = 0; a < 3; ++a) {
      if ((*pad_to)[a] < out_dims[a])
        throw std::invalid_argument("extract_patch: pad_to is smaller than the box");
      lead[a] = ((*pad_to)[a] - out_dims[a]) / 2;
    }
    out_dims = *pad_to;
  }

  Volume out(out_dims, vol.spacing(), vol.kind());
  const Index3& d = vol.dims();
  const std::int64_t i0 = std::max<std::int64_t>(box.min[0], 0), i1 = std::min(box.max[0], d[0]);
  const std::int64_t j0 = std::max<std::int64_t>(box.min[1], 0), j1 = std::min(box.max[1], d[1]);
  const std::int64_t k0 = std::max<std::int64_t>(box.min[2], 0), k1 = std::min(box.max[2], d[2]);
  const std::size_t run = static_cast<std::size_t>(k1 - k0);
  for (std::int64_t i = i0; i < i1; ++i)
    for (std::int64_t j = j0; j < j1; ++j) {
      const float* src = &vol.data()[vol.offset(i, j, k0)];
      float* dst = &out.data()[out.offset(i - box.min[0] + lead[0], j - box.min[1] + lead[1],
                                          k0 - box.min[2] + lead[2])];
      std::copy(src, src + run, dst);
    }
  return out;
}

Volume minmax_normalize(const Volume& vol) {
  Volume out = vol;
  if (vol.empty()) return out;
  auto [lo_it, hi_it] = std::minmax_element(vol.data().begin(), vol.data().end());
  const double lo = *lo_it, hi = *hi_it;
  auto data = out.data();
  if (!(hi > lo)) {
    std::fill(data.begin(), data.end(), 0.0f);
    return out;
  }
  const double scale = 1.0 / (hi - lo);
  for (auto& v : data) v = static_cast<float>(std::clamp((double(v) - lo) * scale, 0.0, 1.0));
  return out;
}

// ---------------------------------------------------------------------------

Conformer::Conformer(Index3 native_dims, Spacing3 native_spacing, double target_mm,
                     std::int64_t side)
    : native_dims_(native_dims),
      native_spacing_(native_spacing),
      target_{target_mm, target_mm, target_mm},
      side_(side) {
  check_dims(native_dims_);
  check_spacing(native_spacing_);
  check_spacing(target_);
  if (side_ <= 0) throw std::invalid_argument("conform side must be positive");
  for (int a = 0; a < 3; ++a)
    resampled_dims_[a] = std::max<std::int64_t>(
        1, round_half_up(double(native_dims_[a]) * native_spacing_[a] / target_[a]));
}

Volume Conformer::forward(const Volume& native, Interp interp) const {
  if (native.dims() != native_dims_)
    throw std::invalid_argument("Conformer::forward: dims differ from the native grid");
  Volume iso = native.spacing() == target_ ? native
                                            : resample_to(native, resampled_dims_, target_, interp);
  return conform_cube(iso, side_);
}

Volume Conformer::inverse(const Volume& conformed) const {
  Volume iso = unconform_cube(conformed, resampled_dims_);
  if (native_spacing_ == target_ && resampled_dims_ == native_dims_) return iso;
  return resample_to(iso, native_dims_, native_spacing_, Interp::nearest);
}

}  // namespace fbe
