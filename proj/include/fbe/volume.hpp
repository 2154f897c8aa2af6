#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbe {

using Index3 = std::array<std::int64_t, 3>;
using Spacing3 = std::array<double, 3>;

enum class VolumeKind { intensity, label, probability, mask };

const char* to_string(VolumeKind kind);

enum class Interp { linear, nearest };

// Axis-aligned voxel box, min inclusive, max exclusive.
struct BoundingBox {
  Index3 min{0, 0, 0};
  Index3 max{0, 0, 0};

  std::int64_t extent(int axis) const { return max[axis] - min[axis]; }
  Index3 extents() const { return {extent(0), extent(1), extent(2)}; }
  std::int64_t volume() const { return extent(0) * extent(1) * extent(2); }
  bool valid() const {
    return extent(0) > 0 && extent(1) > 0 && extent(2) > 0;
  }
  bool contains(const Index3& p) const {
    for (int a = 0; a < 3; ++a)
      if (p[a] < min[a] || p[a] >= max[a]) return false;
    return true;
  }
  bool contains(const BoundingBox& other) const {
    for (int a = 0; a < 3; ++a)
      if (other.min[a] < min[a] || other.max[a] > max[a]) return false;
    return true;
  }
  bool operator==(const BoundingBox&) const = default;

  static BoundingBox full(const Index3& dims) { return {{0, 0, 0}, dims}; }
};

std::optional<BoundingBox> intersect(const BoundingBox& a, const BoundingBox& b);

/// Dense 3D scalar grid.
///
/// Voxel (i, j, k) lives at linear offset (i * dims[1] + j) * dims[2] + k, so
/// axis 0 is slowest and axis 2 fastest. Every kind stores float32 samples;
/// labels and masks hold exact small integers.
class Volume {
 public:
  Volume() = default;
  Volume(Index3 dims, Spacing3 spacing, VolumeKind kind, float fill = 0.0f);
  Volume(Index3 dims, Spacing3 spacing, VolumeKind kind, std::vector<float> data);

  const Index3& dims() const { return dims_; }
  const Spacing3& spacing() const { return spacing_; }
  VolumeKind kind() const { return kind_; }
  void set_kind(VolumeKind kind) { kind_ = kind; }
  void set_spacing(const Spacing3& spacing);

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t offset(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return static_cast<std::size_t>((i * dims_[1] + j) * dims_[2] + k);
  }
  bool in_bounds(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims_[0] && j < dims_[1] && k < dims_[2];
  }

  float& at(std::int64_t i, std::int64_t j, std::int64_t k) { return data_[offset(i, j, k)]; }
  float at(std::int64_t i, std::int64_t j, std::int64_t k) const { return data_[offset(i, j, k)]; }
  float& operator[](std::size_t n) { return data_[n]; }
  float operator[](std::size_t n) const { return data_[n]; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  std::vector<float>& storage() { return data_; }

  bool same_shape(const Volume& other) const { return dims_ == other.dims_; }

  /// Count of non-zero voxels.
  std::size_t count_nonzero() const;
  double sum() const;

  /// Checks the per-kind value invariants (mask in {0,1}, label non-negative integers).
  bool values_match_kind() const;

  bool operator==(const Volume& other) const = default;

 private:
  Index3 dims_{0, 0, 0};
  Spacing3 spacing_{1.0, 1.0, 1.0};
  VolumeKind kind_ = VolumeKind::intensity;
  std::vector<float> data_;
};

std::int64_t voxel_count(const Index3& dims);

/// Resample so that output spacing equals `target_spacing` and each axis has
/// round-half-up(dims * spacing / target) voxels. Grids are aligned on their
/// field-of-view centers. Linear interpolation clamps to edge values.
Volume resample(const Volume& vol, const Spacing3& target_spacing, Interp interp);

/// Same as resample, but with explicit output dims.
Volume resample_to(const Volume& vol, const Index3& out_dims, const Spacing3& target_spacing,
                   Interp interp);

/// Symmetric crop / zero-pad to side^3. Odd differences put the extra voxel on the high side.
Volume conform_cube(const Volume& vol, std::int64_t side);

/// Inverse placement of conform_cube: maps a side^3 cube back onto `original_dims`.
Volume unconform_cube(const Volume& cube, const Index3& original_dims);

/// Copy of `vol` restricted to `box`; voxels outside `vol` read as 0. If `pad_to`
/// is given the result is zero-padded symmetrically up to that size.
Volume extract_patch(const Volume& vol, const BoundingBox& box,
                     std::optional<Index3> pad_to = std::nullopt);

/// (x - min) / (max - min); constant input maps to zeros.
Volume minmax_normalize(const Volume& vol);

/// Preprocessing used before inference: isotropic resample, symmetric cube
/// conform, and min-max normalization. Keeps what is needed to map results back.
class Conformer {
 public:
  Conformer(Index3 native_dims, Spacing3 native_spacing, double target_mm = 1.0,
            std::int64_t side = 192);

  Volume forward(const Volume& native, Interp interp) const;
  /// Maps a conformed mask back onto the native grid (nearest neighbor).
  Volume inverse(const Volume& conformed) const;

  const Index3& resampled_dims() const { return resampled_dims_; }
  std::int64_t side() const { return side_; }

 private:
  Index3 native_dims_;
  Spacing3 native_spacing_;
  Spacing3 target_;
  Index3 resampled_dims_;
  std::int64_t side_;
};

}  // namespace fbe
