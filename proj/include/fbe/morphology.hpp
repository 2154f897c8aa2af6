#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fbe/volume.hpp"

namespace fbe {

enum class Connectivity { six = 6, twenty_six = 26 };

struct EmptyMaskError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Component labels numbered 1..K in the order their first voxel is met by a
/// linear scan; 0 is background. sizes[k - 1] is the voxel count of label k.
struct LabeledComponents {
  Volume labels;
  std::vector<std::int64_t> sizes;

  std::size_t count() const { return sizes.size(); }
};

/// 1 where p >= alpha.
Volume threshold(const Volume& p, double alpha);

/// 1 where p > tau (strict).
Volume threshold_strict(const Volume& p, double tau);

LabeledComponents connected_components(const Volume& mask,
                                       Connectivity connectivity = Connectivity::twenty_six);

/// Mask of the component with the most voxels; ties go to the smaller label.
Volume largest_component(const LabeledComponents& components);

/// Tightest box around the non-zero voxels. Throws EmptyMaskError on an empty mask.
BoundingBox bounding_box(const Volume& mask);

/// 1 where at least floor(N/2) + 1 of the N masks are 1.
Volume majority_vote(std::span<const Volume> masks);

Volume mask_union(const Volume& a, const Volume& b);
Volume mask_intersection(const Volume& a, const Volume& b);

}  // namespace fbe
