#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fbe/predictor.hpp"
#include "fbe/volume.hpp"

namespace fbe {

enum class AccumulateMode { sum, mean };

/// Sliding-window layout over a region. Origins are the Cartesian product of
/// the per-axis origin lists, in lexicographic order.
struct WindowPlan {
  BoundingBox region;
  std::int64_t window = 0;
  std::int64_t step = 0;
  std::array<std::vector<std::int64_t>, 3> axis_origins;
  std::vector<Index3> origins;

  BoundingBox window_box(const Index3& origin) const {
    return {origin, {origin[0] + window, origin[1] + window, origin[2] + window}};
  }
};

/// Per axis: r_min, r_min + s, ... while o + w <= r_max, plus a final window
/// snapped to the far edge when the stride leaves a remainder. An axis shorter
/// than w gets the single origin r_min.
WindowPlan plan_windows(const BoundingBox& region, std::int64_t window, std::int64_t step);

/// Like plan_windows, but an axis of the region shorter than w gets one window
/// centered on the region and shifted to lie inside [0, frame) where possible,
/// so the predictor sees real context instead of zero padding.
WindowPlan plan_windows_in_frame(const BoundingBox& region, const Index3& frame,
                                 std::int64_t window, std::int64_t step);

/// Number of plan windows covering each voxel of the region.
Volume coverage_counts(const WindowPlan& plan);

/// Runs the predictor on every window of the plan and accumulates the outputs
/// over the region. Windows are predicted in parallel; contributions are added
/// in plan order, so the result does not depend on the thread count.
Volume run_windows(const Volume& vol, const WindowPlan& plan, const PredictorHandle& predictor,
                   AccumulateMode mode = AccumulateMode::sum);

/// Adds the part of `prediction` (a window at `origin`) that falls inside the
/// accumulator's region. Exposed for the serial reference and benchmarks.
void accumulate_window(Volume& accumulator, const BoundingBox& region, const Volume& prediction,
                       const Index3& origin);

}  // namespace fbe
