#pragma once

// Single-threaded reference versions of the OpenMP kernels. They follow the
// same arithmetic order as the parallel code, so results must match bit for bit.

#include <span>

#include "fbe/predictor.hpp"
#include "fbe/volume.hpp"
#include "fbe/windowing.hpp"

namespace fbe::reference {

Volume run_windows(const Volume& vol, const WindowPlan& plan, const PredictorHandle& predictor,
                   AccumulateMode mode = AccumulateMode::sum);

Volume threshold(const Volume& p, double alpha);

Volume majority_vote(std::span<const Volume> masks);

Volume resample_linear(const Volume& vol, const Index3& out_dims, const Spacing3& target_spacing);

}  // namespace fbe::reference
