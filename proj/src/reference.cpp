#include "fbe/reference.hpp"

#include <algorithm>
#include <cmath>

namespace fbe::reference {

Volume run_windows(const Volume& vol, const WindowPlan& plan, const PredictorHandle& predictor,
                   AccumulateMode mode) {
  const BoundingBox& r = plan.region;
  Volume acc(r.extents(), vol.spacing(), VolumeKind::probability);
  Volume counts(r.extents(), vol.spacing(), VolumeKind::label);
  for (const Index3& o : plan.origins) {
    const Volume pred = predictor.predict(o, extract_patch(vol, plan.window_box(o)));
    for (std::int64_t i = 0; i < plan.window; ++i)
      for (std::int64_t j = 0; j < plan.window; ++j)
        for (std::int64_t k = 0; k < plan.window; ++k) {
          const Index3 g{o[0] + i, o[1] + j, o[2] + k};
          if (!r.contains(g)) continue;
          const std::int64_t li = g[0] - r.min[0], lj = g[1] - r.min[1], lk = g[2] - r.min[2];
          acc.at(li, lj, lk) += pred.at(i, j, k);
          counts.at(li, lj, lk) += 1.0f;
        }
  }
  if (mode == AccumulateMode::mean)
    for (std::size_t n = 0; n < acc.size(); ++n) acc[n] /= counts[n];
  return acc;
}

Volume threshold(const Volume& p, double alpha) {
  Volume out(p.dims(), p.spacing(), VolumeKind::mask);
  for (std::size_t n = 0; n < p.size(); ++n) out[n] = double(p[n]) >= alpha ? 1.0f : 0.0f;
  return out;
}

Volume majority_vote(std::span<const Volume> masks) {
  Volume out(masks.front().dims(), masks.front().spacing(), VolumeKind::mask);
  for (std::size_t n = 0; n < out.size(); ++n) {
    std::size_t votes = 0;
    for (const auto& m : masks) votes += m[n] != 0.0f;
    out[n] = 2 * votes > masks.size() ? 1.0f : 0.0f;
  }
  return out;
}

Volume resample_linear(const Volume& vol, const Index3& out_dims, const Spacing3& target_spacing) {
  const Index3& in = vol.dims();
  auto source = [&](int a, std::int64_t j) {
    const double centre_in = 0.5 * double(in[a] - 1), centre_out = 0.5 * double(out_dims[a] - 1);
    const double ratio = target_spacing[a] / vol.spacing()[a];
    const double x = std::clamp(centre_in + (double(j) - centre_out) * ratio, 0.0, double(in[a] - 1));
    const auto lo = static_cast<std::int64_t>(std::floor(x));
    return std::tuple{lo, std::min(lo + 1, in[a] - 1), x - double(lo)};
  };
  Volume out(out_dims, target_spacing, vol.kind());
  for (std::int64_t i = 0; i < out_dims[0]; ++i)
    for (std::int64_t j = 0; j < out_dims[1]; ++j)
      for (std::int64_t k = 0; k < out_dims[2]; ++k) {
        const auto [i0, i1, fi] = source(0, i);
        const auto [j0, j1, fj] = source(1, j);
        const auto [k0, k1, fk] = source(2, k);
        auto along_k = [&](std::int64_t a, std::int64_t b) {
          return double(vol.at(a, b, k0)) * (1.0 - fk) + double(vol.at(a, b, k1)) * fk;
        };
        const double c0 = along_k(i0, j0) * (1.0 - fj) + along_k(i0, j1) * fj;
        const double c1 = along_k(i1, j0) * (1.0 - fj) + along_k(i1, j1) * fj;
        out.at(i, j, k) = static_cast<float>(c0 * (1.0 - fi) + c1 * fi);
      }
  return out;
}

}  // namespace fbe::reference
