#include "fbe/windowing.hpp"

#include <algorithm>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fbe {

namespace {

void check_window_step(std::int64_t window, std::int64_t step) {
  if (window < 1) throw std::invalid_argument("window size must be >= 1");
  if (step < 1) throw std::invalid_argument("step must be >= 1");
}

std::vector<std::int64_t> axis_origins(std::int64_t lo, std::int64_t hi, std::int64_t w,
                                       std::int64_t s) {
  std::vector<std::int64_t> out;
  if (hi - lo <= w) {
    out.push_back(lo);
    return out;
  }
  for (std::int64_t o = lo; o + w <= hi; o += s) out.push_back(o);
  const std::int64_t snapped = std::max(lo, hi - w);
  if (out.back() != snapped) out.push_back(snapped);
  return out;
}

void fill_origins(WindowPlan& plan) {
  plan.origins.clear();
  plan.origins.reserve(plan.axis_origins[0].size() * plan.axis_origins[1].size() *
                       plan.axis_origins[2].size());
  for (auto i : plan.axis_origins[0])
    for (auto j : plan.axis_origins[1])
      for (auto k : plan.axis_origins[2]) plan.origins.push_back({i, j, k});
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace

WindowPlan plan_windows(const BoundingBox& region, std::int64_t window, std::int64_t step) {
  check_window_step(window, step);
  if (!region.valid()) throw std::invalid_argument("plan_windows: empty region");
  WindowPlan plan{region, window, step, {}, {}};
  for (int a = 0; a < 3; ++a)
    plan.axis_origins[a] = axis_origins(region.min[a], region.max[a], window, step);
  fill_origins(plan);
  return plan;
}

WindowPlan plan_windows_in_frame(const BoundingBox& region, const Index3& frame,
                                 std::int64_t window, std::int64_t step) {
  WindowPlan plan = plan_windows(region, window, step);
  for (int a = 0; a < 3; ++a) {
    const std::int64_t ext = region.extent(a);
    if (ext >= window) continue;
    const std::int64_t centered = region.min[a] - (window - ext) / 2;
    const std::int64_t upper = std::max<std::int64_t>(0, frame[a] - window);
    plan.axis_origins[a] = {std::clamp<std::int64_t>(centered, 0, upper)};
  }
  fill_origins(plan);
  return plan;
}

Volume coverage_counts(const WindowPlan& plan) {
  const BoundingBox& r = plan.region;
  std::array<std::vector<float>, 3> per_axis;
  for (int a = 0; a < 3; ++a) {
    per_axis[a].assign(static_cast<std::size_t>(r.extent(a)), 0.0f);
    for (auto o : plan.axis_origins[a]) {
      const std::int64_t lo = std::max(o, r.min[a]), hi = std::min(o + plan.window, r.max[a]);
      for (std::int64_t x = lo; x < hi; ++x) per_axis[a][x - r.min[a]] += 1.0f;
    }
  }
  Volume out(r.extents(), {1.0, 1.0, 1.0}, VolumeKind::label);
  const Index3 d = r.extents();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < d[0]; ++i)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t k = 0; k < d[2]; ++k)
        out.at(i, j, k) = per_axis[0][i] * per_axis[1][j] * per_axis[2][k];
  return out;
}

void accumulate_window(Volume& accumulator, const BoundingBox& region, const Volume& prediction,
                       const Index3& origin) {
  const BoundingBox win{origin,
                        {origin[0] + prediction.dims()[0], origin[1] + prediction.dims()[1],
                         origin[2] + prediction.dims()[2]}};
  const auto overlap = intersect(win, region);
  if (!overlap) return;
  const BoundingBox& o = *overlap;
  const std::size_t run = static_cast<std::size_t>(o.extent(2));
#pragma omp parallel for schedule(static) if (o.volume() > (1 << 15))
  for (std::int64_t i = o.min[0]; i < o.max[0]; ++i)
    for (std::int64_t j = o.min[1]; j < o.max[1]; ++j) {
      const float* src =
          &prediction.data()[prediction.offset(i - origin[0], j - origin[1], o.min[2] - origin[2])];
      float* dst = &accumulator.data()[accumulator.offset(i - region.min[0], j - region.min[1],
                                                          o.min[2] - region.min[2])];
      for (std::size_t k = 0; k < run; ++k) dst[k] += src[k];
    }
}

Volume run_windows(const Volume& vol, const WindowPlan& plan, const PredictorHandle& predictor,
                   AccumulateMode mode) {
  if (!predictor) throw std::invalid_argument("run_windows: empty predictor handle");
  if (predictor.window() != plan.window)
    throw std::invalid_argument("run_windows: predictor window " +
                                std::to_string(predictor.window()) + " != plan window " +
                                std::to_string(plan.window));
  if (!BoundingBox::full(vol.dims()).contains(plan.region))
    throw std::invalid_argument("run_windows: region lies outside the volume");

  Volume acc(plan.region.extents(), vol.spacing(), VolumeKind::probability);
  const auto n = static_cast<std::int64_t>(plan.origins.size());
  // Bounded buffering: predict a batch concurrently, then reduce it in plan order.
  const std::int64_t batch = std::max(1, 2 * max_threads());
  std::vector<Volume> outputs(static_cast<std::size_t>(batch));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(batch));

  for (std::int64_t b0 = 0; b0 < n; b0 += batch) {
    const std::int64_t b1 = std::min(n, b0 + batch);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t w = b0; w < b1; ++w) {
      const Index3& origin = plan.origins[static_cast<std::size_t>(w)];
      try {
        Volume patch = extract_patch(vol, plan.window_box(origin));
        outputs[w - b0] = predictor.predict(origin, patch);
      } catch (...) {
        errors[w - b0] = std::current_exception();
      }
    }
    for (std::int64_t w = b0; w < b1; ++w) {
      const Index3& origin = plan.origins[static_cast<std::size_t>(w)];
      if (auto err = std::exchange(errors[w - b0], nullptr)) {
        try {
          std::rethrow_exception(err);
        } catch (const std::exception& e) {
          throw PredictorError("predictor '" + predictor.id() + "' failed on window at (" +
                                   std::to_string(origin[0]) + ", " + std::to_string(origin[1]) +
                                   ", " + std::to_string(origin[2]) + "): " + e.what(),
                               origin);
        }
      }
      accumulate_window(acc, plan.region, outputs[w - b0], origin);
    }
  }

  if (mode == AccumulateMode::mean) {
    const Volume counts = coverage_counts(plan);
    auto a = acc.data();
    const auto c = counts.data();
    const auto m = static_cast<std::int64_t>(a.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < m; ++i) a[i] /= c[i];
  }
  return acc;
}

}  // namespace fbe
