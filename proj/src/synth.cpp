#include "fbe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace fbe {

void SynthesisParams::validate() const {
  if (window <= 0) throw std::invalid_argument("synthesis window must be positive");
  if (n_shapes < 0) throw std::invalid_argument("n_shapes must be >= 0");
  for (double v : {shift_max, rot_max, scale_max, blur_sd_max, noise_sd_max, warp_max, bias_amplitude})
    if (!(v >= 0.0)) throw std::invalid_argument("synthesis maxima must be >= 0");
  if (scale_max >= 1.0) throw std::invalid_argument("scale_max must be < 1");
  if (downsample_factor_max < 0) throw std::invalid_argument("downsample_factor_max must be >= 0");
}

SynthesisParams SynthesisParams::identity(std::int64_t window) {
  SynthesisParams p;
  p.window = window;
  p.n_shapes = 0;
  p.shift_max = p.rot_max = p.scale_max = p.blur_sd_max = p.noise_sd_max = 0.0;
  p.warp_max = p.bias_amplitude = 0.0;
  p.downsample_factor_max = 1;
  return p;
}

const std::array<ModelDefaults, 4>& model_table() {
  auto row = [](char m, std::int64_t step, std::int64_t w, std::int64_t n, double shift, double rot,
                double scale, double blur, double noise) {
    SynthesisParams p;
    p.window = w;
    p.n_shapes = n;
    p.shift_max = shift;
    p.rot_max = rot;
    p.scale_max = scale;
    p.blur_sd_max = blur;
    p.noise_sd_max = noise;
    return ModelDefaults{m, step, p};
  };
  static const std::array<ModelDefaults, 4> table{
      row('A', 64, 128, 24, 48, 180, 0.6, 0.6, 0.40),
      row('B', 32, 96, 24, 32, 180, 0.4, 0.4, 0.20),
      row('C', 32, 64, 24, 12, 180, 0.4, 0.2, 0.15),
      row('D', 32, 32, 8, 6, 180, 0.3, 0.1, 0.15),
  };
  return table;
}

const ModelDefaults& model_defaults(char model) {
  for (const auto& row : model_table())
    if (row.model == model) return row;
  throw std::invalid_argument(std::string("unknown model '") + model + "' (expected A, B, C or D)");
}

// ---------------------------------------------------------------------------

Volume brain_mask(const Volume& labels) {
  Volume out(labels.dims(), labels.spacing(), VolumeKind::mask);
  for (std::size_t i = 0; i < labels.size(); ++i)
    out[i] = (labels[i] >= 1.0f && labels[i] <= float(kBrainLabelMax)) ? 1.0f : 0.0f;
  return out;
}

std::array<double, 3> centroid(const Volume& mask) {
  const Index3& d = mask.dims();
  double s[3] = {0, 0, 0};
  double n = 0;
  for (std::int64_t i = 0; i < d[0]; ++i)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t k = 0; k < d[2]; ++k)
        if (mask.at(i, j, k) != 0.0f) {
          s[0] += double(i);
          s[1] += double(j);
          s[2] += double(k);
          n += 1;
        }
  if (n == 0) return {std::nan(""), std::nan(""), std::nan("")};
  return {s[0] / n, s[1] / n, s[2] / n};
}

namespace {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 rotation_matrix(const Vec3& deg) {
  const double a = deg[0] * std::numbers::pi / 180.0;
  const double b = deg[1] * std::numbers::pi / 180.0;
  const double c = deg[2] * std::numbers::pi / 180.0;
  const Mat3 rx{{{1, 0, 0}, {0, std::cos(a), -std::sin(a)}, {0, std::sin(a), std::cos(a)}}};
  const Mat3 ry{{{std::cos(b), 0, std::sin(b)}, {0, 1, 0}, {-std::sin(b), 0, std::cos(b)}}};
  const Mat3 rz{{{std::cos(c), -std::sin(c), 0}, {std::sin(c), std::cos(c), 0}, {0, 0, 1}}};
  auto mul = [](const Mat3& x, const Mat3& y) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) r[i][j] += x[i][k] * y[k][j];
    return r;
  };
  return mul(rz, mul(ry, rx));
}

// Trilinear lookup into a coarse control grid stretched over `dims`.
// `values` holds `components` numbers per control point.
class ControlGrid {
 public:
  ControlGrid(const Index3& grid, const Index3& dims, const std::vector<double>& values,
              int components)
      : grid_(grid), values_(values), components_(components) {
    for (int a = 0; a < 3; ++a)
      scale_[a] = dims[a] > 1 ? double(grid[a] - 1) / double(dims[a] - 1) : 0.0;
  }

  double at(std::int64_t i, std::int64_t j, std::int64_t k, int c) const {
    const double x[3] = {double(i) * scale_[0], double(j) * scale_[1], double(k) * scale_[2]};
    std::int64_t lo[3];
    double f[3];
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(x[a])), grid_[a] - 2);
      lo[a] = std::max<std::int64_t>(lo[a], 0);
      f[a] = grid_[a] > 1 ? x[a] - double(lo[a]) : 0.0;
    }
    double out = 0.0;
    for (int di = 0; di < 2; ++di)
      for (int dj = 0; dj < 2; ++dj)
        for (int dk = 0; dk < 2; ++dk) {
          const std::int64_t gi = std::min(lo[0] + di, grid_[0] - 1);
          const std::int64_t gj = std::min(lo[1] + dj, grid_[1] - 1);
          const std::int64_t gk = std::min(lo[2] + dk, grid_[2] - 1);
          const double wgt = (di ? f[0] : 1 - f[0]) * (dj ? f[1] : 1 - f[1]) * (dk ? f[2] : 1 - f[2]);
          const std::size_t idx =
              static_cast<std::size_t>(((gi * grid_[1] + gj) * grid_[2] + gk) * components_ + c);
          out += wgt * values_[idx];
        }
    return out;
  }

 private:
  Index3 grid_;
  const std::vector<double>& values_;
  int components_;
  double scale_[3];
};

struct Ellipsoid {
  Vec3 center;
  Vec3 radii;
  Mat3 rot;  // rows: ellipsoid axes in voxel space

  bool contains(double i, double j, double k) const {
    const double p[3] = {i - center[0], j - center[1], k - center[2]};
    double s = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double q = (rot[a][0] * p[0] + rot[a][1] * p[1] + rot[a][2] * p[2]) / radii[a];
      s += q * q;
    }
    return s <= 1.0;
  }
  double reach() const { return std::max({radii[0], radii[1], radii[2]}); }
};

const Mat3 kIdentity{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

}  // namespace

Volume make_phantom_label_map(Rng& rng, const Index3& dims) {
  for (auto n : dims)
    if (n < 32) throw std::invalid_argument("phantom dims must be >= 32 per axis");
  const double base = rng.uniform(0.18, 0.26) * double(std::min({dims[0], dims[1], dims[2]}));
  Vec3 center, radii;
  for (int a = 0; a < 3; ++a) {
    center[a] = 0.5 * double(dims[a] - 1) + rng.uniform(-0.05, 0.05) * double(dims[a]);
    radii[a] = base * rng.uniform(0.85, 1.15);
  }

  // Structures in unit-brain coordinates: center offset and relative radii.
  struct Part {
    float label;
    Vec3 offset;
    Vec3 scale;
  };
  const std::vector<Part> parts{
      {1, {0, 0, 0}, {1.0, 1.0, 1.0}},             // outer shell
      {2, {0, 0, 0}, {0.85, 0.85, 0.85}},          // cortical plate
      {3, {0, 0, 0}, {0.65, 0.65, 0.65}},          // white matter
      {4, {0.05, 0.22, 0.10}, {0.18, 0.10, 0.25}}, // lateral ventricle
      {4, {0.05, -0.22, 0.10}, {0.18, 0.10, 0.25}},
      {5, {-0.55, 0, -0.35}, {0.25, 0.35, 0.22}},  // cerebellum
      {6, {0.10, 0, 0}, {0.15, 0.15, 0.15}},       // deep grey matter
      {7, {-0.20, 0, -0.60}, {0.12, 0.12, 0.30}},  // brainstem
  };
  std::vector<Ellipsoid> shapes;
  for (const auto& part : parts) {
    Ellipsoid e{{}, {}, kIdentity};
    for (int a = 0; a < 3; ++a) {
      e.center[a] = center[a] + part.offset[a] * radii[a];
      e.radii[a] = std::max(1.5, part.scale[a] * radii[a]);
    }
    shapes.push_back(e);
  }

  Volume out(dims, {1.0, 1.0, 1.0}, VolumeKind::label);
  const Ellipsoid& brain = shapes.front();
  Index3 lo, hi;
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max<std::int64_t>(0, std::int64_t(std::floor(center[a] - radii[a])));
    hi[a] = std::min<std::int64_t>(dims[a], std::int64_t(std::ceil(center[a] + radii[a])) + 1);
  }
  for (std::int64_t i = lo[0]; i < hi[0]; ++i)
    for (std::int64_t j = lo[1]; j < hi[1]; ++j)
      for (std::int64_t k = lo[2]; k < hi[2]; ++k) {
        if (!brain.contains(double(i), double(j), double(k))) continue;
        float label = 1;
        for (std::size_t s = shapes.size(); s-- > 1;)
          if (shapes[s].contains(double(i), double(j), double(k))) {
            label = parts[s].label;
            break;
          }
        out.at(i, j, k) = label;
      }

  // Guarantee every structure is present even on coarse grids.
  std::array<bool, kBrainLabelMax + 1> seen{};
  for (float v : out.data()) seen[static_cast<std::size_t>(v)] = true;
  for (std::size_t s = 0; s < parts.size(); ++s) {
    const auto label = static_cast<std::size_t>(parts[s].label);
    if (seen[label]) continue;
    const auto i = std::int64_t(std::lround(shapes[s].center[0]));
    const auto j = std::int64_t(std::lround(shapes[s].center[1]));
    const auto k = std::int64_t(std::lround(shapes[s].center[2]));
    out.at(i, j, k) = parts[s].label;
    seen[label] = true;
  }
  return out;
}

// ---------------------------------------------------------------------------

SpatialSample sample_spatial(const SynthesisParams& p, Rng& rng) {
  SpatialSample t;
  for (auto& v : t.shift) v = rng.uniform(-p.shift_max, p.shift_max);
  for (auto& v : t.rotation_deg) v = rng.uniform(-p.rot_max, p.rot_max);
  t.scale = rng.uniform(1.0 - p.scale_max, 1.0 + p.scale_max);
  t.warp_amplitude = p.warp_max;
  t.warp.resize(static_cast<std::size_t>(voxel_count(t.warp_grid) * 3));
  for (auto& v : t.warp)
    v = std::clamp(rng.normal(0.0, 0.5 * p.warp_max), -p.warp_max, p.warp_max);
  return t;
}

Volume apply_spatial(const Volume& labels, const SpatialSample& t) {
  const Index3& d = labels.dims();
  const Spacing3& sp = labels.spacing();
  const Mat3 r = rotation_matrix(t.rotation_deg);
  const bool warped = t.warp_amplitude > 0.0 && !t.warp.empty();
  const ControlGrid warp(t.warp_grid, d, t.warp, 3);
  Vec3 c;
  for (int a = 0; a < 3; ++a) c[a] = 0.5 * double(d[a] - 1);

  Volume out(d, sp, labels.kind());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < d[0]; ++i)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t k = 0; k < d[2]; ++k) {
        // Output position in mm relative to the grid center, minus translation.
        Vec3 p{(double(i) - c[0]) * sp[0], (double(j) - c[1]) * sp[1], (double(k) - c[2]) * sp[2]};
        for (int a = 0; a < 3; ++a) {
          if (warped) p[a] += warp.at(i, j, k, a);
          p[a] -= t.shift[a];
        }
        // Inverse of (rotate after scale): y = R^T p / s.
        std::int64_t src[3];
        bool inside = true;
        for (int a = 0; a < 3; ++a) {
          const double y = (r[0][a] * p[0] + r[1][a] * p[1] + r[2][a] * p[2]) / t.scale;
          src[a] = static_cast<std::int64_t>(std::floor(y / sp[a] + c[a] + 0.5));
          inside = inside && src[a] >= 0 && src[a] < d[a];
        }
        if (inside) out.at(i, j, k) = labels.at(src[0], src[1], src[2]);
      }
  return out;
}

Volume augment_spatial(const Volume& labels, const SynthesisParams& p, Rng& rng) {
  return apply_spatial(labels, sample_spatial(p, rng));
}

Volume add_random_shapes(const Volume& labels, std::int64_t n, Rng& rng) {
  Volume out = labels;
  const Index3& d = labels.dims();
  const double w = double(std::min({d[0], d[1], d[2]}));
  const double rmax = std::max(2.0, w / 4.0);

  for (std::int64_t s = 0; s < n; ++s) {
    const auto label = static_cast<float>(kBrainLabelMax + 1 + s);
    const bool ellipsoid = rng.uniform() < 0.5;
    Vec3 center;
    for (int a = 0; a < 3; ++a) center[a] = rng.uniform(0.0, double(d[a]));

    Ellipsoid e{center, {}, kIdentity};
    double reach;
    std::vector<double> noise;
    const Index3 noise_grid{5, 5, 5};
    if (ellipsoid) {
      for (auto& r : e.radii) r = rng.uniform(2.0, rmax);
      e.rot = rotation_matrix({rng.uniform(0, 360), rng.uniform(0, 360), rng.uniform(0, 360)});
      reach = e.reach();
    } else {
      reach = rng.uniform(2.0, rmax);
      noise.resize(static_cast<std::size_t>(voxel_count(noise_grid)));
      for (auto& v : noise) v = rng.normal();
    }

    Index3 lo, hi;
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max<std::int64_t>(0, std::int64_t(std::floor(center[a] - reach)));
      hi[a] = std::min<std::int64_t>(d[a], std::int64_t(std::ceil(center[a] + reach)) + 1);
    }
    if (lo[0] >= hi[0] || lo[1] >= hi[1] || lo[2] >= hi[2]) continue;
    const Index3 box{2 * std::int64_t(std::ceil(reach)) + 1, 2 * std::int64_t(std::ceil(reach)) + 1,
                     2 * std::int64_t(std::ceil(reach)) + 1};
    const ControlGrid field(noise_grid, box, noise, 1);
    const auto box_origin = [&](int a) { return std::int64_t(std::floor(center[a])) - std::int64_t(std::ceil(reach)); };

    for (std::int64_t i = lo[0]; i < hi[0]; ++i)
      for (std::int64_t j = lo[1]; j < hi[1]; ++j)
        for (std::int64_t k = lo[2]; k < hi[2]; ++k) {
          if (out.at(i, j, k) != 0.0f) continue;
          bool member;
          if (ellipsoid) {
            member = e.contains(double(i), double(j), double(k));
          } else {
            const double di = double(i) - center[0], dj = double(j) - center[1],
                         dk = double(k) - center[2];
            const double dist = std::sqrt(di * di + dj * dj + dk * dk) / reach;
            if (dist > 1.0) continue;
            const auto bi = std::clamp<std::int64_t>(i - box_origin(0), 0, box[0] - 1);
            const auto bj = std::clamp<std::int64_t>(j - box_origin(1), 0, box[1] - 1);
            const auto bk = std::clamp<std::int64_t>(k - box_origin(2), 0, box[2] - 1);
            member = (1.0 - dist) + 0.35 * field.at(bi, bj, bk, 0) > 0.35;
          }
          if (member) out.at(i, j, k) = label;
        }
  }
  return out;
}

// ---------------------------------------------------------------------------

Volume gaussian_blur(const Volume& vol, double sd) {
  if (!(sd > 0.0)) return vol;
  const auto radius = static_cast<std::int64_t>(std::ceil(3.0 * sd));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double norm = 0.0;
  for (std::int64_t t = -radius; t <= radius; ++t) {
    kernel[t + radius] = std::exp(-0.5 * double(t * t) / (sd * sd));
    norm += kernel[t + radius];
  }
  for (auto& v : kernel) v /= norm;

  Volume cur = vol;
  const Index3& d = vol.dims();
  for (int axis = 0; axis < 3; ++axis) {
    Volume next(d, vol.spacing(), vol.kind());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < d[0]; ++i)
      for (std::int64_t j = 0; j < d[1]; ++j)
        for (std::int64_t k = 0; k < d[2]; ++k) {
          std::int64_t idx[3] = {i, j, k};
          const std::int64_t centre = idx[axis];
          double acc = 0.0;
          for (std::int64_t t = -radius; t <= radius; ++t) {
            idx[axis] = std::clamp<std::int64_t>(centre + t, 0, d[axis] - 1);
            acc += kernel[t + radius] * double(cur.at(idx[0], idx[1], idx[2]));
          }
          next.at(i, j, k) = static_cast<float>(acc);
        }
    cur = std::move(next);
  }
  return cur;
}

ImageSample sample_image(const Volume& labels, const SynthesisParams& p, Rng& rng) {
  ImageSample s;
  float max_label = 0.0f;
  for (float v : labels.data()) max_label = std::max(max_label, v);
  s.label_intensity.resize(static_cast<std::size_t>(max_label) + 1);
  for (auto& v : s.label_intensity) v = rng.uniform();
  s.noise_sd = rng.uniform(0.0, p.noise_sd_max);
  s.blur_sd = rng.uniform(0.0, p.blur_sd_max);
  s.bias_strength = rng.uniform(0.0, p.bias_amplitude);
  s.bias.resize(static_cast<std::size_t>(voxel_count(s.bias_grid)));
  for (auto& v : s.bias) v = rng.uniform(-s.bias_strength, s.bias_strength);
  s.downsample = rng.uniform_int(1, std::max<std::int64_t>(1, p.downsample_factor_max));
  return s;
}

Volume render_image(const Volume& labels, const ImageSample& s, Rng& rng) {
  const Index3& d = labels.dims();
  Volume img(d, labels.spacing(), VolumeKind::intensity);
  for (std::size_t n = 0; n < img.size(); ++n) {
    const auto label = static_cast<std::size_t>(labels[n]);
    double v = label < s.label_intensity.size() ? s.label_intensity[label] : 0.0;
    if (s.noise_sd > 0.0) v += rng.normal(0.0, s.noise_sd);
    img[n] = static_cast<float>(v);
  }

  if (s.blur_sd > 0.0) img = gaussian_blur(img, s.blur_sd / labels.spacing()[0]);

  if (s.bias_strength > 0.0) {
    const ControlGrid field(s.bias_grid, d, s.bias, 1);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < d[0]; ++i)
      for (std::int64_t j = 0; j < d[1]; ++j)
        for (std::int64_t k = 0; k < d[2]; ++k)
          img.at(i, j, k) = static_cast<float>(img.at(i, j, k) * std::exp(field.at(i, j, k, 0)));
  }

  if (s.downsample > 1) {
    const std::int64_t f = s.downsample;
    const Index3 low_dims{(d[0] + f - 1) / f, (d[1] + f - 1) / f, (d[2] + f - 1) / f};
    Volume low(low_dims, labels.spacing(), VolumeKind::intensity);
    for (std::int64_t i = 0; i < low_dims[0]; ++i)
      for (std::int64_t j = 0; j < low_dims[1]; ++j)
        for (std::int64_t k = 0; k < low_dims[2]; ++k) low.at(i, j, k) = img.at(i * f, j * f, k * f);
    auto tap = [&](std::int64_t x, int a) {
      const double pos = std::min(double(x) / double(f), double(low_dims[a] - 1));
      const auto lo = static_cast<std::int64_t>(std::floor(pos));
      return std::tuple{lo, std::min(lo + 1, low_dims[a] - 1), pos - double(lo)};
    };
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < d[0]; ++i) {
      const auto [i0, i1, fi] = tap(i, 0);
      for (std::int64_t j = 0; j < d[1]; ++j) {
        const auto [j0, j1, fj] = tap(j, 1);
        for (std::int64_t k = 0; k < d[2]; ++k) {
          const auto [k0, k1, fk] = tap(k, 2);
          auto plane = [&](std::int64_t a) {
            const double r0 = low.at(a, j0, k0) * (1 - fk) + low.at(a, j0, k1) * fk;
            const double r1 = low.at(a, j1, k0) * (1 - fk) + low.at(a, j1, k1) * fk;
            return r0 * (1 - fj) + r1 * fj;
          };
          img.at(i, j, k) = static_cast<float>(plane(i0) * (1 - fi) + plane(i1) * fi);
        }
      }
    }
  }
  return minmax_normalize(img);
}

Volume synthesize_image(const Volume& labels, const SynthesisParams& p, Rng& rng) {
  const ImageSample s = sample_image(labels, p, rng);
  return render_image(labels, s, rng);
}

TrainingPair make_training_pair(const Volume& labels, const SynthesisParams& p, std::uint64_t seed) {
  p.validate();
  Rng rng(seed);
  Volume lm = labels;
  lm.set_kind(VolumeKind::label);
  if (lm.spacing() != Spacing3{1.0, 1.0, 1.0}) lm = resample(lm, {1.0, 1.0, 1.0}, Interp::nearest);

  const Volume source_brain = brain_mask(lm);
  const auto source_count = static_cast<double>(source_brain.count_nonzero());
  std::array<double, 3> c = centroid(source_brain);
  for (int a = 0; a < 3; ++a)
    if (std::isnan(c[a])) c[a] = 0.5 * double(lm.dims()[a] - 1);

  const std::int64_t w = p.window;
  BoundingBox box;
  for (int a = 0; a < 3; ++a) {
    box.min[a] = std::int64_t(std::llround(c[a])) - w / 2;
    box.max[a] = box.min[a] + w;
  }
  Volume window = extract_patch(lm, box);

  TrainingPair pair;
  pair.seed = seed;
  pair.spatial = sample_spatial(p, rng);
  Volume augmented = apply_spatial(window, pair.spatial);
  pair.gt = brain_mask(augmented);
  Volume with_shapes = add_random_shapes(augmented, p.n_shapes, rng);
  for (std::int64_t s = 0; s < p.n_shapes; ++s) {
    const auto label = static_cast<float>(kBrainLabelMax + 1 + s);
    if (std::find(with_shapes.data().begin(), with_shapes.data().end(), label) !=
        with_shapes.data().end())
      ++pair.shapes_added;
  }
  pair.corruption = sample_image(with_shapes, p, rng);
  pair.image = render_image(with_shapes, pair.corruption, rng);

  // Brain voxels kept in the window relative to the scaled source brain.
  const double expected = source_count * std::pow(pair.spatial.scale, 3);
  pair.brain_fraction =
      expected > 0.0 ? std::clamp(double(pair.gt.count_nonzero()) / expected, 0.0, 1.0) : 0.0;
  return pair;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const SynthesisParams& p) {
  return {{"window", p.window},
          {"n_shapes", p.n_shapes},
          {"shift_max_mm", p.shift_max},
          {"rot_max_deg", p.rot_max},
          {"scale_max", p.scale_max},
          {"blur_sd_max_mm", p.blur_sd_max},
          {"noise_sd_max", p.noise_sd_max},
          {"warp_max_mm", p.warp_max},
          {"bias_amplitude", p.bias_amplitude},
          {"downsample_factor_max", p.downsample_factor_max}};
}

SynthesisParams synthesis_params_from_json(const nlohmann::json& j, SynthesisParams p) {
  p.window = j.value("window", p.window);
  p.n_shapes = j.value("n_shapes", p.n_shapes);
  p.shift_max = j.value("shift_max_mm", p.shift_max);
  p.rot_max = j.value("rot_max_deg", p.rot_max);
  p.scale_max = j.value("scale_max", p.scale_max);
  p.blur_sd_max = j.value("blur_sd_max_mm", p.blur_sd_max);
  p.noise_sd_max = j.value("noise_sd_max", p.noise_sd_max);
  p.warp_max = j.value("warp_max_mm", p.warp_max);
  p.bias_amplitude = j.value("bias_amplitude", p.bias_amplitude);
  p.downsample_factor_max = j.value("downsample_factor_max", p.downsample_factor_max);
  p.validate();
  return p;
}

nlohmann::json TrainingPair::metadata() const {
  return {{"seed", seed},
          {"shift_mm", spatial.shift},
          {"rotation_deg", spatial.rotation_deg},
          {"scale", spatial.scale},
          {"warp_max_mm", spatial.warp_amplitude},
          {"shapes_added", shapes_added},
          {"label_intensity", corruption.label_intensity},
          {"noise_sd", corruption.noise_sd},
          {"blur_sd_mm", corruption.blur_sd},
          {"bias_strength", corruption.bias_strength},
          {"downsample_factor", corruption.downsample},
          {"brain_fraction", brain_fraction},
          {"brain_voxels", gt.count_nonzero()}};
}

}  // namespace fbe
