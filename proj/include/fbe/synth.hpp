#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbe/random.hpp"
#include "fbe/volume.hpp"

namespace fbe {

/// Augmentation and synthesis ranges for one model.
struct SynthesisParams {
  std::int64_t window = 128;
  std::int64_t n_shapes = 24;
  double shift_max = 48.0;       // mm
  double rot_max = 180.0;        // degrees
  double scale_max = 0.6;        // fraction
  double blur_sd_max = 0.6;      // mm
  double noise_sd_max = 0.40;    // intensity units
  double warp_max = 3.0;         // mm
  double bias_amplitude = 0.3;   // log-intensity
  std::int64_t downsample_factor_max = 2;

  void validate() const;
  /// Every augmentation and corruption range set to zero.
  static SynthesisParams identity(std::int64_t window);
};

/// One row of the per-model table: synthesis ranges plus the inference step size.
struct ModelDefaults {
  char model;
  std::int64_t step;
  SynthesisParams synthesis;
};

/// Rows for models A, B, C, D.
const std::array<ModelDefaults, 4>& model_table();
/// Throws std::invalid_argument for letters other than A-D.
const ModelDefaults& model_defaults(char model);

inline constexpr int kBrainLabelMax = 7;

/// Sampled spatial transform (all lengths in mm at 1 mm spacing).
struct SpatialSample {
  std::array<double, 3> shift{0, 0, 0};
  std::array<double, 3> rotation_deg{0, 0, 0};
  double scale = 1.0;
  double warp_amplitude = 0.0;
  Index3 warp_grid{8, 8, 8};
  std::vector<double> warp;  // 3 displacement components per control point
};

/// Sampled intensity model and corruption parameters.
struct ImageSample {
  std::vector<double> label_intensity;
  double noise_sd = 0.0;
  double blur_sd = 0.0;
  double bias_strength = 0.0;
  Index3 bias_grid{4, 4, 4};
  std::vector<double> bias;
  std::int64_t downsample = 1;
};

struct TrainingPair {
  Volume image;  // intensity, values in [0, 1]
  Volume gt;     // mask, union of labels 1..7
  std::uint64_t seed = 0;
  SpatialSample spatial;
  ImageSample corruption;
  std::int64_t shapes_added = 0;
  double brain_fraction = 0.0;

  nlohmann::json metadata() const;
};

/// Synthetic stand-in for an atlas label map: background 0 and seven
/// nested/adjacent ellipsoidal structures 1..7 inside one convex brain.
Volume make_phantom_label_map(Rng& rng, const Index3& dims);

SpatialSample sample_spatial(const SynthesisParams& p, Rng& rng);
Volume apply_spatial(const Volume& labels, const SpatialSample& t);
Volume augment_spatial(const Volume& labels, const SynthesisParams& p, Rng& rng);

/// Carves n random shapes (labels 8..7+n) out of background voxels only.
Volume add_random_shapes(const Volume& labels, std::int64_t n, Rng& rng);

ImageSample sample_image(const Volume& labels, const SynthesisParams& p, Rng& rng);
/// Renders the label map; `rng` drives the per-voxel noise.
Volume render_image(const Volume& labels, const ImageSample& s, Rng& rng);
Volume synthesize_image(const Volume& labels, const SynthesisParams& p, Rng& rng);

/// Brain centered in a w^3 window, then augmentation, shapes, image synthesis.
TrainingPair make_training_pair(const Volume& labels, const SynthesisParams& p, std::uint64_t seed);

/// Union of labels 1..7.
Volume brain_mask(const Volume& labels);

/// Mean voxel index of non-zero voxels; nullopt-like NaNs when empty.
std::array<double, 3> centroid(const Volume& mask);

/// Separable Gaussian filter, SD in voxels. Edge samples are clamped.
Volume gaussian_blur(const Volume& vol, double sd_voxels);

nlohmann::json to_json(const SynthesisParams& p);
SynthesisParams synthesis_params_from_json(const nlohmann::json& j, SynthesisParams base);

}  // namespace fbe
