#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbe/volume.hpp"

namespace fbe {

/// Raised when a predictor fails on a window. Carries the window origin when known.
class PredictorError : public std::runtime_error {
 public:
  explicit PredictorError(const std::string& what, std::optional<Index3> origin = std::nullopt);
  const std::optional<Index3>& origin() const { return origin_; }

 private:
  std::optional<Index3> origin_;
};

enum class Backend { oracle, noisy_oracle, external, constant };

const char* to_string(Backend backend);

/// Backend interface. Implementations map a w^3 intensity patch whose first
/// voxel sits at `origin` (full-volume coordinates) to a w^3 probability patch.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual Volume predict(const Index3& origin, const Volume& patch) const = 0;
};

/// Named, sized predictor. Output of predict() is always clamped to [0, 1].
class PredictorHandle {
 public:
  PredictorHandle() = default;
  PredictorHandle(std::string id, std::int64_t window, Backend backend,
                  std::shared_ptr<const Predictor> impl);

  const std::string& id() const { return id_; }
  std::int64_t window() const { return window_; }
  Backend backend() const { return backend_; }
  explicit operator bool() const { return static_cast<bool>(impl_); }

  Volume predict(const Index3& origin, const Volume& patch) const;

 private:
  std::string id_;
  std::int64_t window_ = 0;
  Backend backend_ = Backend::constant;
  std::shared_ptr<const Predictor> impl_;
};

/// Corruption applied by the noisy oracle.
struct NoiseSpec {
  double fp_blob_rate = 0.0;      // expected spurious blobs per patch
  double fp_blob_radius_min = 2.0;  // voxels
  double fp_blob_radius_max = 4.0;
  double fn_hole_rate = 0.0;      // expected deletion holes per patch
  double per_voxel_fp = 0.0;      // independent 0 -> 1 flip probability on GT-negative voxels
  std::uint64_t seed_offset = 0;

  void validate() const;
  bool is_zero() const { return fp_blob_rate == 0.0 && fn_hole_rate == 0.0 && per_voxel_fp == 0.0; }
};

/// Returns gt restricted to each queried window; voxels outside gt read as 0.
PredictorHandle make_oracle(std::shared_ptr<const Volume> gt, std::int64_t window,
                            std::string id = "oracle");

/// Oracle output corrupted by Poisson-many blobs and holes (keyed by window
/// origin) and independent per-voxel false positives (keyed by the voxel's
/// full-volume coordinate). Randomness depends only on
/// (master_seed, model_seed, noise.seed_offset) and position, never on call order.
PredictorHandle make_noisy_oracle(std::shared_ptr<const Volume> gt, std::int64_t window,
                                  const NoiseSpec& noise, std::uint64_t model_seed,
                                  std::uint64_t master_seed = 0, std::string id = "noisy_oracle");

/// Emits `value` everywhere.
PredictorHandle make_constant(float value, std::int64_t window, std::string id = "constant");

/// Spawns `command` and talks the binary predictor protocol over its stdin/stdout.
/// The process persists for the lifetime of the handle; requests are serialized.
PredictorHandle make_external(const std::vector<std::string>& command, std::int64_t window,
                              std::chrono::milliseconds timeout, std::string id = "external");

namespace protocol {
inline constexpr char kMagic[4] = {'C', 'P', 'R', 'D'};
inline constexpr std::uint32_t kVersion = 1;
}  // namespace protocol

}  // namespace fbe
