#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbe/morphology.hpp"
#include "fbe/predictor.hpp"
#include "fbe/volume.hpp"
#include "fbe/windowing.hpp"

namespace fbe {

/// One sliding-window pass: a model, its window and step, and (for DFS stages)
/// the binarization threshold. A missing alpha falls back to CascadeConfig::alpha.
struct StageSpec {
  PredictorHandle model;
  std::int64_t window = 0;
  std::int64_t step = 0;
  std::optional<double> alpha;

  void validate() const;
};

enum class BfsCombine { union_of, intersection_of };

struct CascadeConfig {
  std::vector<StageSpec> bfs_stages;
  std::vector<StageSpec> dfs_stages;
  double alpha = 0.2;
  double bfs_threshold = 0.0;  // strict: p > tau
  BfsCombine bfs_combine = BfsCombine::union_of;
  AccumulateMode accumulate_mode = AccumulateMode::sum;
  Connectivity connectivity = Connectivity::twenty_six;
  double target_spacing_mm = 1.0;
  std::int64_t conform_side = 192;

  void validate() const;
};

enum class ExtractionStatus { ok, no_brain_found };

const char* to_string(ExtractionStatus status);

struct BfsResult {
  std::optional<BoundingBox> box;
  ExtractionStatus status = ExtractionStatus::no_brain_found;
};

struct ExtractionResult {
  Volume mask;  // S_final on the caller's grid
  ExtractionStatus status = ExtractionStatus::no_brain_found;
  /// Search regions in conformed coordinates: the full volume, the BFS box,
  /// then the region produced by each completed DFS stage.
  std::vector<BoundingBox> roi_trace;
  /// Per-stage full-size masks S_i (conformed grid), one per completed DFS stage.
  std::vector<Volume> stage_masks;
  std::size_t stages_completed = 0;

  nlohmann::json trace_json() const;
};

/// Scans the whole volume with every BFS stage and boxes the largest connected
/// component of the combined supra-threshold voxels.
BfsResult bfs_localize(const Volume& image, const CascadeConfig& config);

/// Runs the DFS stages in order, narrowing the region after each, and fuses
/// the stage masks by majority vote. `image` must already be conformed.
ExtractionResult dfs_refine(const Volume& image, const BoundingBox& region,
                            const CascadeConfig& config);

/// Conform, localize, refine, and map the final mask back to the input grid.
ExtractionResult extract_brain(const Volume& image, const CascadeConfig& config);

/// Places `stage_mask` (dims of `region`) into a zero volume of `dims`.
Volume reconstruct_full(const Volume& stage_mask, const BoundingBox& region, const Index3& dims);

/// threshold(sliding pass of one stage over the whole volume, alpha): the
/// single-model comparison point for the cascade.
Volume single_pass(const Volume& image, const StageSpec& stage, double alpha,
                   AccumulateMode mode = AccumulateMode::sum);

// ---------------------------------------------------------------------------
// Configuration files

inline constexpr int kConfigSchemaVersion = 1;

/// Builds a predictor from one entry of the "predictors" object. `load_gt`
/// resolves ground-truth paths for oracle backends.
using GroundTruthLoader = std::function<std::shared_ptr<const Volume>(const std::string&)>;

struct ConfigContext {
  GroundTruthLoader load_gt;
  std::uint64_t master_seed = 0;
};

CascadeConfig cascade_config_from_json(const nlohmann::json& j, const ConfigContext& ctx);

/// The stock configuration document (models A-D, model-table windows and steps)
/// with every predictor using `backend_json` as its template.
nlohmann::json default_config_json(const nlohmann::json& backend_json);

/// Handles for models A-D built by `make(window, letter)` wired as BFS {A, D}
/// and DFS {B, C, D}.
CascadeConfig default_cascade(const std::function<PredictorHandle(std::int64_t, char)>& make);

}  // namespace fbe
