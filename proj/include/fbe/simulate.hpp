#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbe/cascade.hpp"
#include "fbe/predictor.hpp"

namespace fbe {

/// Paired comparison of a single Model-A sliding pass against the full
/// cascade, both driven by noisy oracles over a seeded phantom.
struct SimulationSpec {
  NoiseSpec noise;
  std::int64_t side = 192;
  double alpha = 0.2;
  AccumulateMode accumulate_mode = AccumulateMode::sum;
  std::uint64_t master_seed = 0;
};

struct SimulationCase {
  std::uint64_t index = 0;
  double dice_single = 0.0;
  double dice_cascade = 0.0;
  double fp_rate_single = 0.0;   // over all GT-negative voxels
  double fp_rate_cascade = 0.0;  // over all GT-negative voxels
  std::int64_t roi_negatives = 0;  // GT-negative voxels inside the final region
  std::int64_t roi_false_positives = 0;
  ExtractionStatus status = ExtractionStatus::no_brain_found;

  double fp_rate_cascade_roi() const {
    return roi_negatives > 0 ? double(roi_false_positives) / double(roi_negatives) : 0.0;
  }
};

struct SimulationSummary {
  std::vector<SimulationCase> cases;
  double mean_dice_single = 0.0;
  double mean_dice_cascade = 0.0;
  double mean_fp_rate_single = 0.0;
  double pooled_fp_rate_cascade_roi = 0.0;
  std::size_t cascade_wins = 0;

  static std::string csv_header();
  std::string csv() const;
  std::string table() const;
};

/// Phantom and oracle noise for case `index` depend only on (spec.master_seed, index).
SimulationCase simulate_case(const SimulationSpec& spec, std::uint64_t index);

SimulationSummary simulate(const SimulationSpec& spec, std::size_t count);

/// Expected false-positive rate of a majority vote over `n` independent masks with rate p.
double majority_fp_rate(double p, int n);

}  // namespace fbe
