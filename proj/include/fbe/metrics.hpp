#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "fbe/volume.hpp"

namespace fbe {

struct OverlapReport {
  double dice = 1.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;
  double fp_rate = 0.0;  // fp / (fp + tn)
  std::int64_t gt_voxels = 0;
  std::int64_t pred_voxels = 0;
  double gt_mm3 = 0.0;
  double pred_mm3 = 0.0;

  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv_row(const std::string& id) const;
};

/// 2|A n B| / (|A| + |B|); two empty masks score 1.
double dice(const Volume& a, const Volume& b);

inline constexpr double kDefaultSoftDiceSmooth = 1e-6;

/// (2 sum(p g) + smooth) / (sum(p) + sum(g) + smooth). The loss is 1 - soft_dice.
double soft_dice(const Volume& p, const Volume& g, double smooth = kDefaultSoftDiceSmooth);

inline double soft_dice_loss(const Volume& p, const Volume& g,
                             double smooth = kDefaultSoftDiceSmooth) {
  return 1.0 - soft_dice(p, g, smooth);
}

/// Confusion counts and volumes; `spacing` gives the voxel size in mm.
OverlapReport overlap_report(const Volume& pred, const Volume& gt, const Spacing3& spacing);

}  // namespace fbe
