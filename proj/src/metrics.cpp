#include "fbe/metrics.hpp"

#include <sstream>
#include <stdexcept>

namespace fbe {

namespace {

void require_same_dims(const Volume& a, const Volume& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": dims mismatch");
}

}  // namespace

double dice(const Volume& a, const Volume& b) {
  require_same_dims(a, b, "dice");
  std::int64_t inter = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0.0f, y = b[i] != 0.0f;
    na += x;
    nb += y;
    inter += x && y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * double(inter) / double(na + nb);
}

double soft_dice(const Volume& p, const Volume& g, double smooth) {
  require_same_dims(p, g, "soft_dice");
  if (smooth < 0.0) throw std::invalid_argument("soft_dice: smooth must be >= 0");
  double pg = 0.0, sp = 0.0, sg = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    pg += double(p[i]) * double(g[i]);
    sp += p[i];
    sg += g[i];
  }
  const double denom = sp + sg + smooth;
  if (denom == 0.0) return 1.0;
  return (2.0 * pg + smooth) / denom;
}

OverlapReport overlap_report(const Volume& pred, const Volume& gt, const Spacing3& spacing) {
  require_same_dims(pred, gt, "overlap_report");
  OverlapReport r;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0.0f, g = gt[i] != 0.0f;
    r.tp += p && g;
    r.fp += p && !g;
    r.fn += !p && g;
    r.tn += !p && !g;
  }
  r.gt_voxels = r.tp + r.fn;
  r.pred_voxels = r.tp + r.fp;
  const double denom = double(2 * r.tp + r.fp + r.fn);
  r.dice = denom > 0.0 ? 2.0 * double(r.tp) / denom : 1.0;
  r.fp_rate = (r.fp + r.tn) > 0 ? double(r.fp) / double(r.fp + r.tn) : 0.0;
  const double voxel_mm3 = spacing[0] * spacing[1] * spacing[2];
  r.gt_mm3 = double(r.gt_voxels) * voxel_mm3;
  r.pred_mm3 = double(r.pred_voxels) * voxel_mm3;
  return r;
}

nlohmann::json OverlapReport::to_json() const {
  return {{"dice", dice},       {"tp", tp},
          {"fp", fp},           {"fn", fn},
          {"tn", tn},           {"fp_rate", fp_rate},
          {"gt_voxels", gt_voxels}, {"pred_voxels", pred_voxels},
          {"gt_mm3", gt_mm3},   {"pred_mm3", pred_mm3}};
}

std::string OverlapReport::csv_header() {
  return "id,dice,tp,fp,fn,fp_rate,gt_voxels,pred_voxels,gt_mm3,pred_mm3";
}

std::string OverlapReport::csv_row(const std::string& id) const {
  std::ostringstream os;
  os.precision(10);
  os << id << ',' << dice << ',' << tp << ',' << fp << ',' << fn << ',' << fp_rate << ','
     << gt_voxels << ',' << pred_voxels << ',' << gt_mm3 << ',' << pred_mm3;
  return os.str();
}

}  // namespace fbe
