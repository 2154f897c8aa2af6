#include "fbe/simulate.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "fbe/metrics.hpp"
#include "fbe/random.hpp"
#include "fbe/synth.hpp"

namespace fbe {

double majority_fp_rate(double p, int n) {
  const int need = n / 2 + 1;
  double total = 0.0;
  for (int k = need; k <= n; ++k) {
    double binom = 1.0;
    for (int i = 0; i < k; ++i) binom = binom * double(n - i) / double(i + 1);
    total += binom * std::pow(p, k) * std::pow(1.0 - p, n - k);
  }
  return total;
}

SimulationCase simulate_case(const SimulationSpec& spec, std::uint64_t index) {
  const std::uint64_t case_seed = derive_seed(spec.master_seed, "simulate", index);
  Rng rng(derive_seed(case_seed, "phantom"));
  const Index3 dims{spec.side, spec.side, spec.side};
  const Volume labels = make_phantom_label_map(rng, dims);
  auto gt = std::make_shared<const Volume>(brain_mask(labels));

  // Oracles ignore intensities; a plain per-label rendering is enough.
  Rng image_rng(derive_seed(case_seed, "image"));
  const Volume image = synthesize_image(labels, SynthesisParams::identity(spec.side), image_rng);

  CascadeConfig cfg = default_cascade([&](std::int64_t w, char m) {
    return make_noisy_oracle(gt, w, spec.noise, derive_seed(0, "model", std::uint64_t(m)), case_seed,
                             std::string(1, m));
  });
  cfg.alpha = spec.alpha;
  cfg.accumulate_mode = spec.accumulate_mode;
  cfg.conform_side = spec.side;

  SimulationCase out;
  out.index = index;

  const Volume single = single_pass(image, cfg.bfs_stages.front(), spec.alpha, spec.accumulate_mode);
  const OverlapReport single_report = overlap_report(single, *gt, gt->spacing());
  out.dice_single = single_report.dice;
  out.fp_rate_single = single_report.fp_rate;

  const ExtractionResult result = extract_brain(image, cfg);
  const OverlapReport cascade_report = overlap_report(result.mask, *gt, gt->spacing());
  out.dice_cascade = cascade_report.dice;
  out.fp_rate_cascade = cascade_report.fp_rate;
  out.status = result.status;

  if (result.status == ExtractionStatus::ok) {
    const BoundingBox& roi = result.roi_trace.back();
    for (std::int64_t i = roi.min[0]; i < roi.max[0]; ++i)
      for (std::int64_t j = roi.min[1]; j < roi.max[1]; ++j)
        for (std::int64_t k = roi.min[2]; k < roi.max[2]; ++k) {
          if (gt->at(i, j, k) != 0.0f) continue;
          ++out.roi_negatives;
          out.roi_false_positives += result.mask.at(i, j, k) != 0.0f;
        }
  }
  return out;
}

SimulationSummary simulate(const SimulationSpec& spec, std::size_t count) {
  SimulationSummary s;
  std::int64_t neg = 0, fp = 0;
  for (std::size_t k = 0; k < count; ++k) {
    s.cases.push_back(simulate_case(spec, k));
    const auto& c = s.cases.back();
    s.mean_dice_single += c.dice_single;
    s.mean_dice_cascade += c.dice_cascade;
    s.mean_fp_rate_single += c.fp_rate_single;
    neg += c.roi_negatives;
    fp += c.roi_false_positives;
    s.cascade_wins += c.dice_cascade > c.dice_single;
  }
  if (count > 0) {
    s.mean_dice_single /= double(count);
    s.mean_dice_cascade /= double(count);
    s.mean_fp_rate_single /= double(count);
  }
  s.pooled_fp_rate_cascade_roi = neg > 0 ? double(fp) / double(neg) : 0.0;
  return s;
}

std::string SimulationSummary::csv_header() {
  return "seed_index,dice_single,dice_cascade,fp_rate_single,fp_rate_cascade,"
         "fp_rate_cascade_roi,roi_negatives,status";
}

std::string SimulationSummary::csv() const {
  std::ostringstream os;
  os << std::setprecision(10) << csv_header() << '\n';
  for (const auto& c : cases)
    os << c.index << ',' << c.dice_single << ',' << c.dice_cascade << ',' << c.fp_rate_single
       << ',' << c.fp_rate_cascade << ',' << c.fp_rate_cascade_roi() << ',' << c.roi_negatives
       << ',' << to_string(c.status) << '\n';
  return os.str();
}

std::string SimulationSummary::table() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "seed  dice(single A)  dice(cascade)  fp(single A)  fp(cascade, final ROI)\n";
  for (const auto& c : cases)
    os << std::setw(4) << c.index << "  " << std::setw(14) << c.dice_single << "  "
       << std::setw(13) << c.dice_cascade << "  " << std::setw(12) << c.fp_rate_single << "  "
       << std::setw(22) << c.fp_rate_cascade_roi() << '\n';
  os << "mean  " << std::setw(14) << mean_dice_single << "  " << std::setw(13) << mean_dice_cascade
     << "  " << std::setw(12) << mean_fp_rate_single << "  " << std::setw(22)
     << pooled_fp_rate_cascade_roi << "  (pooled)\n";
  os << "cascade wins " << cascade_wins << "/" << cases.size() << '\n';
  return os.str();
}

}  // namespace fbe
