// fbe: brain extraction cascade, synthetic pairs, evaluation and simulation.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fbe/cascade.hpp"
#include "fbe/metrics.hpp"
#include "fbe/nifti.hpp"
#include "fbe/parallel.hpp"
#include "fbe/simulate.hpp"
#include "fbe/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitError = 1;
constexpr int kExitNoBrain = 2;

struct Globals {
  int threads = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> argv;
};

std::string timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) t = std::time_t(std::stoll(epoch));
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json manifest(const Globals& g, const std::string& command, const std::string& config,
              const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) {
  std::string line;
  for (const auto& a : g.argv) line += (line.empty() ? "" : " ") + a;
  return {{"tool", "fbe"},
          {"version", kVersion},
          {"command", command},
          {"argv", line},
          {"config", config},
          {"seed", g.seed},
          {"inputs", inputs},
          {"outputs", outputs},
          {"timestamp", timestamp()}};
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw fbe::IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fbe::IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw fbe::IoError("write failed for " + path.string());
}

void check_uncompressed(const fs::path& path) {
  if (path.extension() == ".gz")
    throw std::invalid_argument("writing compressed NIfTI is not supported: " + path.string());
}

// "mask.nii" -> "mask.roi.json"
fs::path sibling(const fs::path& nifti, const std::string& suffix) {
  std::string name = nifti.filename().string();
  for (const std::string ext : {".nii.gz", ".nii"})
    if (name.size() > ext.size() && name.compare(name.size() - ext.size(), ext.size(), ext) == 0) {
      name.resize(name.size() - ext.size());
      break;
    }
  return nifti.parent_path() / (name + suffix);
}

// Foreground = any non-zero voxel, so label maps work as ground truth too.
fbe::Volume read_foreground(const fs::path& path) {
  fbe::Volume v = fbe::read_nifti(path, fbe::VolumeKind::intensity);
  for (auto& x : v.data()) x = x != 0.0f ? 1.0f : 0.0f;
  v.set_kind(fbe::VolumeKind::mask);
  return v;
}

// ---------------------------------------------------------------------------

struct ExtractArgs {
  std::string input, output, config, trace;
};

int run_extract(const Globals& g, const ExtractArgs& a) {
  if (a.config.empty())
    throw std::invalid_argument("extract needs --config (or the FBE_CONFIG environment variable)");
  const fs::path config_path = a.config;
  const json doc = read_json_file(config_path);
  const fbe::Volume image = fbe::read_nifti(a.input, fbe::VolumeKind::intensity);
  check_uncompressed(a.output);

  const double target = doc.value("target_spacing_mm", 1.0);
  const std::int64_t side = doc.value("conform_side", std::int64_t(192));
  std::map<std::string, std::shared_ptr<const fbe::Volume>> cache;
  fbe::ConfigContext ctx;
  ctx.master_seed = g.seed;
  ctx.load_gt = [&](const std::string& rel) -> std::shared_ptr<const fbe::Volume> {
    fs::path p = rel;
    if (p.is_relative()) p = config_path.parent_path() / p;
    auto& slot = cache[p.string()];
    if (!slot) {
      const fbe::Volume gt = read_foreground(p);
      const fbe::Conformer c(gt.dims(), gt.spacing(), target, side);
      slot = std::make_shared<const fbe::Volume>(c.forward(gt, fbe::Interp::nearest));
    }
    return slot;
  };
  const fbe::CascadeConfig cfg = fbe::cascade_config_from_json(doc, ctx);
  const fbe::ExtractionResult result = fbe::extract_brain(image, cfg);

  fbe::write_nifti(result.mask, a.output, fbe::NiftiType::uint8);
  const fs::path trace = a.trace.empty() ? sibling(a.output, ".roi.json") : fs::path(a.trace);
  json out = result.trace_json();
  out["manifest"] = manifest(g, "extract", a.config, {a.input}, {a.output, trace.string()});
  write_text(trace, out.dump(2) + "\n");

  std::cout << "status " << fbe::to_string(result.status) << ", " << result.stages_completed
            << " DFS stage(s), " << result.mask.count_nonzero() << " mask voxels -> " << a.output
            << "\n";
  return result.status == fbe::ExtractionStatus::ok ? 0 : kExitNoBrain;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string labelmap, params, outdir;
  bool phantom = false;
  std::string model = "A";
  std::int64_t count = 1;
  std::int64_t phantom_side = 192;
};

int run_synth(const Globals& g, const SynthArgs& a) {
  fbe::SynthesisParams params = fbe::model_defaults(a.model[0]).synthesis;
  if (!a.params.empty()) params = fbe::synthesis_params_from_json(read_json_file(a.params), params);
  params.validate();

  fbe::Volume labels;
  std::vector<std::string> inputs;
  if (!a.labelmap.empty()) {
    labels = fbe::read_nifti(a.labelmap, fbe::VolumeKind::label);
    inputs.push_back(a.labelmap);
  } else if (a.phantom) {
    fbe::Rng rng(fbe::derive_seed(g.seed, "phantom"));
    labels = fbe::make_phantom_label_map(rng, {a.phantom_side, a.phantom_side, a.phantom_side});
    inputs.push_back("phantom:" + std::to_string(a.phantom_side));
  } else {
    throw std::invalid_argument("synth needs a label map or --phantom");
  }

  const fs::path dir = a.outdir;
  fs::create_directories(dir);
  std::vector<std::string> outputs;
  for (std::int64_t i = 0; i < a.count; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "%04lld", static_cast<long long>(i));
    const std::uint64_t seed = fbe::derive_seed(g.seed, "synth", std::uint64_t(i));
    const fbe::TrainingPair pair = fbe::make_training_pair(labels, params, seed);
    const fs::path image = dir / ("image_" + std::string(stem) + ".nii");
    const fs::path mask = dir / ("mask_" + std::string(stem) + ".nii");
    const fs::path side = dir / ("pair_" + std::string(stem) + ".json");
    fbe::write_nifti(pair.image, image, fbe::NiftiType::float32);
    fbe::write_nifti(pair.gt, mask, fbe::NiftiType::uint8);
    json meta = pair.metadata();
    meta["index"] = i;
    meta["model"] = a.model;
    meta["params"] = fbe::to_json(params);
    write_text(side, meta.dump(2) + "\n");
    for (const auto& p : {image, mask, side}) outputs.push_back(p.string());
  }
  json m = manifest(g, "synth", a.params, inputs, outputs);
  m["model"] = a.model;
  m["params"] = fbe::to_json(params);
  write_text(dir / "manifest.json", m.dump(2) + "\n");
  std::cout << "wrote " << a.count << " pair(s) of " << params.window << "^3 to " << a.outdir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string pred, gt, csv, id;
  bool as_json = false;
  std::int64_t side = 192;
};

int run_eval(const EvalArgs& a) {
  const fbe::Volume pred = read_foreground(a.pred);
  const fbe::Volume gt = read_foreground(a.gt);
  const fbe::Conformer cp(pred.dims(), pred.spacing(), 1.0, a.side);
  const fbe::Conformer cg(gt.dims(), gt.spacing(), 1.0, a.side);
  if (cp.resampled_dims() != cg.resampled_dims()) {
    auto text = [](const fbe::Index3& d) {
      return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
    };
    throw std::invalid_argument("grids differ at 1 mm: " + a.pred + " is " +
                                text(cp.resampled_dims()) + ", " + a.gt + " is " +
                                text(cg.resampled_dims()));
  }
  const fbe::OverlapReport r = fbe::overlap_report(cp.forward(pred, fbe::Interp::nearest),
                                                   cg.forward(gt, fbe::Interp::nearest),
                                                   {1.0, 1.0, 1.0});
  const std::string id = a.id.empty() ? fs::path(a.pred).filename().string() : a.id;
  if (a.as_json) {
    json j = r.to_json();
    j["id"] = id;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << std::fixed << std::setprecision(6) << "dice " << r.dice << "  tp " << r.tp
              << "  fp " << r.fp << "  fn " << r.fn << "  fp_rate " << r.fp_rate << "  gt "
              << r.gt_mm3 << " mm3  pred " << r.pred_mm3 << " mm3\n";
  }
  if (!a.csv.empty()) {
    const bool fresh = !fs::exists(a.csv) || fs::file_size(a.csv) == 0;
    std::ofstream out(a.csv, std::ios::app);
    if (!out) throw fbe::IoError("cannot open " + a.csv + " for writing");
    if (fresh) out << fbe::OverlapReport::csv_header() << "\n";
    out << r.csv_row(id) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::size_t seeds = 20;
  double per_voxel_fp = 0.0, blob_rate = 0.0, hole_rate = 0.0;
  double blob_radius_min = 2.0, blob_radius_max = 4.0;
  std::string noise_spec, report, accumulate = "sum";
  std::int64_t side = 192;
  double alpha = 0.2;
};

int run_simulate(const Globals& g, const SimulateArgs& a) {
  fbe::SimulationSpec spec;
  spec.noise.per_voxel_fp = a.per_voxel_fp;
  spec.noise.fp_blob_rate = a.blob_rate;
  spec.noise.fp_blob_radius_min = a.blob_radius_min;
  spec.noise.fp_blob_radius_max = a.blob_radius_max;
  spec.noise.fn_hole_rate = a.hole_rate;
  if (!a.noise_spec.empty()) {
    const json n = read_json_file(a.noise_spec);
    spec.noise.per_voxel_fp = n.value("per_voxel_fp", spec.noise.per_voxel_fp);
    spec.noise.fp_blob_rate = n.value("fp_blob_rate", spec.noise.fp_blob_rate);
    spec.noise.fn_hole_rate = n.value("fn_hole_rate", spec.noise.fn_hole_rate);
    spec.noise.seed_offset = n.value("seed_offset", spec.noise.seed_offset);
    if (n.contains("fp_blob_radius")) {
      const auto& r = n.at("fp_blob_radius");
      if (r.is_array()) {
        spec.noise.fp_blob_radius_min = r.at(0).get<double>();
        spec.noise.fp_blob_radius_max = r.at(1).get<double>();
      } else {
        spec.noise.fp_blob_radius_min = spec.noise.fp_blob_radius_max = r.get<double>();
      }
    }
  }
  spec.noise.validate();
  spec.side = a.side;
  spec.alpha = a.alpha;
  spec.master_seed = g.seed;
  spec.accumulate_mode = a.accumulate == "mean" ? fbe::AccumulateMode::mean : fbe::AccumulateMode::sum;

  const fbe::SimulationSummary s = fbe::simulate(spec, a.seeds);
  std::cout << s.table();
  if (spec.noise.fp_blob_rate == 0.0 && spec.noise.fn_hole_rate == 0.0 && spec.noise.per_voxel_fp > 0.0)
    std::cout << "expected majority fp rate " << std::setprecision(4)
              << fbe::majority_fp_rate(spec.noise.per_voxel_fp, 3) << "\n";
  if (!a.report.empty()) {
    write_text(a.report, s.csv());
    json m = manifest(g, "simulate", a.noise_spec, {}, {a.report});
    m["noise"] = {{"per_voxel_fp", spec.noise.per_voxel_fp},
                  {"fp_blob_rate", spec.noise.fp_blob_rate},
                  {"fp_blob_radius", {spec.noise.fp_blob_radius_min, spec.noise.fp_blob_radius_max}},
                  {"fn_hole_rate", spec.noise.fn_hole_rate},
                  {"seed_offset", spec.noise.seed_offset}};
    m["seeds"] = a.seeds;
    m["side"] = a.side;
    write_text(a.report + ".manifest.json", m.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct PlanArgs {
  std::vector<std::int64_t> dims;
  std::int64_t window = 0, step = 0;
  bool quiet = false;
};

int run_plan(const PlanArgs& a) {
  fbe::Index3 dims;
  if (a.dims.size() == 1) dims = {a.dims[0], a.dims[0], a.dims[0]};
  else if (a.dims.size() == 3) dims = {a.dims[0], a.dims[1], a.dims[2]};
  else throw std::invalid_argument("--dims takes one or three integers");
  const fbe::WindowPlan plan = fbe::plan_windows(fbe::BoundingBox::full(dims), a.window, a.step);
  std::cout << "windows " << plan.origins.size() << "\n";
  if (!a.quiet)
    for (const auto& o : plan.origins) std::cout << o[0] << " " << o[1] << " " << o[2] << "\n";
  const fbe::Volume cov = fbe::coverage_counts(plan);
  float lo = cov[0], hi = cov[0];
  for (float c : cov.data()) lo = std::min(lo, c), hi = std::max(hi, c);
  std::cout << "coverage min " << lo << " max " << hi << " mean " << std::fixed
            << std::setprecision(4) << cov.sum() / double(cov.size()) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fetal brain extraction by sliding-window cascade"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Globals g;
  g.argv.assign(argv, argv + argc);
  app.add_option("--threads", g.threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", g.seed, "master seed");
  app.fallthrough();

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "extract a brain mask from a NIfTI volume");
  extract->add_option("input", ex.input, "input volume")->required();
  extract->add_option("output", ex.output, "output mask (uint8 NIfTI)")->required();
  extract->add_option("--config", ex.config, "cascade config JSON")->envname("FBE_CONFIG");
  extract->add_option("--trace", ex.trace, "roi trace JSON (default: <output>.roi.json)");

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "write synthetic training pairs");
  synth->add_option("labelmap", sy.labelmap, "label map NIfTI");
  synth->add_flag("--phantom", sy.phantom, "use the built-in phantom label map");
  synth->add_option("--phantom-side", sy.phantom_side, "phantom size in voxels")
      ->check(CLI::Range(32, 512));
  synth->add_option("--model", sy.model, "table row supplying the defaults")
      ->check(CLI::IsMember({"A", "B", "C", "D"}));
  synth->add_option("--params", sy.params, "JSON overriding synthesis parameters");
  synth->add_option("--count", sy.count, "number of pairs")->check(CLI::PositiveNumber);
  synth->add_option("--outdir", sy.outdir, "output directory")->required();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "overlap metrics between two masks at 1 mm");
  eval->add_option("pred", ev.pred, "predicted mask")->required();
  eval->add_option("gt", ev.gt, "reference mask")->required();
  eval->add_option("--csv", ev.csv, "append a row to this CSV");
  eval->add_option("--id", ev.id, "row id (default: prediction file name)");
  eval->add_flag("--json", ev.as_json, "print JSON");
  eval->add_option("--side", ev.side, "conformed cube side")->check(CLI::PositiveNumber);

  SimulateArgs si;
  auto* simulate = app.add_subcommand("simulate", "single model A pass vs cascade with noisy oracles");
  simulate->add_option("--seeds", si.seeds, "number of phantoms")->check(CLI::PositiveNumber);
  simulate->add_option("--per-voxel-fp", si.per_voxel_fp, "per-voxel false-positive rate");
  simulate->add_option("--blob-rate", si.blob_rate, "spurious blobs per window");
  simulate->add_option("--blob-radius-min", si.blob_radius_min);
  simulate->add_option("--blob-radius-max", si.blob_radius_max);
  simulate->add_option("--hole-rate", si.hole_rate, "deletion holes per window");
  simulate->add_option("--noise-spec", si.noise_spec, "noise JSON (overrides the flags)");
  simulate->add_option("--side", si.side, "phantom size")->check(CLI::Range(32, 512));
  simulate->add_option("--alpha", si.alpha, "DFS threshold")->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--accumulate", si.accumulate)->check(CLI::IsMember({"sum", "mean"}));
  simulate->add_option("--report", si.report, "CSV report path");

  PlanArgs pl;
  auto* plan = app.add_subcommand("plan", "list sliding-window origins");
  plan->add_option("--dims", pl.dims, "volume dims (one or three values)")->required()->expected(1, 3);
  plan->add_option("--window", pl.window, "window size")->required()->check(CLI::PositiveNumber);
  plan->add_option("--step", pl.step, "step size")->required()->check(CLI::PositiveNumber);
  plan->add_flag("--quiet", pl.quiet, "omit the origin list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    fbe::set_num_threads(g.threads);
    if (*extract) return run_extract(g, ex);
    if (*synth) return run_synth(g, sy);
    if (*eval) return run_eval(ev);
    if (*simulate) return run_simulate(g, si);
    if (*plan) return run_plan(pl);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
