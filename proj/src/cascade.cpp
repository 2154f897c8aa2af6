#include "fbe/cascade.hpp"

#include <map>
#include <stdexcept>

#include "fbe/random.hpp"
#include "fbe/synth.hpp"

namespace fbe {

const char* to_string(ExtractionStatus status) {
  return status == ExtractionStatus::ok ? "ok" : "no_brain_found";
}

void StageSpec::validate() const {
  if (!model) throw std::invalid_argument("stage has no predictor");
  if (window <= 0) throw std::invalid_argument("stage window must be positive");
  if (step <= 0 || step > window)
    throw std::invalid_argument("stage step must satisfy 1 <= step <= window");
  if (model.window() != window)
    throw std::invalid_argument("predictor '" + model.id() + "' has window " +
                                std::to_string(model.window()) + " but the stage uses " +
                                std::to_string(window));
  if (alpha && (*alpha < 0.0 || *alpha > 1.0))
    throw std::invalid_argument("stage alpha must lie in [0, 1]");
}

void CascadeConfig::validate() const {
  if (bfs_stages.empty()) throw std::invalid_argument("cascade needs at least one BFS stage");
  if (dfs_stages.empty()) throw std::invalid_argument("cascade needs at least one DFS stage");
  for (const auto& s : bfs_stages) s.validate();
  for (const auto& s : dfs_stages) s.validate();
  for (std::size_t i = 1; i < dfs_stages.size(); ++i)
    if (dfs_stages[i].window >= dfs_stages[i - 1].window)
      throw std::invalid_argument("DFS stages must have strictly decreasing window sizes");
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("alpha must lie in [0, 1]");
  if (bfs_threshold < 0.0) throw std::invalid_argument("bfs_threshold must be >= 0");
  if (conform_side <= 0) throw std::invalid_argument("conform_side must be positive");
  if (!(target_spacing_mm > 0.0)) throw std::invalid_argument("target spacing must be positive");
}

Volume reconstruct_full(const Volume& stage_mask, const BoundingBox& region, const Index3& dims) {
  if (!region.valid() || !BoundingBox::full(dims).contains(region))
    throw std::invalid_argument("reconstruct_full: region lies outside the target dims");
  if (stage_mask.dims() != region.extents())
    throw std::invalid_argument("reconstruct_full: mask dims differ from the region");
  Volume out(dims, stage_mask.spacing(), VolumeKind::mask);
  const std::size_t run = static_cast<std::size_t>(region.extent(2));
  for (std::int64_t i = 0; i < region.extent(0); ++i)
    for (std::int64_t j = 0; j < region.extent(1); ++j) {
      const float* src = &stage_mask.data()[stage_mask.offset(i, j, 0)];
      float* dst = &out.data()[out.offset(i + region.min[0], j + region.min[1], region.min[2])];
      std::copy(src, src + run, dst);
    }
  return out;
}

namespace {

BoundingBox offset_box(const BoundingBox& local, const Index3& by) {
  BoundingBox b = local;
  for (int a = 0; a < 3; ++a) {
    b.min[a] += by[a];
    b.max[a] += by[a];
  }
  return b;
}

}  // namespace

BfsResult bfs_localize(const Volume& image, const CascadeConfig& config) {
  const BoundingBox full = BoundingBox::full(image.dims());
  std::optional<Volume> combined;
  for (const auto& stage : config.bfs_stages) {
    const WindowPlan plan = plan_windows(full, stage.window, stage.step);
    const Volume probs = run_windows(image, plan, stage.model, config.accumulate_mode);
    Volume supra = threshold_strict(probs, config.bfs_threshold);
    if (!combined) combined = std::move(supra);
    else if (config.bfs_combine == BfsCombine::union_of) combined = mask_union(*combined, supra);
    else combined = mask_intersection(*combined, supra);
  }

  BfsResult result;
  if (!combined || combined->count_nonzero() == 0) return result;
  const Volume largest = largest_component(connected_components(*combined, config.connectivity));
  result.box = bounding_box(largest);
  result.status = ExtractionStatus::ok;
  return result;
}

ExtractionResult dfs_refine(const Volume& image, const BoundingBox& region,
                            const CascadeConfig& config) {
  if (!region.valid() || !BoundingBox::full(image.dims()).contains(region))
    throw std::invalid_argument("dfs_refine: search region lies outside the image");

  ExtractionResult result;
  result.roi_trace.push_back(region);
  BoundingBox current = region;
  for (std::size_t s = 0; s < config.dfs_stages.size(); ++s) {
    const StageSpec& stage = config.dfs_stages[s];
    const WindowPlan plan = plan_windows_in_frame(current, image.dims(), stage.window, stage.step);
    Volume probs;
    try {
      probs = run_windows(image, plan, stage.model, config.accumulate_mode);
    } catch (const PredictorError& e) {
      throw PredictorError("DFS stage " + std::to_string(s + 1) + ": " + e.what(), e.origin());
    }
    const Volume stage_mask = threshold(probs, stage.alpha.value_or(config.alpha));
    if (stage_mask.count_nonzero() == 0) break;

    result.stage_masks.push_back(reconstruct_full(stage_mask, current, image.dims()));
    const Volume largest =
        largest_component(connected_components(stage_mask, config.connectivity));
    current = offset_box(bounding_box(largest), current.min);
    result.roi_trace.push_back(current);
    ++result.stages_completed;
  }

  if (result.stage_masks.empty()) {
    result.mask = Volume(image.dims(), image.spacing(), VolumeKind::mask);
    result.status = ExtractionStatus::no_brain_found;
  } else {
    result.mask = majority_vote(result.stage_masks);
    result.status = ExtractionStatus::ok;
  }
  return result;
}

ExtractionResult extract_brain(const Volume& image, const CascadeConfig& config) {
  if (image.kind() != VolumeKind::intensity)
    throw std::invalid_argument("extract_brain expects an intensity volume");
  config.validate();

  const Conformer conformer(image.dims(), image.spacing(), config.target_spacing_mm,
                            config.conform_side);
  const Volume conformed = minmax_normalize(conformer.forward(image, Interp::linear));
  const BoundingBox full = BoundingBox::full(conformed.dims());

  const BfsResult located = bfs_localize(conformed, config);
  ExtractionResult result;
  if (!located.box) {
    result.roi_trace.push_back(full);
    result.mask = Volume(image.dims(), image.spacing(), VolumeKind::mask);
    result.status = ExtractionStatus::no_brain_found;
    return result;
  }

  result = dfs_refine(conformed, *located.box, config);
  result.roi_trace.insert(result.roi_trace.begin(), full);
  Volume native = conformer.inverse(result.mask);
  native.set_kind(VolumeKind::mask);
  native.set_spacing(image.spacing());
  result.mask = std::move(native);
  return result;
}

Volume single_pass(const Volume& image, const StageSpec& stage, double alpha, AccumulateMode mode) {
  stage.validate();
  const WindowPlan plan = plan_windows(BoundingBox::full(image.dims()), stage.window, stage.step);
  return threshold(run_windows(image, plan, stage.model, mode), alpha);
}

nlohmann::json ExtractionResult::trace_json() const {
  auto box_json = [](const BoundingBox& b) {
    return nlohmann::json{{"min", b.min}, {"max", b.max}, {"voxels", b.volume()}};
  };
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& b : roi_trace) trace.push_back(box_json(b));
  return {{"status", to_string(status)},
          {"stages_completed", stages_completed},
          {"roi_trace", trace},
          {"mask_voxels", mask.count_nonzero()}};
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

PredictorHandle build_predictor(const std::string& name, const nlohmann::json& spec,
                                std::int64_t window, const ConfigContext& ctx) {
  const std::string backend = spec.at("backend").get<std::string>();
  auto ground_truth = [&]() {
    if (!ctx.load_gt) throw std::invalid_argument("config uses an oracle but no loader is set");
    auto gt = ctx.load_gt(spec.at("gt").get<std::string>());
    if (!gt) throw std::invalid_argument("cannot load ground truth for predictor " + name);
    return gt;
  };

  if (backend == "oracle") return make_oracle(ground_truth(), window, name);
  if (backend == "noisy_oracle") {
    NoiseSpec noise;
    const auto& n = spec.value("noise", nlohmann::json::object());
    noise.fp_blob_rate = n.value("fp_blob_rate", noise.fp_blob_rate);
    if (n.contains("fp_blob_radius")) {
      const auto& r = n.at("fp_blob_radius");
      if (r.is_array()) {
        noise.fp_blob_radius_min = r.at(0).get<double>();
        noise.fp_blob_radius_max = r.at(1).get<double>();
      } else {
        noise.fp_blob_radius_min = noise.fp_blob_radius_max = r.get<double>();
      }
    }
    noise.fn_hole_rate = n.value("fn_hole_rate", noise.fn_hole_rate);
    noise.per_voxel_fp = n.value("per_voxel_fp", noise.per_voxel_fp);
    noise.seed_offset = n.value("seed_offset", noise.seed_offset);
    const std::uint64_t model_seed = spec.value("model_seed", derive_seed(0, "model:" + name));
    return make_noisy_oracle(ground_truth(), window, noise, model_seed, ctx.master_seed, name);
  }
  if (backend == "constant") return make_constant(spec.value("value", 0.0f), window, name);
  if (backend == "external") {
    const auto command = spec.at("command").get<std::vector<std::string>>();
    const auto timeout = std::chrono::milliseconds(spec.value("timeout_ms", 60000));
    return make_external(command, window, timeout, name);
  }
  throw std::invalid_argument("predictor " + name + ": unknown backend '" + backend + "'");
}

std::optional<char> table_letter(const std::string& name) {
  if (name.size() == 1 && name[0] >= 'A' && name[0] <= 'D') return name[0];
  return std::nullopt;
}

}  // namespace

CascadeConfig cascade_config_from_json(const nlohmann::json& j, const ConfigContext& ctx) {
  const int version = j.value("schema_version", kConfigSchemaVersion);
  if (version != kConfigSchemaVersion)
    throw std::invalid_argument("unsupported config schema_version " + std::to_string(version));

  CascadeConfig cfg;
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.bfs_threshold = j.value("bfs_threshold", cfg.bfs_threshold);
  const std::string combine = j.value("bfs_combine", std::string("union"));
  if (combine == "union") cfg.bfs_combine = BfsCombine::union_of;
  else if (combine == "intersection") cfg.bfs_combine = BfsCombine::intersection_of;
  else throw std::invalid_argument("bfs_combine must be 'union' or 'intersection'");
  const std::string mode = j.value("accumulate_mode", std::string("sum"));
  if (mode == "sum") cfg.accumulate_mode = AccumulateMode::sum;
  else if (mode == "mean") cfg.accumulate_mode = AccumulateMode::mean;
  else throw std::invalid_argument("accumulate_mode must be 'sum' or 'mean'");
  if (j.value("vote_rule", std::string("majority")) != "majority")
    throw std::invalid_argument("vote_rule must be 'majority'");
  const int conn = j.value("connectivity", 26);
  if (conn == 26) cfg.connectivity = Connectivity::twenty_six;
  else if (conn == 6) cfg.connectivity = Connectivity::six;
  else throw std::invalid_argument("connectivity must be 6 or 26");
  cfg.target_spacing_mm = j.value("target_spacing_mm", cfg.target_spacing_mm);
  cfg.conform_side = j.value("conform_side", cfg.conform_side);

  const auto& predictors = j.at("predictors");
  std::map<std::string, PredictorHandle> built;
  auto handle_for = [&](const std::string& name) -> PredictorHandle {
    if (auto it = built.find(name); it != built.end()) return it->second;
    if (!predictors.contains(name))
      throw std::invalid_argument("stage refers to undefined predictor '" + name + "'");
    const auto& spec = predictors.at(name);
    std::int64_t window;
    if (spec.contains("window")) window = spec.at("window").get<std::int64_t>();
    else if (auto letter = table_letter(name)) window = model_defaults(*letter).synthesis.window;
    else throw std::invalid_argument("predictor '" + name + "' needs a window");
    return built[name] = build_predictor(name, spec, window, ctx);
  };
  auto stages = [&](const char* key, std::vector<std::string> fallback) {
    std::vector<StageSpec> out;
    nlohmann::json list = nlohmann::json::array();
    if (j.contains(key)) list = j.at(key);
    else
      for (auto& m : fallback) list.push_back({{"model", m}});
    for (const auto& entry : list) {
      const std::string name = entry.at("model").get<std::string>();
      StageSpec s;
      s.model = handle_for(name);
      s.window = s.model.window();
      if (entry.contains("step")) s.step = entry.at("step").get<std::int64_t>();
      else if (auto letter = table_letter(name)) s.step = model_defaults(*letter).step;
      else throw std::invalid_argument("stage for '" + name + "' needs a step");
      if (entry.contains("alpha")) s.alpha = entry.at("alpha").get<double>();
      out.push_back(std::move(s));
    }
    return out;
  };
  cfg.bfs_stages = stages("bfs", {"A", "D"});
  cfg.dfs_stages = stages("dfs", {"B", "C", "D"});
  cfg.validate();
  return cfg;
}

nlohmann::json default_config_json(const nlohmann::json& backend_json) {
  nlohmann::json predictors = nlohmann::json::object();
  for (const auto& row : model_table()) {
    nlohmann::json p = backend_json;
    p["window"] = row.synthesis.window;
    predictors[std::string(1, row.model)] = p;
  }
  auto stage = [](char m) {
    return nlohmann::json{{"model", std::string(1, m)}, {"step", model_defaults(m).step}};
  };
  return {{"schema_version", kConfigSchemaVersion},
          {"alpha", 0.2},
          {"bfs_threshold", 0.0},
          {"bfs_combine", "union"},
          {"accumulate_mode", "sum"},
          {"vote_rule", "majority"},
          {"connectivity", 26},
          {"target_spacing_mm", 1.0},
          {"conform_side", 192},
          {"predictors", predictors},
          {"bfs", {stage('A'), stage('D')}},
          {"dfs", {stage('B'), stage('C'), stage('D')}}};
}

CascadeConfig default_cascade(const std::function<PredictorHandle(std::int64_t, char)>& make) {
  std::map<char, PredictorHandle> handles;
  for (const auto& row : model_table()) handles[row.model] = make(row.synthesis.window, row.model);
  auto stage = [&](char m) {
    const auto& row = model_defaults(m);
    return StageSpec{handles.at(m), row.synthesis.window, row.step, std::nullopt};
  };
  CascadeConfig cfg;
  cfg.bfs_stages = {stage('A'), stage('D')};
  cfg.dfs_stages = {stage('B'), stage('C'), stage('D')};
  return cfg;
}

}  // namespace fbe
