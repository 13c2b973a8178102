#include "sara/pipeline.h"

#include <algorithm>
#include <chrono>

#include <spdlog/spdlog.h>

#include "sara/error.h"
#include "sara/feature_io.h"
#include "sara/report.h"

namespace sara {
namespace fs = std::filesystem;

namespace {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

RunReport make_report(const std::string& name, const SelectionResult& result,
                      const SaraConfig& config) {
  RunReport report;
  report.name = name;
  report.n_images = result.graph.n_nodes;
  report.n_candidates = result.candidates.size();
  report.n_scored = result.scores.size();
  for (const auto& [pair, score] : result.scores) {
    if (score.rejected) ++report.n_rejected[to_string(*score.rejected)];
  }
  for (EdgeRole role : {EdgeRole::Tree, EdgeRole::Loop, EdgeRole::Anchor, EdgeRole::Weak}) {
    report.n_selected[to_string(role)] = result.graph.count(role);
  }
  report.n_selected_total = result.graph.selected_edges.size();
  report.reduction_ratio = reduction_ratio(report.n_selected_total, report.n_images);
  report.n_components = result.graph.num_components;
  report.config = config;
  return report;
}

std::vector<std::string> image_ids_of(const DatasetManifest& manifest) {
  std::vector<std::string> ids;
  ids.reserve(manifest.size());
  for (const ManifestEntry& e : manifest.entries) ids.push_back(e.image_id);
  return ids;
}

void write_outputs(const SelectionResult& result, const RunReport& report,
                   const std::vector<std::string>& ids, const fs::path& out_pairs,
                   const fs::path& out_report) {
  const auto pairs = selected_id_pairs(result.graph, ids);
  write_pair_list(pairs, out_pairs);
  write_graph_report(result.graph, result.scores, ids, out_report,
                     {{"run", report.to_json(/*include_timings=*/false)}});
}

}  // namespace

nlohmann::json RunReport::to_json(bool include_timings) const {
  nlohmann::json out = {{"name", name},
                        {"n_images", n_images},
                        {"n_candidates", n_candidates},
                        {"n_scored", n_scored},
                        {"n_rejected", n_rejected},
                        {"n_selected", n_selected},
                        {"n_selected_total", n_selected_total},
                        {"n_exhaustive_pairs", num_exhaustive_pairs(n_images)},
                        {"reduction_ratio", reduction_ratio},
                        {"n_components", n_components},
                        {"seed", config.seed},
                        {"config", config_to_json(config)}};
  if (include_timings) {
    out["timings_s"] = {{"load", timings.load_s},
                        {"retrieval", timings.retrieval_s},
                        {"scoring", timings.scoring_s},
                        {"graph", timings.graph_s},
                        {"write", timings.write_s}};
  }
  return out;
}

SelectionResult select_pairs(std::span<const ImageFeatures> images, const SaraConfig& config,
                             int threads, StageTimings* timings) {
  config.validate();
  const auto n = static_cast<uint32_t>(images.size());
  if (n < 2) throw Error(ErrorCode::TooFewImages, "need at least 2 images, got " + std::to_string(n));
  Stopwatch clock;
  SelectionResult result;

  std::vector<Eigen::VectorXf> globals;
  globals.reserve(n);
  for (const ImageFeatures& f : images) globals.push_back(f.global_desc);
  const int k = std::min<int>(config.k, static_cast<int>(n) - 1);
  if (k != config.k) spdlog::info("k={} exceeds N-1; retrieving k={}", config.k, k);
  result.candidates = cosine_knn(globals, k);
  if (timings) timings->retrieval_s = clock.lap();

  result.scores = score_all(images, result.candidates, config, threads);
  if (timings) timings->scoring_s = clock.lap();

  result.graph = build_view_graph(result.scores, n, config);
  if (timings) timings->graph_s = clock.lap();
  return result;
}

RunReport run_select(const SelectRequest& request) {
  Stopwatch clock;
  StageTimings timings;
  const DatasetManifest manifest = load_manifest(request.manifest);
  const std::vector<ImageFeatures> images = load_all_features(manifest, request.threads);
  timings.load_s = clock.lap();
  spdlog::info("loaded {} images from {}", images.size(), request.manifest.string());

  const SelectionResult result = select_pairs(images, request.config, request.threads, &timings);
  clock.lap();
  RunReport report = make_report("select", result, request.config);
  write_outputs(result, report, image_ids_of(manifest), request.out_pairs, request.out_report);
  timings.write_s = clock.lap();
  report.timings = timings;
  if (request.out_run) {
    write_text_file(*request.out_run, report.to_json(true).dump(2) + "\n");
  }
  spdlog::info("selected {} of {} exhaustive pairs (reduction {:.4f}) from {} candidates",
               report.n_selected_total, num_exhaustive_pairs(report.n_images),
               report.reduction_ratio, report.n_candidates);
  return report;
}

const std::vector<AblationVariant>& ablation_variants() {
  static const std::vector<AblationVariant> variants = {
      {"full", true, true, true},          {"wo_msl", false, true, true},
      {"wo_lba", true, false, true},       {"wo_wvr", true, true, false},
      {"only_msl", true, false, false},    {"only_lba", false, true, false},
      {"only_wvr", false, false, true},    {"base_only", false, false, false},
  };
  return variants;
}

SaraConfig apply_variant(SaraConfig config, const AblationVariant& variant) {
  config.disable_msl = !variant.msl;
  config.disable_lba = !variant.lba;
  config.disable_wvr = !variant.wvr;
  return config;
}

std::vector<RunReport> run_ablation(const fs::path& manifest_path, const SaraConfig& config,
                                    const fs::path& out_dir, int threads) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

  Stopwatch clock;
  StageTimings shared;
  const DatasetManifest manifest = load_manifest(manifest_path);
  const std::vector<ImageFeatures> images = load_all_features(manifest, threads);
  shared.load_s = clock.lap();
  const std::vector<std::string> ids = image_ids_of(manifest);

  // Scoring does not depend on the stage toggles, so it runs once.
  SelectionResult base = select_pairs(images, apply_variant(config, ablation_variants().back()),
                                      threads, &shared);

  std::vector<RunReport> reports;
  nlohmann::json summary = nlohmann::json::array();
  for (const AblationVariant& variant : ablation_variants()) {
    const SaraConfig variant_config = apply_variant(config, variant);
    clock.lap();
    SelectionResult result{base.candidates, base.scores,
                           build_view_graph(base.scores, base.graph.n_nodes, variant_config)};
    StageTimings timings = shared;
    timings.graph_s = clock.lap();
    RunReport report = make_report(variant.name, result, variant_config);
    write_outputs(result, report, ids, out_dir / (variant.name + ".pairs.txt"),
                  out_dir / (variant.name + ".report.json"));
    timings.write_s = clock.lap();
    report.timings = timings;
    summary.push_back(report.to_json(false));
    reports.push_back(std::move(report));
  }
  write_text_file(out_dir / "ablation.json", summary.dump(2) + "\n");
  return reports;
}

void run_synth(const SynthRequest& request, const fs::path& out_dir) {
  SyntheticScene scene = generate_orbit_scene(request.orbit);
  if (request.planted) plant_weak_view(scene, *request.planted);
  const std::vector<RenderedImage> rendered = render_features(scene, request.render);
  dump_scene(scene, rendered, out_dir);
  spdlog::info("wrote {} synthetic views to {}", rendered.size(), out_dir.string());
}

}  // namespace sara
