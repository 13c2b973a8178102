#pragma once

// End-to-end orchestration: load features, retrieve candidates, score them,
// build the view graph and write the pair list and reports.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sara/config.h"
#include "sara/retrieval.h"
#include "sara/scorer.h"
#include "sara/synth.h"
#include "sara/viewgraph.h"

namespace sara {

struct StageTimings {
  double load_s = 0.0;
  double retrieval_s = 0.0;
  double scoring_s = 0.0;
  double graph_s = 0.0;
  double write_s = 0.0;
};

struct RunReport {
  std::string name = "select";
  uint32_t n_images = 0;
  size_t n_candidates = 0;
  size_t n_scored = 0;
  std::map<std::string, size_t> n_rejected;  // by reason
  std::map<std::string, size_t> n_selected;  // by role
  size_t n_selected_total = 0;
  double reduction_ratio = 0.0;
  uint32_t n_components = 0;
  StageTimings timings;
  SaraConfig config;

  // Timings live under their own key and are omitted when not requested, so
  // the remaining fields are reproducible byte for byte.
  nlohmann::json to_json(bool include_timings) const;
};

struct SelectionResult {
  CandidateSet candidates;
  ScoreMap scores;
  ViewGraph graph;
};

// In-memory pipeline over already loaded features.
SelectionResult select_pairs(std::span<const ImageFeatures> images, const SaraConfig& config,
                             int threads = 0, StageTimings* timings = nullptr);

struct SelectRequest {
  std::filesystem::path manifest;
  SaraConfig config;
  std::filesystem::path out_pairs;
  std::filesystem::path out_report;
  std::optional<std::filesystem::path> out_run;  // run report with timings
  int threads = 0;                               // 0: hardware concurrency
};

RunReport run_select(const SelectRequest& request);

struct AblationVariant {
  std::string name;
  bool msl = true;
  bool lba = true;
  bool wvr = true;
};

// Full; without each augmentation; each augmentation alone; tree only.
const std::vector<AblationVariant>& ablation_variants();
SaraConfig apply_variant(SaraConfig config, const AblationVariant& variant);

// Scores once and builds the graph for every variant, writing
// <name>.pairs.txt and <name>.report.json per variant plus ablation.json.
std::vector<RunReport> run_ablation(const std::filesystem::path& manifest, const SaraConfig& config,
                                    const std::filesystem::path& out_dir, int threads = 0);

struct SynthRequest {
  OrbitOptions orbit;
  std::optional<PlantedViewOptions> planted;
  RenderOptions render;
};

// Generates a scene and writes feature files, manifest.json and truth.json.
void run_synth(const SynthRequest& request, const std::filesystem::path& out_dir);

}  // namespace sara
