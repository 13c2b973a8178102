#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace sara {

// Inclusive range of tree-path lengths; `max` unset means unbounded.
struct LoopBin {
  int min = 2;
  std::optional<int> max;

  bool contains(int length) const { return length >= min && (!max || length <= *max); }
  bool operator==(const LoopBin&) const = default;
};

// All tunables of candidate retrieval, pair scoring and view-graph
// construction. Angles are radians in memory; the JSON and CLI surfaces
// use degrees.
struct SaraConfig {
  // Retrieval.
  int k = 10;
  // Scoring.
  int b = 50;
  int ransac_iterations = 32;
  double inlier_threshold_px = 2.0;
  double alpha = 1.0;
  double beta = 1.0;
  double tau_o = 0.01;
  double tau_p = 0.017453292519943295;        // 1 degree
  double parallax_cap = 0.52359877559829882;  // 30 degrees
  // Augmentation budgets; unset values resolve against the image count.
  std::optional<int> budget_loop;        // ceil(0.2 N)
  std::optional<int> budget_anchor;      // ceil(0.05 N)
  int budget_weak = 2;                   // per weak view
  std::optional<int> budget_weak_total;  // ceil(0.1 N)
  int weak_degree_threshold = 1;
  double weak_kappa_percentile = 25.0;
  std::vector<LoopBin> loop_bins = {{2, 4}, {5, 10}, {11, std::nullopt}};
  // Stage toggles (ablation).
  bool disable_msl = false;
  bool disable_lba = false;
  bool disable_wvr = false;
  uint64_t seed = 0;

  // Throws Error(InvalidConfig) when a field is out of range.
  void validate() const;
};

struct ResolvedBudgets {
  int loop = 0;
  int anchor = 0;
  int weak_per_view = 0;
  int weak_total = 0;
};

ResolvedBudgets resolve_budgets(const SaraConfig& config, uint32_t n_images);

// Applies the keys present in `json` on top of `config`. Unknown keys are an
// InvalidConfig error so typos do not silently fall back to defaults.
void apply_config_json(const nlohmann::json& json, SaraConfig& config);
SaraConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const SaraConfig& config);

double deg_to_rad(double deg);
double rad_to_deg(double rad);

}  // namespace sara
