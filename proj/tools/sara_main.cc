// sara: select a sparse, geometry-aware set of image pairs for SfM matching.
//
//   sara select --manifest m.json --out-pairs pairs.txt --out-report graph.json
//   sara ablate --manifest m.json --out-dir ablation/
//   sara synth  --out-dir scene/ --n-cameras 50
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
// SARA_LOG sets the log level (trace, debug, info, warn, error, off).

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sara/config.h"
#include "sara/error.h"
#include "sara/pipeline.h"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct ConfigFlags {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<int> k, b, ransac_iterations;
  std::optional<double> inlier_threshold_px, alpha, beta, tau_o, tau_p, parallax_cap;
  std::optional<int> budget_loop, budget_anchor, budget_weak, budget_weak_total;
  std::optional<int> weak_degree_threshold;
  bool disable_msl = false, disable_lba = false, disable_wvr = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "RNG seed");
    app->add_option("--k", k, "retrieval neighbors per image");
    app->add_option("--b", b, "mutual-NN correspondence budget per pair");
    app->add_option("--ransac-iterations", ransac_iterations, "short RANSAC iterations");
    app->add_option("--inlier-threshold-px", inlier_threshold_px, "Sampson inlier threshold, px");
    app->add_option("--alpha", alpha, "overlap exponent");
    app->add_option("--beta", beta, "parallax exponent");
    app->add_option("--tau-o", tau_o, "minimum overlap");
    app->add_option("--tau-p", tau_p, "minimum parallax, degrees");
    app->add_option("--parallax-cap", parallax_cap, "parallax saturation, degrees");
    app->add_option("--budget-loop", budget_loop, "loop-closure edge budget");
    app->add_option("--budget-anchor", budget_anchor, "long-baseline anchor budget");
    app->add_option("--budget-weak", budget_weak, "support edges per weak view");
    app->add_option("--budget-weak-total", budget_weak_total, "total weak-view support edges");
    app->add_option("--weak-degree-threshold", weak_degree_threshold,
                    "tree degree at or below which a view is weak");
    app->add_flag("--disable-msl", disable_msl, "skip multi-scale loop edges");
    app->add_flag("--disable-lba", disable_lba, "skip long-baseline anchors");
    app->add_flag("--disable-wvr", disable_wvr, "skip weak-view reinforcement");
  }

  sara::SaraConfig resolve() const {
    sara::SaraConfig config = config_path.empty() ? sara::SaraConfig{} : sara::load_config(config_path);
    if (seed) config.seed = *seed;
    if (k) config.k = *k;
    if (b) config.b = *b;
    if (ransac_iterations) config.ransac_iterations = *ransac_iterations;
    if (inlier_threshold_px) config.inlier_threshold_px = *inlier_threshold_px;
    if (alpha) config.alpha = *alpha;
    if (beta) config.beta = *beta;
    if (tau_o) config.tau_o = *tau_o;
    if (tau_p) config.tau_p = sara::deg_to_rad(*tau_p);
    if (parallax_cap) config.parallax_cap = sara::deg_to_rad(*parallax_cap);
    if (budget_loop) config.budget_loop = *budget_loop;
    if (budget_anchor) config.budget_anchor = *budget_anchor;
    if (budget_weak) config.budget_weak = *budget_weak;
    if (budget_weak_total) config.budget_weak_total = *budget_weak_total;
    if (weak_degree_threshold) config.weak_degree_threshold = *weak_degree_threshold;
    config.disable_msl = config.disable_msl || disable_msl;
    config.disable_lba = config.disable_lba || disable_lba;
    config.disable_wvr = config.disable_wvr || disable_wvr;
    config.validate();
    return config;
  }
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("sara");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("SARA_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Geometry-aware image pair selection for structure from motion"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "scoring worker threads (0: all cores)")
      ->check(CLI::NonNegativeNumber);

  sara::SelectRequest select;
  ConfigFlags select_flags;
  std::string out_run;
  CLI::App* select_cmd = app.add_subcommand("select", "select pairs for a dataset");
  select_cmd->add_option("--manifest", select.manifest, "dataset manifest (JSON)")->required();
  select_cmd->add_option("--out-pairs", select.out_pairs, "pair list output")->required();
  select_cmd->add_option("--out-report", select.out_report, "view-graph report output")->required();
  select_cmd->add_option("--out-run", out_run, "run report with stage timings");
  select_cmd->add_option("--threads", threads, "scoring worker threads (0: all cores)")
      ->check(CLI::NonNegativeNumber);
  select_flags.attach(select_cmd);

  std::string ablate_manifest, ablate_out;
  ConfigFlags ablate_flags;
  CLI::App* ablate_cmd = app.add_subcommand("ablate", "run all augmentation ablations");
  ablate_cmd->add_option("--manifest", ablate_manifest, "dataset manifest (JSON)")->required();
  ablate_cmd->add_option("--out-dir", ablate_out, "output directory")->required();
  ablate_cmd->add_option("--threads", threads, "scoring worker threads (0: all cores)")
      ->check(CLI::NonNegativeNumber);
  ablate_flags.attach(ablate_cmd);

  sara::SynthRequest synth;
  std::string synth_out;
  bool plant_weak = false;
  bool no_intrinsics = false;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic orbit dataset");
  synth_cmd->add_option("--out-dir", synth_out, "output directory")->required();
  synth_cmd->add_option("--n-cameras", synth.orbit.n_cameras, "number of cameras");
  synth_cmd->add_option("--n-points", synth.orbit.n_points, "number of 3D points");
  synth_cmd->add_option("--radius", synth.orbit.radius, "orbit radius");
  synth_cmd->add_option("--noise-px", synth.orbit.noise_px, "keypoint noise sigma, px");
  synth_cmd->add_option("--seed", synth.orbit.seed, "scene seed");
  synth_cmd->add_option("--descriptor-dim", synth.orbit.descriptor_dim, "descriptor dimension");
  synth_cmd->add_option("--descriptor-noise", synth.render.descriptor_noise,
                        "descriptor noise sigma per component");
  synth_cmd->add_flag("--plant-weak-view", plant_weak, "append one poorly connected view");
  synth_cmd->add_flag("--no-intrinsics", no_intrinsics, "omit intrinsics from feature files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*select_cmd) {
      select.config = select_flags.resolve();
      select.threads = threads;
      if (!out_run.empty()) select.out_run = out_run;
      const sara::RunReport report = sara::run_select(select);
      std::cout << report.to_json(true).dump(2) << "\n";
    } else if (*ablate_cmd) {
      const auto reports =
          sara::run_ablation(ablate_manifest, ablate_flags.resolve(), ablate_out, threads);
      for (const auto& r : reports) {
        std::cout << r.name << ": " << r.n_selected_total << " pairs (reduction "
                  << r.reduction_ratio << ")\n";
      }
    } else if (*synth_cmd) {
      if (plant_weak) synth.planted = sara::PlantedViewOptions{};
      synth.render.with_intrinsics = !no_intrinsics;
      sara::run_synth(synth, synth_out);
    }
  } catch (const sara::Error& e) {
    spdlog::error("{}", e.what());
    return sara::is_usage_error(e.code()) ? kUsage : kData;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return kInternal;
  }
  return kOk;
}
