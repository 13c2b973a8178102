// Acceptance gate: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "sara/feature_io.h"
#include "sara/pipeline.h"
#include "sara/rng.h"
#include "support/fixtures.h"
#include "support/oracles.h"

using namespace sara;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

constexpr double kDeg = std::numbers::pi / 180.0;

// Criterion 1 -----------------------------------------------------------

void pair_reduction(Outcome& out) {
  for (const uint32_t n : {25u, 50u, 100u, 200u}) {
    const SyntheticScene scene = generate_orbit_scene(n, 400, 5.0, 0.5, n);
    const auto features = features_of(render_features(scene));
    const SaraConfig cfg;
    const SelectionResult r = select_pairs(features, cfg, 0);
    const ResolvedBudgets b = resolve_budgets(cfg, n);
    const size_t selected = r.graph.selected_edges.size();
    const double exhaustive = n * (n - 1) / 2.0;
    const double reduction = 1.0 - selected / exhaustive;
    const double per_view = static_cast<double>(selected) / n;
    out.detail << "N=" << n << " selected=" << selected << " reduction=" << reduction << "; ";
    out.require(selected <= (n - 1) + static_cast<size_t>(b.loop + b.anchor + b.weak_total),
                "budget bound at N=" + std::to_string(n));
    if (n == 50) out.require(reduction >= 0.85, "reduction at N=50");
    if (n == 200) out.require(reduction >= 0.95, "reduction at N=200");
    out.require(per_view <= 1.5, "selected/N at N=" + std::to_string(n));
  }
}

// Criterion 2 -----------------------------------------------------------

void mst_optimality(Outcome& out) {
  int exact = 0;
  for (uint64_t trial = 0; trial < 200; ++trial) {
    CounterRng rng(trial, 21);
    const auto n = static_cast<uint32_t>(2 + rng.below(6));
    std::map<ImagePair, double> w;
    std::map<std::pair<uint32_t, uint32_t>, double> w2;
    for (uint32_t i = 0; i < n; ++i) {
      for (uint32_t j = i + 1; j < n; ++j) {
        if (rng.uniform() < 0.25) continue;
        // Dyadic weights keep every partial sum exact; coarse steps force ties.
        const double v = static_cast<double>(rng.below(trial % 2 ? 8 : 4096)) / 64.0;
        w[ImagePair(i, j)] = v;
        w2[{i, j}] = v;
      }
    }
    double total = 0.0;
    for (const ImagePair& p : max_spanning_tree(w, n)) total += w.at(p);
    const bool ok = total == oracle_mst(w, n) && total == oracle::prim_max_forest(w2, n);
    exact += ok;
    out.require(ok, "graph " + std::to_string(trial));
  }
  out.detail << exact << "/200 exact";
}

// Criterion 3 -----------------------------------------------------------

struct PosedPair {
  Calibration calib;
  RelativePose pose;  // unit translation
  std::vector<Eigen::Vector3d> points_a;
  std::vector<Correspondence> corrs;
};

// Camera a at the origin looking down +z; camera b at a random offset of
// radius [0.6, 2] looking at (0, 0, 6) with a small roll. Points are
// back-projected from random pixels of a at depth [4, 8] and kept when they
// land inside b.
PosedPair random_posed_pair(uint64_t seed, size_t n, double noise_px) {
  CounterRng rng(seed, 31);
  PosedPair pp;
  Eigen::Matrix3d K;
  K << 500, 0, 320, 0, 500, 240, 0, 0, 1;
  pp.calib = {K, K};
  Eigen::Vector3d cb;
  do {
    cb = 2.0 * Eigen::Vector3d(2 * rng.uniform() - 1, 2 * rng.uniform() - 1, 2 * rng.uniform() - 1);
  } while (cb.norm() > 2.0 || cb.norm() < 0.6);
  const Eigen::Vector3d z = (Eigen::Vector3d(0, 0, 6) - cb).normalized();
  const Eigen::Vector3d x = Eigen::Vector3d::UnitY().cross(z).normalized();
  Eigen::Matrix3d R;
  R.row(0) = x;
  R.row(1) = z.cross(x);
  R.row(2) = z;
  R = Eigen::AngleAxisd((rng.uniform() - 0.5) * 0.4, Eigen::Vector3d::UnitZ()).toRotationMatrix() * R;
  const Eigen::Vector3d t = -R * cb;
  const double scale = t.norm();
  pp.pose = {R, t / scale};
  const Eigen::Matrix3d K_inv = K.inverse();
  while (pp.corrs.size() < n) {
    const Eigen::Vector3d X = K_inv * Eigen::Vector3d(640 * rng.uniform(), 480 * rng.uniform(), 1) *
                              (4 + 4 * rng.uniform());
    const Eigen::Vector3d Xb = R * X + t;
    if (Xb.z() < 0.5) continue;
    const Eigen::Vector2d pb = (K * Xb).hnormalized();
    if (pb.x() < 0 || pb.x() >= 640 || pb.y() < 0 || pb.y() >= 480) continue;
    Correspondence c;
    c.idx_a = c.idx_b = static_cast<uint32_t>(pp.corrs.size());
    c.x_a = (K * X).hnormalized() + noise_px * Eigen::Vector2d(rng.normal(), rng.normal());
    c.x_b = pb + noise_px * Eigen::Vector2d(rng.normal(), rng.normal());
    pp.points_a.push_back(X / scale);
    pp.corrs.push_back(c);
  }
  return pp;
}

void geometry_accuracy(Outcome& out) {
  double worst_r = 0, worst_t = 0, worst_p = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const PosedPair pp = random_posed_pair(seed, 200, 0.0);
    const Eigen::Matrix3d E = estimate_essential(pp.corrs, pp.calib);
    const RelativePose est = recover_pose(E, pp.corrs, pp.calib);
    worst_r = std::max(worst_r, rotation_error(est.R, pp.pose.R));
    worst_t = std::max(worst_t, direction_error(est.t, pp.pose.t));
    std::vector<double> truth;
    for (const Eigen::Vector3d& X : pp.points_a) truth.push_back(oracle::parallax_at(X, pp.pose));
    const double p_est = lower_median(triangulate_angles(est, pp.corrs, pp.calib));
    worst_p = std::max(worst_p, std::abs(p_est - lower_median(truth)));
  }
  out.require(worst_r < 1e-6, "noise-free rotation");
  out.require(worst_t < 1e-6, "noise-free translation");
  out.require(worst_p < 0.5 * kDeg, "noise-free parallax");

  int within = 0;
  std::vector<double> errors;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const PosedPair pp = random_posed_pair(1000 + seed, 200, 1.0);
    const RelativePose est = recover_pose(estimate_essential(pp.corrs, pp.calib), pp.corrs, pp.calib);
    const double e = rotation_error(est.R, pp.pose.R);
    errors.push_back(e);
    within += e < 0.5 * kDeg;
  }
  std::sort(errors.begin(), errors.end());
  out.require(within >= 95, "1 px noise rotation");
  out.detail << "noise-free max rot=" << worst_r << " rad, max dir=" << worst_t
             << " rad, max parallax diff=" << worst_p / kDeg << " deg; 1px: " << within
             << "/100 below 0.5 deg, p95=" << errors[94] / kDeg << " deg";
}

// Criterion 4 -----------------------------------------------------------

void scorer_fidelity(Outcome& out) {
  const SyntheticScene scene = generate_orbit_scene(20, 400, 5.0, 0.0, 0);
  const auto f = features_of(render_features(scene));
  size_t checked = 0;
  for (const SaraConfig& cfg : {SaraConfig{}, [] {
                                  SaraConfig c;
                                  c.alpha = 1.5;
                                  c.beta = 0.7;
                                  c.tau_o = 0.2;
                                  c.tau_p = 3 * kDeg;
                                  return c;
                                }()}) {
    const ScoreMap scores = score_all(f, all_pairs(20), cfg, 0);
    std::vector<double> est, truth;
    for (const auto& [pair, s] : scores) {
      est.push_back(s.overlap);
      truth.push_back(oracle_pair_truth(scene, pair.i, pair.j).overlap_fraction);
      if (s.rejected == RejectReason::NoModel || s.rejected == RejectReason::TooFewMutualNN) continue;
      ++checked;
      const double o =
          s.inlier_count / std::sqrt(double(f[pair.i].num_keypoints()) * f[pair.j].num_keypoints());
      out.require(std::abs(o - s.overlap) <= 1e-12, "overlap formula");
      const double w = std::pow(o, cfg.alpha) * std::pow(std::min(s.parallax, cfg.parallax_cap), cfg.beta);
      out.require(std::abs(w - s.weight) <= 1e-12 * std::max(w, 1e-300), "weight formula");
      std::optional<RejectReason> expected;
      if (o < cfg.tau_o) {
        expected = RejectReason::BelowOverlap;
      } else if (s.parallax < cfg.tau_p) {
        expected = RejectReason::BelowParallax;
      }
      out.require(expected == s.rejected, "rejection flag");
    }
    if (cfg.alpha == 1.0) {
      const double rho = oracle::spearman(est, truth);
      out.detail << "spearman=" << rho << "; ";
      out.require(rho >= 0.8, "spearman");
    }
  }
  out.detail << checked << " scored pairs checked";
}

// Criterion 5 -----------------------------------------------------------

bool includes(const std::vector<ImagePair>& big, const std::vector<ImagePair>& small) {
  const std::set<ImagePair> b(big.begin(), big.end());
  return std::all_of(small.begin(), small.end(), [&](const ImagePair& p) { return b.count(p) > 0; });
}

void ablation_structure(Outcome& out) {
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    SyntheticScene scene = generate_orbit_scene(30, 400, 5.0, 0.0, seed);
    plant_weak_view(scene, PlantedViewOptions{});
    const auto f = features_of(render_features(scene));
    const auto planted = static_cast<uint32_t>(f.size() - 1);
    const ScoreMap scores = select_pairs(f, SaraConfig{}, 0).scores;
    std::map<std::string, std::vector<ImagePair>> sets;
    for (const AblationVariant& v : ablation_variants()) {
      const ViewGraph g = build_view_graph(scores, planted + 1, apply_variant(SaraConfig{}, v));
      sets[v.name] = g.selected_pairs();
      const uint32_t degree = g.selected_degrees()[planted];
      if (v.name == "base_only") {
        out.require(degree == 1, "base_only degree, seed " + std::to_string(seed));
      } else if (v.wvr) {
        out.require(degree >= 2, v.name + " degree, seed " + std::to_string(seed));
      }
      if (seed == 1) out.detail << v.name << ":" << degree << " ";
    }
    for (const char* only : {"only_msl", "only_lba", "only_wvr"}) {
      out.require(includes(sets[only], sets["base_only"]), std::string("base in ") + only);
      out.require(includes(sets["full"], sets[only]), std::string(only) + " in full");
    }
  }
  out.detail << "(planted-view degree, seed 1)";
}

// Criterion 6 -----------------------------------------------------------

void connectivity_and_budgets(Outcome& out) {
  int connected_inputs = 0;
  for (uint64_t trial = 0; trial < 100; ++trial) {
    CounterRng rng(trial, 61);
    const auto n = static_cast<uint32_t>(2 + rng.below(150));
    // Around the log(n)/n connectivity threshold, so both outcomes occur.
    const double density = std::min(1.0, (0.5 + 2.5 * rng.uniform()) * std::log(n + 1.0) / n);
    ScoreMap scores;
    for (uint32_t i = 0; i < n; ++i) {
      for (uint32_t j = i + 1; j < n; ++j) {
        if (rng.uniform() >= density) continue;
        PairScore s;
        s.i = i;
        s.j = j;
        s.overlap = 0.01 + rng.uniform();
        s.parallax = rng.uniform() * 0.6;
        s.weight = s.overlap * s.parallax;
        if (rng.uniform() < 0.1) s.rejected = RejectReason::BelowParallax;
        scores[ImagePair(i, j)] = s;
      }
    }
    if (scores.empty()) {
      PairScore s;
      s.i = 0;
      s.j = 1;
      s.weight = 0.05;
      scores[ImagePair(0, 1)] = s;
    }
    SaraConfig cfg;
    if (trial % 2) {
      cfg.budget_loop = static_cast<int>(rng.below(20));
      cfg.budget_anchor = static_cast<int>(rng.below(10));
      cfg.budget_weak = static_cast<int>(rng.below(4));
      cfg.budget_weak_total = static_cast<int>(rng.below(15));
    }
    const ViewGraph g = build_view_graph(scores, n, cfg);
    std::vector<std::pair<uint32_t, uint32_t>> cand, sel;
    for (const auto& [p, s] : scores) {
      if (!s.rejected) cand.emplace_back(p.i, p.j);
    }
    for (const ImagePair& p : g.selected_pairs()) sel.emplace_back(p.i, p.j);
    if (oracle::connected(cand, n)) {
      ++connected_inputs;
      out.require(oracle::connected(sel, n), "connectivity, trial " + std::to_string(trial));
    }
    const ResolvedBudgets b = resolve_budgets(cfg, n);
    out.require(g.count(EdgeRole::Loop) <= static_cast<size_t>(b.loop), "loop budget");
    out.require(g.count(EdgeRole::Anchor) <= static_cast<size_t>(b.anchor), "anchor budget");
    out.require(g.count(EdgeRole::Weak) <= static_cast<size_t>(b.weak_total), "weak budget");
    std::map<uint32_t, int> weak_touch;
    for (const ImagePair& p : g.edges_with_role(EdgeRole::Weak)) {
      ++weak_touch[p.i];
      ++weak_touch[p.j];
    }
    // Each weak edge is charged to one view, so no view can exceed twice its quota.
    for (const auto& [v, c] : weak_touch) out.require(c <= 2 * b.weak_per_view, "per-view weak budget");
    const auto pairs = g.selected_pairs();
    const std::set<ImagePair> uniq(pairs.begin(), pairs.end());
    out.require(uniq.size() == g.selected_edges.size(), "duplicate edges");
  }
  out.detail << connected_inputs << "/100 connected inputs";
}

// Criterion 7 -----------------------------------------------------------

void determinism(Outcome& out) {
  fixture::TempDir dir;
  SynthRequest synth;
  synth.orbit.n_cameras = 40;
  synth.orbit.noise_px = 0.5;
  synth.orbit.seed = 5;
  run_synth(synth, dir / "data");
  std::optional<std::pair<std::string, std::string>> reference;
  int runs = 0;
  for (const int threads : {1, 1, 2, 4, 0}) {
    SelectRequest req;
    req.manifest = dir / "data" / "manifest.json";
    req.config.seed = 11;
    req.threads = threads;
    req.out_pairs = dir / "pairs.txt";
    req.out_report = dir / "report.json";
    run_select(req);
    auto bytes = std::make_pair(fixture::read_file(req.out_pairs), fixture::read_file(req.out_report));
    if (!reference) reference = bytes;
    out.require(bytes == *reference, "threads=" + std::to_string(threads));
    ++runs;
  }
  out.detail << runs << " runs byte-identical, " << std::count(reference->first.begin(), reference->first.end(), '\n')
             << " pairs";
}

// Criterion 8 -----------------------------------------------------------

void format_round_trip(Outcome& out) {
  fixture::TempDir dir;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const ImageFeatures f =
        fixture::random_features(seed, "img", 1 + seed * 13, 32 + seed % 97, 16, seed % 2 == 0, seed % 3 == 0);
    write_feature_file(f, dir / "f.sarf");
    const ImageFeatures g = read_feature_file(dir / "f.sarf", "img");
    const auto same = [](const auto& a, const auto& b) {
      return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(*a.data()) * a.size()) == 0;
    };
    bool ok = same(f.keypoints, g.keypoints) && same(f.descriptors, g.descriptors) &&
              same(f.global_desc, g.global_desc) && f.width == g.width && f.height == g.height &&
              f.intrinsics == g.intrinsics && f.scores.has_value() == g.scores.has_value();
    if (ok && f.scores) ok = same(*f.scores, *g.scores);
    out.require(ok, "feature file " + std::to_string(seed));
  }
  for (uint64_t trial = 0; trial < 1000; ++trial) {
    CounterRng rng(trial, 81);
    std::vector<std::pair<std::string, std::string>> edges;
    const size_t m = rng.below(60);
    for (size_t e = 0; e < m; ++e) {
      const auto a = rng.below(20), b = rng.below(20);
      if (a != b) edges.emplace_back("view_" + std::to_string(a), "view_" + std::to_string(b));
    }
    std::set<std::pair<std::string, std::string>> expected;
    for (const auto& [a, b] : edges) expected.emplace(std::min(a, b), std::max(a, b));
    std::string oracle;
    for (const auto& [a, b] : expected) oracle += a + " " + b + "\n";
    out.require(format_pair_list(edges) == oracle, "pair list " + std::to_string(trial));
  }
  out.detail << "50 feature files, 1000 edge sets";
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::off);
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "pair reduction on synthetic orbits", 60, pair_reduction},
      {2, "spanning tree optimality", 10, mst_optimality},
      {3, "two-view geometry accuracy", 30, geometry_accuracy},
      {4, "scorer fidelity", 0, scorer_fidelity},
      {5, "ablation structure", 0, ablation_structure},
      {6, "connectivity and budgets", 0, connectivity_and_budgets},
      {7, "determinism", 0, determinism},
      {8, "format round trip", 0, format_round_trip},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s > 0) out.require(seconds < c.limit_s, "runtime limit");
    failures += !out.pass;
    std::printf("%s criterion %d: %s [%.2fs] %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name, seconds,
                out.detail.str().c_str());
  }
  return failures == 0 ? 0 : 1;
}
