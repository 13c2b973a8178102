#include "sara/scorer.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "parallel.h"
#include "sara/error.h"
#include "sara/rng.h"

namespace sara {

namespace {

constexpr Eigen::Index kMatchBlockRows = 1024;

struct Best {
  float similarity = -std::numeric_limits<float>::infinity();
  Eigen::Index index = -1;
};

// Expresses a model estimated for (b -> a) in the (a -> b) orientation.
TwoViewModel reverse_model(TwoViewModel model) {
  model.matrix.transposeInPlace();
  if (model.pose) {
    const Eigen::Matrix3d Rt = model.pose->R.transpose();
    model.pose->t = -Rt * model.pose->t;
    model.pose->R = Rt;
  }
  return model;
}

}  // namespace

const char* to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::BelowOverlap: return "BelowOverlap";
    case RejectReason::BelowParallax: return "BelowParallax";
    case RejectReason::NoModel: return "NoModel";
    case RejectReason::TooFewMutualNN: return "TooFewMutualNN";
  }
  return "Unknown";
}

std::vector<Correspondence> mutual_nn_matches(const ImageFeatures& fa, const ImageFeatures& fb,
                                              int budget) {
  const Eigen::Index na = fa.descriptors.rows();
  const Eigen::Index nb = fb.descriptors.rows();
  if (na == 0 || nb == 0 || budget <= 0) return {};
  if (fa.descriptors.cols() != fb.descriptors.cols()) {
    throw Error(ErrorCode::DimensionMismatch, fa.image_id + " and " + fb.image_id +
                                                  " have different descriptor dimensions");
  }

  // Row maxima are final per block; column maxima accumulate across blocks.
  // Strict comparisons keep the lowest index on ties.
  std::vector<Best> best_in_b(static_cast<size_t>(na));
  std::vector<Best> best_in_a(static_cast<size_t>(nb));
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> block;
  for (Eigen::Index start = 0; start < na; start += kMatchBlockRows) {
    const Eigen::Index rows = std::min(kMatchBlockRows, na - start);
    block.noalias() = fa.descriptors.middleRows(start, rows) * fb.descriptors.transpose();
    for (Eigen::Index r = 0; r < rows; ++r) {
      Best& row_best = best_in_b[static_cast<size_t>(start + r)];
      for (Eigen::Index c = 0; c < nb; ++c) {
        const float s = block(r, c);
        if (s > row_best.similarity) row_best = {s, c};
        Best& col_best = best_in_a[static_cast<size_t>(c)];
        if (s > col_best.similarity) col_best = {s, start + r};
      }
    }
  }

  std::vector<Correspondence> matches;
  for (Eigen::Index p = 0; p < na; ++p) {
    const Best& forward = best_in_b[static_cast<size_t>(p)];
    if (forward.index < 0 || best_in_a[static_cast<size_t>(forward.index)].index != p) continue;
    Correspondence c;
    c.idx_a = static_cast<uint32_t>(p);
    c.idx_b = static_cast<uint32_t>(forward.index);
    c.x_a = fa.keypoints.row(p).cast<double>().transpose();
    c.x_b = fb.keypoints.row(forward.index).cast<double>().transpose();
    c.similarity = static_cast<double>(forward.similarity);
    matches.push_back(c);
  }
  std::sort(matches.begin(), matches.end(), [](const Correspondence& x, const Correspondence& y) {
    if (x.similarity != y.similarity) return x.similarity > y.similarity;
    if (x.idx_a != y.idx_a) return x.idx_a < y.idx_a;
    return x.idx_b < y.idx_b;
  });
  if (matches.size() > static_cast<size_t>(budget)) matches.resize(static_cast<size_t>(budget));
  return matches;
}

double informativeness(double overlap, double parallax, const SaraConfig& config) {
  return std::pow(overlap, config.alpha) *
         std::pow(std::min(parallax, config.parallax_cap), config.beta);
}

std::optional<RejectReason> threshold_rejection(double overlap, double parallax,
                                                const SaraConfig& config) {
  if (overlap < config.tau_o) return RejectReason::BelowOverlap;
  if (parallax < config.tau_p) return RejectReason::BelowParallax;
  return std::nullopt;
}

PairScore score_pair(const ImageFeatures& fa, const ImageFeatures& fb, const SaraConfig& config,
                     uint64_t rng_stream) {
  const bool swapped = fb.image_id < fa.image_id;
  const ImageFeatures& first = swapped ? fb : fa;
  const ImageFeatures& second = swapped ? fa : fb;

  PairScore score;
  const std::vector<Correspondence> matches = mutual_nn_matches(first, second, config.b);
  score.num_matches = static_cast<uint32_t>(matches.size());
  if (matches.size() < 8) {
    score.rejected = RejectReason::TooFewMutualNN;
    return score;
  }

  std::optional<Calibration> calib;
  if (first.intrinsics && second.intrinsics) calib = Calibration{*first.intrinsics, *second.intrinsics};

  CounterRng rng(config.seed, rng_stream);
  const RansacOptions options{config.ransac_iterations, config.inlier_threshold_px};
  TwoViewModel model;
  try {
    model = short_ransac(matches, calib, options, rng);
  } catch (const Error&) {
    score.rejected = RejectReason::NoModel;
    return score;
  }

  score.inlier_count = static_cast<uint32_t>(model.inliers.size());
  score.overlap = static_cast<double>(score.inlier_count) /
                  std::sqrt(static_cast<double>(first.num_keypoints()) *
                            static_cast<double>(second.num_keypoints()));
  if (calib) {
    score.parallax = lower_median(model.triangulation_angles);
  } else {
    score.parallax = config.tau_p;
    score.uncalibrated = true;
  }
  score.weight = informativeness(score.overlap, score.parallax, config);
  score.rejected = threshold_rejection(score.overlap, score.parallax, config);
  score.model = swapped ? reverse_model(std::move(model)) : std::move(model);
  return score;
}

ScoreMap score_all(std::span<const ImageFeatures> images, const CandidateSet& candidates,
                   const SaraConfig& config, int threads) {
  const auto n = static_cast<uint32_t>(images.size());
  for (const ImagePair& pair : candidates.pairs) {
    if (pair.j >= n || pair.i == pair.j) {
      throw Error(ErrorCode::InvalidArgument, "candidate pair refers to an unknown image");
    }
  }
  std::vector<PairScore> results(candidates.pairs.size());
  internal::parallel_for(candidates.pairs.size(), threads, [&](size_t k) {
    const ImagePair& pair = candidates.pairs[k];
    PairScore s = score_pair(images[pair.i], images[pair.j], config, pair_stream_id(pair, n));
    s.i = pair.i;
    s.j = pair.j;
    results[k] = std::move(s);
  });
  ScoreMap scores;
  for (PairScore& s : results) {
    const ImagePair key(s.i, s.j);
    scores.emplace(key, std::move(s));
  }
  return scores;
}

ScoreMap score_all(const DatasetManifest& manifest, const CandidateSet& candidates,
                   const SaraConfig& config, int threads) {
  if (candidates.pairs.empty()) return {};
  const std::vector<ImageFeatures> images = load_all_features(manifest, threads);
  return score_all(images, candidates, config, threads);
}

}  // namespace sara
