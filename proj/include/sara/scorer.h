#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sara/config.h"
#include "sara/epipolar.h"
#include "sara/feature_io.h"
#include "sara/retrieval.h"
#include "sara/types.h"

namespace sara {

enum class RejectReason { BelowOverlap, BelowParallax, NoModel, TooFewMutualNN };

const char* to_string(RejectReason reason);

// Pre-matching verification result of one candidate pair.
struct PairScore {
  uint32_t i = 0;
  uint32_t j = 0;
  double overlap = 0.0;   // |inliers| / sqrt(N_i N_j)
  double parallax = 0.0;  // lower-median triangulation angle, radians
  double weight = 0.0;    // overlap^alpha * min(parallax, cap)^beta
  uint32_t inlier_count = 0;
  uint32_t num_matches = 0;  // mutual-NN correspondences fed to RANSAC
  std::optional<TwoViewModel> model;
  std::optional<RejectReason> rejected;
  // No intrinsics: parallax was floored to tau_p instead of measured.
  bool uncalibrated = false;

  double effective_weight() const { return rejected ? 0.0 : weight; }
};

using ScoreMap = std::map<ImagePair, PairScore>;

// Mutual nearest neighbors by descriptor dot product, sorted by descending
// similarity (ties by ascending (idx_a, idx_b)) and truncated to `budget`.
std::vector<Correspondence> mutual_nn_matches(const ImageFeatures& fa, const ImageFeatures& fb,
                                              int budget);

double informativeness(double overlap, double parallax, const SaraConfig& config);

// The threshold predicate on overlap and parallax; nullopt when kept.
std::optional<RejectReason> threshold_rejection(double overlap, double parallax,
                                                const SaraConfig& config);

// Scores one pair. The computation runs in a canonical orientation (by
// image_id) so swapping the arguments gives identical overlap, parallax and
// weight; the returned model is expressed for (fa -> fb).
PairScore score_pair(const ImageFeatures& fa, const ImageFeatures& fb, const SaraConfig& config,
                     uint64_t rng_stream);

// Scores every candidate; the result does not depend on `threads`.
ScoreMap score_all(std::span<const ImageFeatures> images, const CandidateSet& candidates,
                   const SaraConfig& config, int threads = 1);
ScoreMap score_all(const DatasetManifest& manifest, const CandidateSet& candidates,
                   const SaraConfig& config, int threads = 1);

}  // namespace sara
