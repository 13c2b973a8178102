#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sara/types.h"

namespace sara {

struct Neighbor {
  uint32_t index = 0;
  double similarity = 0.0;
};

// Candidate pairs from global-descriptor retrieval: the symmetric union of
// every image's top-k neighbors.
struct CandidateSet {
  std::vector<ImagePair> pairs;  // sorted, unique
  std::vector<std::vector<Neighbor>> per_image_neighbors;

  size_t size() const { return pairs.size(); }
};

// Exact cosine k-nearest-neighbor retrieval over unit-norm global
// descriptors. Neighbors are ordered by descending similarity, ties broken by
// ascending index.
CandidateSet cosine_knn(std::span<const Eigen::VectorXf> globals, int k);

// Every pair (i, j), i < j; the exhaustive baseline.
CandidateSet all_pairs(uint32_t n);

}  // namespace sara
