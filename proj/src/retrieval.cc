#include "sara/retrieval.h"

#include <algorithm>
#include <string>

#include "sara/error.h"

namespace sara {

CandidateSet cosine_knn(std::span<const Eigen::VectorXf> globals, int k) {
  const size_t n = globals.size();
  if (n < 2) throw Error(ErrorCode::TooFewImages, "retrieval needs at least 2 images");
  if (k < 1 || static_cast<size_t>(k) > n - 1) {
    throw Error(ErrorCode::InvalidK,
                "k=" + std::to_string(k) + " outside [1, " + std::to_string(n - 1) + "]");
  }
  const Eigen::Index dim = globals[0].size();
  for (const Eigen::VectorXf& g : globals) {
    if (g.size() != dim) {
      throw Error(ErrorCode::DimensionMismatch, "global descriptors differ in dimension");
    }
  }
  // Each entry is computed once and mirrored so the matrix is exactly
  // symmetric.
  Eigen::MatrixXd similarity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i) {
    const auto a = static_cast<Eigen::Index>(i);
    similarity(a, a) = globals[i].cast<double>().squaredNorm();
    for (size_t j = i + 1; j < n; ++j) {
      const auto b = static_cast<Eigen::Index>(j);
      similarity(a, b) = similarity(b, a) = globals[i].cast<double>().dot(globals[j].cast<double>());
    }
  }

  CandidateSet out;
  out.per_image_neighbors.resize(n);
  for (size_t i = 0; i < n; ++i) {
    std::vector<Neighbor> row;
    row.reserve(n - 1);
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      row.push_back({static_cast<uint32_t>(j),
                     similarity(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
    }
    const auto by_rank = [](const Neighbor& a, const Neighbor& b) {
      if (a.similarity != b.similarity) return a.similarity > b.similarity;
      return a.index < b.index;
    };
    std::partial_sort(row.begin(), row.begin() + k, row.end(), by_rank);
    row.resize(static_cast<size_t>(k));
    for (const Neighbor& nb : row) out.pairs.emplace_back(static_cast<uint32_t>(i), nb.index);
    out.per_image_neighbors[i] = std::move(row);
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  out.pairs.erase(std::unique(out.pairs.begin(), out.pairs.end()), out.pairs.end());
  return out;
}

CandidateSet all_pairs(uint32_t n) {
  CandidateSet out;
  out.per_image_neighbors.resize(n);
  for (uint32_t i = 0; i < n; ++i) {
    for (uint32_t j = i + 1; j < n; ++j) out.pairs.emplace_back(i, j);
  }
  return out;
}

}  // namespace sara
