#include <doctest.h>

#include <set>

#include "sara/error.h"
#include "sara/retrieval.h"
#include "sara/rng.h"
#include "sara/synth.h"
#include "support/oracles.h"

using namespace sara;

namespace {

std::set<std::pair<uint32_t, uint32_t>> as_set(const CandidateSet& c) {
  std::set<std::pair<uint32_t, uint32_t>> s;
  for (const ImagePair& p : c.pairs) s.emplace(p.i, p.j);
  return s;
}

std::vector<Eigen::VectorXf> random_unit(uint64_t seed, size_t n, int d) {
  CounterRng rng(seed, 1);
  std::vector<Eigen::VectorXf> out;
  for (size_t i = 0; i < n; ++i) {
    Eigen::VectorXf v(d);
    for (int c = 0; c < d; ++c) v[c] = static_cast<float>(rng.normal());
    out.push_back(v.normalized());
  }
  return out;
}

}  // namespace

TEST_CASE("two images give the only pair") {
  const auto g = random_unit(1, 2, 8);
  const CandidateSet c = cosine_knn(g, 1);
  REQUIRE(c.pairs.size() == 1);
  CHECK(c.pairs[0] == ImagePair(0, 1));
}

TEST_CASE("orthogonal vectors break ties by index") {
  std::vector<Eigen::VectorXf> g(3, Eigen::VectorXf::Zero(3));
  for (int i = 0; i < 3; ++i) g[i][i] = 1.0f;
  const CandidateSet c = cosine_knn(g, 1);
  CHECK(c.per_image_neighbors[0][0].index == 1);
  CHECK(c.per_image_neighbors[1][0].index == 0);
  CHECK(c.per_image_neighbors[2][0].index == 0);
  CHECK(c.per_image_neighbors[2][0].similarity == 0.0);
  CHECK(as_set(c) == std::set<std::pair<uint32_t, uint32_t>>{{0, 1}, {0, 2}});
}

TEST_CASE("errors") {
  const auto g = random_unit(1, 5, 8);
  CHECK_THROWS_AS(cosine_knn(std::span(g.data(), 1), 1), Error);
  CHECK_THROWS_AS(cosine_knn(g, 0), Error);
  CHECK_THROWS_AS(cosine_knn(g, 5), Error);
  auto bad = g;
  bad[2] = Eigen::VectorXf::Ones(4).normalized();
  CHECK_THROWS_AS(cosine_knn(bad, 2), Error);
  try {
    cosine_knn(g, 0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidK);
  }
  try {
    cosine_knn(std::span(g.data(), 1), 1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewImages);
  }
}

TEST_CASE("synthetic orbit matches the brute-force oracle") {
  const SyntheticScene scene = generate_orbit_scene(20, 400, 5.0, 0.0, 3);
  std::vector<Eigen::VectorXf> g;
  for (const ImageFeatures& f : features_of(render_features(scene))) g.push_back(f.global_desc);
  const CandidateSet c = cosine_knn(g, 5);
  CHECK(as_set(c) == oracle::knn_pairs(g, 5));
}

TEST_CASE("random sets match the oracle and satisfy size bounds") {
  for (uint64_t trial = 0; trial < 40; ++trial) {
    CounterRng rng(trial, 9);
    const size_t n = 2 + rng.below(trial < 5 ? 199 : 60);
    const int k = 1 + static_cast<int>(rng.below(std::min<size_t>(12, n - 1)));
    const auto g = random_unit(trial, n, 16);
    const CandidateSet c = cosine_knn(g, k);
    REQUIRE(as_set(c) == oracle::knn_pairs(g, k));
    CHECK(c.pairs.size() <= n * static_cast<size_t>(k));
    CHECK(c.pairs.size() >= (n * static_cast<size_t>(k) + 1) / 2);
    CHECK(std::is_sorted(c.pairs.begin(), c.pairs.end()));
    for (size_t i = 0; i < n; ++i) {
      const auto& nb = c.per_image_neighbors[i];
      CHECK(nb.size() == static_cast<size_t>(k));
      for (size_t r = 1; r < nb.size(); ++r) CHECK(nb[r - 1].similarity >= nb[r].similarity);
      for (const Neighbor& x : nb) CHECK(x.index != i);
    }
  }
}

TEST_CASE("all pairs") {
  const CandidateSet c = all_pairs(6);
  CHECK(c.pairs.size() == 15);
  CHECK(c.pairs.front() == ImagePair(0, 1));
  CHECK(c.pairs.back() == ImagePair(4, 5));
}
