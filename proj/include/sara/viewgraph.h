#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sara/config.h"
#include "sara/scorer.h"
#include "sara/types.h"

namespace sara {

enum class EdgeRole { Tree, Loop, Anchor, Weak };

const char* to_string(EdgeRole role);

struct SelectedEdge {
  ImagePair pair;
  EdgeRole role = EdgeRole::Tree;

  bool operator==(const SelectedEdge&) const = default;
};

struct NodeConfidence {
  uint32_t node = 0;
  uint32_t degree_in_tree = 0;
  double kappa = 0.0;  // lower median of incident tree-edge weights
};

struct ViewGraph {
  uint32_t n_nodes = 0;
  std::map<ImagePair, double> candidate_edges;  // non-rejected scores only
  std::vector<SelectedEdge> selected_edges;     // in insertion order
  std::vector<uint32_t> component_of;           // over candidate_edges
  uint32_t num_components = 0;
  ResolvedBudgets budgets;
  std::vector<uint32_t> weak_views;  // filled by add_weak_view_support

  std::vector<ImagePair> edges_with_role(EdgeRole role) const;
  size_t count(EdgeRole role) const;
  bool is_selected(const ImagePair& pair) const;
  std::vector<uint32_t> selected_degrees() const;
  std::vector<ImagePair> selected_pairs() const;
};

// Kruskal on descending weight (ties by ascending pair) with union-find.
// Disconnected input yields a maximum spanning forest.
std::vector<ImagePair> max_spanning_tree(const std::map<ImagePair, double>& candidates, uint32_t n);

// Path lengths in a forest via rooted traversal and binary-lifting LCA.
class TreePaths {
 public:
  TreePaths(std::span<const ImagePair> forest, uint32_t n);

  // Number of edges on the unique path, nullopt across components.
  std::optional<int> length(uint32_t a, uint32_t b) const;

 private:
  uint32_t ancestor(uint32_t node, int steps) const;

  std::vector<int> depth_;
  std::vector<uint32_t> root_;
  std::vector<std::vector<uint32_t>> up_;  // up_[k][v]: 2^k-th ancestor
};

std::optional<int> tree_path_length(std::span<const ImagePair> forest, uint32_t n, uint32_t a,
                                    uint32_t b);

// Number of connected components of the graph (n nodes, given edges).
uint32_t count_components(std::span<const ImagePair> edges, uint32_t n);

// Candidate edges from the scores plus the maximum spanning forest as Tree
// edges. Budgets are resolved from `config`.
ViewGraph make_tree_graph(const ScoreMap& scores, uint32_t n, const SaraConfig& config);

std::vector<NodeConfidence> node_confidences(const ViewGraph& graph);
// Nodes with tree degree <= threshold or kappa below the configured
// percentile, ordered weakest first by (1 + deg) * (eps + kappa).
std::vector<uint32_t> find_weak_views(const std::vector<NodeConfidence>& confidences,
                                      const SaraConfig& config);
double weak_view_boost(uint32_t degree, double kappa);

// Multi-scale loop closures: non-tree candidates binned by tree-path length,
// picked round-robin from the longest bin down.
void add_loops(ViewGraph& graph, const SaraConfig& config);
// Long-baseline anchors ranked by parallax * weight with an endpoint
// diversity rule.
void add_anchors(ViewGraph& graph, const ScoreMap& scores, const SaraConfig& config);
// Extra support edges for low-degree or low-confidence views.
void add_weak_view_support(ViewGraph& graph, const SaraConfig& config);

// Tree, then loops, anchors and weak-view support, in that order.
ViewGraph build_view_graph(const ScoreMap& scores, uint32_t n, const SaraConfig& config);

}  // namespace sara
