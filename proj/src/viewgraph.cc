#include "sara/viewgraph.h"

#include <algorithm>
#include <numeric>
#include <queue>
#include <set>
#include <string>

#include <spdlog/spdlog.h>

#include "sara/epipolar.h"
#include "sara/error.h"

namespace sara {

namespace {

constexpr double kBoostEpsilon = 1e-6;

class UnionFind {
 public:
  explicit UnionFind(uint32_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }

  uint32_t find(uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(uint32_t a, uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

 private:
  std::vector<uint32_t> parent_;
  std::vector<uint32_t> size_;
};

struct RankedEdge {
  ImagePair pair;
  double score = 0.0;
};

void sort_ranked(std::vector<RankedEdge>& edges) {
  std::sort(edges.begin(), edges.end(), [](const RankedEdge& a, const RankedEdge& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.pair < b.pair;
  });
}

std::set<ImagePair> selected_set(const ViewGraph& graph) {
  std::set<ImagePair> out;
  for (const SelectedEdge& e : graph.selected_edges) out.insert(e.pair);
  return out;
}

void check_nodes(const ImagePair& pair, uint32_t n) {
  if (pair.j >= n || pair.i == pair.j) {
    throw Error(ErrorCode::InvalidArgument, "edge (" + std::to_string(pair.i) + ", " +
                                                std::to_string(pair.j) + ") outside the graph");
  }
}

}  // namespace

const char* to_string(EdgeRole role) {
  switch (role) {
    case EdgeRole::Tree: return "tree";
    case EdgeRole::Loop: return "loop";
    case EdgeRole::Anchor: return "anchor";
    case EdgeRole::Weak: return "weak";
  }
  return "unknown";
}

std::vector<ImagePair> ViewGraph::edges_with_role(EdgeRole role) const {
  std::vector<ImagePair> out;
  for (const SelectedEdge& e : selected_edges) {
    if (e.role == role) out.push_back(e.pair);
  }
  return out;
}

size_t ViewGraph::count(EdgeRole role) const {
  return static_cast<size_t>(std::count_if(selected_edges.begin(), selected_edges.end(),
                                           [role](const SelectedEdge& e) { return e.role == role; }));
}

bool ViewGraph::is_selected(const ImagePair& pair) const {
  return std::any_of(selected_edges.begin(), selected_edges.end(),
                     [&](const SelectedEdge& e) { return e.pair == pair; });
}

std::vector<uint32_t> ViewGraph::selected_degrees() const {
  std::vector<uint32_t> degree(n_nodes, 0);
  for (const SelectedEdge& e : selected_edges) {
    ++degree[e.pair.i];
    ++degree[e.pair.j];
  }
  return degree;
}

std::vector<ImagePair> ViewGraph::selected_pairs() const {
  std::vector<ImagePair> out;
  out.reserve(selected_edges.size());
  for (const SelectedEdge& e : selected_edges) out.push_back(e.pair);
  return out;
}

std::vector<ImagePair> max_spanning_tree(const std::map<ImagePair, double>& candidates,
                                         uint32_t n) {
  std::vector<RankedEdge> edges;
  edges.reserve(candidates.size());
  for (const auto& [pair, weight] : candidates) {
    check_nodes(pair, n);
    edges.push_back({pair, weight});
  }
  sort_ranked(edges);
  UnionFind uf(n);
  std::vector<ImagePair> tree;
  for (const RankedEdge& e : edges) {
    if (uf.unite(e.pair.i, e.pair.j)) tree.push_back(e.pair);
    if (n > 0 && tree.size() + 1 == n) break;
  }
  return tree;
}

uint32_t count_components(std::span<const ImagePair> edges, uint32_t n) {
  UnionFind uf(n);
  uint32_t components = n;
  for (const ImagePair& e : edges) {
    if (uf.unite(e.i, e.j)) --components;
  }
  return components;
}

TreePaths::TreePaths(std::span<const ImagePair> forest, uint32_t n)
    : depth_(n, -1), root_(n, 0) {
  std::vector<std::vector<uint32_t>> adjacency(n);
  for (const ImagePair& e : forest) {
    check_nodes(e, n);
    adjacency[e.i].push_back(e.j);
    adjacency[e.j].push_back(e.i);
  }
  int levels = 1;
  while ((1u << levels) < std::max(n, 2u)) ++levels;
  up_.assign(static_cast<size_t>(levels), std::vector<uint32_t>(n, 0));

  std::queue<uint32_t> queue;
  for (uint32_t start = 0; start < n; ++start) {
    if (depth_[start] >= 0) continue;
    depth_[start] = 0;
    root_[start] = start;
    up_[0][start] = start;
    queue.push(start);
    while (!queue.empty()) {
      const uint32_t v = queue.front();
      queue.pop();
      for (uint32_t w : adjacency[v]) {
        if (depth_[w] >= 0) {
          if (w != up_[0][v]) {
            throw Error(ErrorCode::InvalidArgument, "tree edges contain a cycle");
          }
          continue;
        }
        depth_[w] = depth_[v] + 1;
        root_[w] = start;
        up_[0][w] = v;
        queue.push(w);
      }
    }
  }
  for (size_t k = 1; k < up_.size(); ++k) {
    for (uint32_t v = 0; v < n; ++v) up_[k][v] = up_[k - 1][up_[k - 1][v]];
  }
}

uint32_t TreePaths::ancestor(uint32_t node, int steps) const {
  for (size_t k = 0; steps > 0; ++k, steps >>= 1) {
    if (steps & 1) node = up_[k][node];
  }
  return node;
}

std::optional<int> TreePaths::length(uint32_t a, uint32_t b) const {
  if (a >= depth_.size() || b >= depth_.size()) {
    throw Error(ErrorCode::InvalidArgument, "node index outside the tree");
  }
  if (root_[a] != root_[b]) return std::nullopt;
  uint32_t x = a;
  uint32_t y = b;
  if (depth_[x] < depth_[y]) std::swap(x, y);
  x = ancestor(x, depth_[x] - depth_[y]);
  if (x != y) {
    for (size_t k = up_.size(); k-- > 0;) {
      if (up_[k][x] != up_[k][y]) {
        x = up_[k][x];
        y = up_[k][y];
      }
    }
    x = up_[0][x];
  }
  return depth_[a] + depth_[b] - 2 * depth_[x];
}

std::optional<int> tree_path_length(std::span<const ImagePair> forest, uint32_t n, uint32_t a,
                                    uint32_t b) {
  return TreePaths(forest, n).length(a, b);
}

ViewGraph make_tree_graph(const ScoreMap& scores, uint32_t n, const SaraConfig& config) {
  ViewGraph graph;
  graph.n_nodes = n;
  graph.budgets = resolve_budgets(config, n);
  for (const auto& [pair, score] : scores) {
    check_nodes(pair, n);
    if (!score.rejected) graph.candidate_edges.emplace(pair, score.weight);
  }
  for (const ImagePair& e : max_spanning_tree(graph.candidate_edges, n)) {
    graph.selected_edges.push_back({e, EdgeRole::Tree});
  }

  UnionFind uf(n);
  for (const auto& [pair, weight] : graph.candidate_edges) uf.unite(pair.i, pair.j);
  graph.component_of.assign(n, 0);
  std::map<uint32_t, uint32_t> label;
  for (uint32_t v = 0; v < n; ++v) {
    const auto [it, inserted] = label.emplace(uf.find(v), static_cast<uint32_t>(label.size()));
    graph.component_of[v] = it->second;
  }
  graph.num_components = static_cast<uint32_t>(label.size());
  return graph;
}

void add_loops(ViewGraph& graph, const SaraConfig& config) {
  const int budget = graph.budgets.loop;
  if (budget <= 0) return;
  const std::vector<ImagePair> tree = graph.edges_with_role(EdgeRole::Tree);
  const TreePaths paths(tree, graph.n_nodes);
  const std::set<ImagePair> taken = selected_set(graph);

  std::vector<std::vector<RankedEdge>> bins(config.loop_bins.size());
  for (const auto& [pair, weight] : graph.candidate_edges) {
    if (taken.contains(pair)) continue;
    const std::optional<int> length = paths.length(pair.i, pair.j);
    if (!length) continue;
    for (size_t b = 0; b < config.loop_bins.size(); ++b) {
      if (config.loop_bins[b].contains(*length)) {
        bins[b].push_back({pair, weight});
        break;
      }
    }
  }
  for (auto& bin : bins) sort_ranked(bin);

  std::vector<size_t> cursor(bins.size(), 0);
  int added = 0;
  bool progress = true;
  while (added < budget && progress) {
    progress = false;
    for (size_t b = bins.size(); b-- > 0 && added < budget;) {
      if (cursor[b] >= bins[b].size()) continue;
      graph.selected_edges.push_back({bins[b][cursor[b]++].pair, EdgeRole::Loop});
      ++added;
      progress = true;
    }
  }
}

void add_anchors(ViewGraph& graph, const ScoreMap& scores, const SaraConfig& /*config*/) {
  const int budget = graph.budgets.anchor;
  if (budget <= 0) return;
  const std::set<ImagePair> tree = [&] {
    const auto edges = graph.edges_with_role(EdgeRole::Tree);
    return std::set<ImagePair>(edges.begin(), edges.end());
  }();
  const std::set<ImagePair> taken = selected_set(graph);

  std::vector<RankedEdge> ranked;
  for (const auto& [pair, weight] : graph.candidate_edges) {
    if (tree.contains(pair)) continue;
    const auto it = scores.find(pair);
    const double parallax = it == scores.end() ? 0.0 : it->second.parallax;
    ranked.push_back({pair, parallax * weight});
  }
  sort_ranked(ranked);

  // Edges already selected by an earlier stage occupy their rank as if they
  // had been chosen here, so the anchors chosen with and without the earlier
  // stages are nested.
  std::vector<bool> touched(graph.n_nodes, false);
  int added = 0;
  for (const RankedEdge& e : ranked) {
    if (added >= budget) break;
    const bool crowded = touched[e.pair.i] && touched[e.pair.j];
    if (taken.contains(e.pair)) {
      touched[e.pair.i] = touched[e.pair.j] = true;
      continue;
    }
    if (crowded) continue;
    graph.selected_edges.push_back({e.pair, EdgeRole::Anchor});
    touched[e.pair.i] = touched[e.pair.j] = true;
    ++added;
  }
}

double weak_view_boost(uint32_t degree, double kappa) {
  return 1.0 / ((1.0 + degree) * (kBoostEpsilon + kappa));
}

std::vector<NodeConfidence> node_confidences(const ViewGraph& graph) {
  std::vector<std::vector<double>> incident(graph.n_nodes);
  for (const SelectedEdge& e : graph.selected_edges) {
    if (e.role != EdgeRole::Tree) continue;
    const auto it = graph.candidate_edges.find(e.pair);
    const double w = it == graph.candidate_edges.end() ? 0.0 : it->second;
    incident[e.pair.i].push_back(w);
    incident[e.pair.j].push_back(w);
  }
  std::vector<NodeConfidence> out(graph.n_nodes);
  for (uint32_t v = 0; v < graph.n_nodes; ++v) {
    out[v] = {v, static_cast<uint32_t>(incident[v].size()), lower_median(incident[v])};
  }
  return out;
}

std::vector<uint32_t> find_weak_views(const std::vector<NodeConfidence>& confidences,
                                      const SaraConfig& config) {
  if (confidences.empty()) return {};
  std::vector<double> kappas;
  kappas.reserve(confidences.size());
  for (const NodeConfidence& c : confidences) kappas.push_back(c.kappa);
  std::sort(kappas.begin(), kappas.end());
  const auto rank = static_cast<size_t>(config.weak_kappa_percentile / 100.0 *
                                        static_cast<double>(kappas.size() - 1));
  const double kappa_cut = kappas[rank];

  std::vector<uint32_t> weak;
  for (const NodeConfidence& c : confidences) {
    if (static_cast<int>(c.degree_in_tree) <= config.weak_degree_threshold || c.kappa < kappa_cut) {
      weak.push_back(c.node);
    }
  }
  std::sort(weak.begin(), weak.end(), [&](uint32_t a, uint32_t b) {
    const double ka = (1.0 + confidences[a].degree_in_tree) * (kBoostEpsilon + confidences[a].kappa);
    const double kb = (1.0 + confidences[b].degree_in_tree) * (kBoostEpsilon + confidences[b].kappa);
    if (ka != kb) return ka < kb;
    return a < b;
  });
  return weak;
}

void add_weak_view_support(ViewGraph& graph, const SaraConfig& config) {
  const int per_view = graph.budgets.weak_per_view;
  const int total = graph.budgets.weak_total;
  const std::vector<NodeConfidence> confidences = node_confidences(graph);
  graph.weak_views = find_weak_views(confidences, config);
  if (per_view <= 0 || total <= 0) return;

  std::vector<std::vector<RankedEdge>> incident(graph.n_nodes);
  for (const auto& [pair, weight] : graph.candidate_edges) {
    incident[pair.i].push_back({pair, weight});
    incident[pair.j].push_back({pair, weight});
  }
  std::set<ImagePair> taken = selected_set(graph);
  int added = 0;
  for (uint32_t u : graph.weak_views) {
    if (added >= total) break;
    const NodeConfidence& c = confidences[u];
    const double boost = weak_view_boost(c.degree_in_tree, c.kappa);
    std::vector<RankedEdge> options;
    for (const RankedEdge& e : incident[u]) {
      if (!taken.contains(e.pair)) options.push_back({e.pair, e.score * boost});
    }
    sort_ranked(options);
    int added_here = 0;
    for (const RankedEdge& e : options) {
      if (added_here >= per_view || added >= total) break;
      graph.selected_edges.push_back({e.pair, EdgeRole::Weak});
      taken.insert(e.pair);
      ++added_here;
      ++added;
    }
  }
}

ViewGraph build_view_graph(const ScoreMap& scores, uint32_t n, const SaraConfig& config) {
  if (scores.empty()) throw Error(ErrorCode::EmptyScoreSet, "no scored pairs to build a graph from");
  ViewGraph graph = make_tree_graph(scores, n, config);
  if (graph.num_components > 1) {
    std::map<uint32_t, std::vector<uint32_t>> members;
    for (uint32_t v = 0; v < n; ++v) members[graph.component_of[v]].push_back(v);
    spdlog::warn("candidate view graph is disconnected: {} components", graph.num_components);
    for (const auto& [id, nodes] : members) {
      std::string listing;
      for (uint32_t v : nodes) listing += (listing.empty() ? "" : " ") + std::to_string(v);
      spdlog::warn("  component {}: [{}]", id, listing);
    }
  }
  add_loops(graph, config);
  add_anchors(graph, scores, config);
  add_weak_view_support(graph, config);
  return graph;
}

}  // namespace sara
