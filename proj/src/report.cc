#include "sara/report.h"

#include "sara/config.h"
#include "sara/error.h"
#include "sara/feature_io.h"

namespace sara {

double reduction_ratio(size_t n_selected, size_t n_images) {
  const uint64_t exhaustive = num_exhaustive_pairs(n_images);
  if (exhaustive == 0) return 0.0;
  return 1.0 - static_cast<double>(n_selected) / static_cast<double>(exhaustive);
}

nlohmann::json graph_report_json(const ViewGraph& graph, const ScoreMap& scores,
                                 const std::vector<std::string>& image_ids) {
  if (image_ids.size() != graph.n_nodes) {
    throw Error(ErrorCode::InvalidArgument, "image id list does not match the graph size");
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const SelectedEdge& e : graph.selected_edges) {
    const auto it = scores.find(e.pair);
    if (it == scores.end()) {
      throw Error(ErrorCode::InvalidArgument, "selected edge (" + std::to_string(e.pair.i) + ", " +
                                                  std::to_string(e.pair.j) + ") has no score");
    }
    const PairScore& s = it->second;
    nlohmann::json record = {{"a", image_ids[e.pair.i]},
                             {"b", image_ids[e.pair.j]},
                             {"role", to_string(e.role)},
                             {"overlap", s.overlap},
                             {"parallax_deg", rad_to_deg(s.parallax)},
                             {"weight", s.weight},
                             {"inliers", s.inlier_count}};
    if (s.uncalibrated) record["uncalibrated"] = true;
    edges.push_back(std::move(record));
  }

  nlohmann::json weak = nlohmann::json::array();
  for (uint32_t v : graph.weak_views) weak.push_back(image_ids[v]);

  const nlohmann::json summary = {
      {"n_nodes", graph.n_nodes},
      {"n_edges", graph.selected_edges.size()},
      {"n_exhaustive_pairs", num_exhaustive_pairs(graph.n_nodes)},
      {"reduction_ratio", reduction_ratio(graph.selected_edges.size(), graph.n_nodes)},
      {"n_candidate_edges", graph.candidate_edges.size()},
      {"n_components", graph.num_components},
      {"edges_by_role",
       {{"tree", graph.count(EdgeRole::Tree)},
        {"loop", graph.count(EdgeRole::Loop)},
        {"anchor", graph.count(EdgeRole::Anchor)},
        {"weak", graph.count(EdgeRole::Weak)}}},
      {"budgets",
       {{"loop", graph.budgets.loop},
        {"anchor", graph.budgets.anchor},
        {"weak_per_view", graph.budgets.weak_per_view},
        {"weak_total", graph.budgets.weak_total}}},
  };
  return {{"summary", summary}, {"edges", edges}, {"weak_views", weak}};
}

void write_graph_report(const ViewGraph& graph, const ScoreMap& scores,
                        const std::vector<std::string>& image_ids, const std::filesystem::path& path,
                        const nlohmann::json& extra) {
  nlohmann::json report = graph_report_json(graph, scores, image_ids);
  for (const auto& [key, value] : extra.items()) report[key] = value;
  write_text_file(path, report.dump(2) + "\n");
}

std::vector<std::pair<std::string, std::string>> selected_id_pairs(
    const ViewGraph& graph, const std::vector<std::string>& image_ids) {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(graph.selected_edges.size());
  for (const SelectedEdge& e : graph.selected_edges) {
    out.emplace_back(image_ids.at(e.pair.i), image_ids.at(e.pair.j));
  }
  return out;
}

}  // namespace sara
