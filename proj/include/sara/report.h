#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sara/scorer.h"
#include "sara/viewgraph.h"

namespace sara {

// 1 - |selected| / (N (N - 1) / 2); 0 when there are fewer than two images.
double reduction_ratio(size_t n_selected, size_t n_images);

// Per selected edge: ids, role, overlap, parallax (degrees), weight and inlier
// count; plus a summary block. Contains no timings, so it is reproducible.
nlohmann::json graph_report_json(const ViewGraph& graph, const ScoreMap& scores,
                                 const std::vector<std::string>& image_ids);

void write_graph_report(const ViewGraph& graph, const ScoreMap& scores,
                        const std::vector<std::string>& image_ids,
                        const std::filesystem::path& path,
                        const nlohmann::json& extra = nlohmann::json::object());

// Selected edges as image-id pairs, ready for write_pair_list.
std::vector<std::pair<std::string, std::string>> selected_id_pairs(
    const ViewGraph& graph, const std::vector<std::string>& image_ids);

}  // namespace sara
