#pragma once

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kpirefine/graph.hpp"

namespace kpirefine {

// {"nodes": [...], "edges": [["effect", "cause"], ...], "key_kpis": [...]}
struct GraphFile {
  CausalityGraph graph;
  std::vector<NodeIndex> key_kpis;  // ascending
};

// Throws Error(Parse) on malformed JSON or schema, and the build_graph error
// (naming the offending edge) on invalid structure.
GraphFile parse_graph_json(std::string_view text);
GraphFile load_graph_json(const std::filesystem::path& path);

nlohmann::json graph_to_json(const CausalityGraph& g, std::span<const NodeIndex> key_kpis = {});
void save_graph_json(const std::filesystem::path& path, const CausalityGraph& g,
                     std::span<const NodeIndex> key_kpis = {});

}  // namespace kpirefine
