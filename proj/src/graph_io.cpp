#include "kpirefine/graph_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "kpirefine/error.hpp"

namespace kpirefine {
namespace {

using nlohmann::json;

std::vector<std::string> string_list(const json& doc, const char* key) {
  const json& node = doc.at(key);
  if (!node.is_array()) raise(ErrorCode::Parse, std::string("\"") + key + "\" must be an array");
  std::vector<std::string> out;
  for (const json& item : node) {
    if (!item.is_string()) {
      raise(ErrorCode::Parse, std::string("\"") + key + "\" entries must be strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

GraphFile parse_graph_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    raise(ErrorCode::Parse, e.what());
  }
  if (!doc.is_object()) raise(ErrorCode::Parse, "graph file must hold a JSON object");
  if (!doc.contains("nodes")) raise(ErrorCode::Parse, "missing \"nodes\"");

  auto nodes = string_list(doc, "nodes");
  std::vector<std::pair<std::string, std::string>> edges;
  if (doc.contains("edges")) {
    const json& list = doc.at("edges");
    if (!list.is_array()) raise(ErrorCode::Parse, "\"edges\" must be an array");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const json& e = list[k];
      if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
        raise(ErrorCode::Parse, "edge #" + std::to_string(k) + " must be [\"effect\", \"cause\"]");
      }
      edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
  }
  std::vector<std::string> keys;
  if (doc.contains("key_kpis")) keys = string_list(doc, "key_kpis");

  GraphFile file{build_graph(std::move(nodes), edges), {}};
  for (const auto& name : keys) {
    const auto idx = file.graph.index_of(name);
    if (!idx) raise(ErrorCode::UnknownNode, "key KPI \"" + name + "\" is not a node");
    file.key_kpis.push_back(*idx);
  }
  std::sort(file.key_kpis.begin(), file.key_kpis.end());
  file.key_kpis.erase(std::unique(file.key_kpis.begin(), file.key_kpis.end()), file.key_kpis.end());
  return file;
}

GraphFile load_graph_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_graph_json(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

json graph_to_json(const CausalityGraph& g, std::span<const NodeIndex> key_kpis) {
  json doc;
  doc["nodes"] = g.names();
  json edges = json::array();
  for (const Edge& e : g.edges()) edges.push_back({g.name(e.effect), g.name(e.cause)});
  doc["edges"] = std::move(edges);
  if (!key_kpis.empty()) {
    json keys = json::array();
    for (NodeIndex i : key_kpis) keys.push_back(g.name(i));
    doc["key_kpis"] = std::move(keys);
  }
  return doc;
}

void save_graph_json(const std::filesystem::path& path, const CausalityGraph& g,
                     std::span<const NodeIndex> key_kpis) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::Io, "cannot write " + path.string());
  out << graph_to_json(g, key_kpis).dump(2) << '\n';
}

}  // namespace kpirefine
