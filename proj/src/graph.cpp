#include "kpirefine/graph.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "kpirefine/error.hpp"

namespace kpirefine {
namespace {

std::string edge_label(const std::vector<std::string>& names, const Edge& e) {
  return "(\"" + names[e.effect] + "\" -> \"" + names[e.cause] + "\")";
}

// Iterative three-colour DFS. Returns a back edge if the graph has a cycle.
std::optional<Edge> find_back_edge(std::size_t n,
                                   const std::vector<std::size_t>& offsets,
                                   const std::vector<NodeIndex>& targets) {
  enum : std::uint8_t { kWhite, kGrey, kBlack };
  std::vector<std::uint8_t> colour(n, kWhite);
  std::vector<std::pair<NodeIndex, std::size_t>> stack;
  for (NodeIndex root = 0; root < n; ++root) {
    if (colour[root] != kWhite) continue;
    colour[root] = kGrey;
    stack.emplace_back(root, offsets[root]);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next == offsets[node + 1]) {
        colour[node] = kBlack;
        stack.pop_back();
        continue;
      }
      const NodeIndex child = targets[next++];
      if (colour[child] == kGrey) return Edge{node, child};
      if (colour[child] == kWhite) {
        colour[child] = kGrey;
        stack.emplace_back(child, offsets[child]);
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<NodeIndex> CausalityGraph::sources() const {
  std::vector<NodeIndex> out;
  for (NodeIndex i = 0; i < size(); ++i) {
    if (in_degree_[i] == 0) out.push_back(i);
  }
  return out;
}

std::vector<NodeIndex> CausalityGraph::sinks() const {
  std::vector<NodeIndex> out;
  for (NodeIndex i = 0; i < size(); ++i) {
    if (!has_causes(i)) out.push_back(i);
  }
  return out;
}

std::optional<NodeIndex> CausalityGraph::index_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<NodeIndex>(it - names_.begin());
}

CausalityGraph build_graph(std::vector<std::string> node_names,
                           std::vector<Edge> edges) {
  const std::size_t n = node_names.size();
  if (n == 0) raise(ErrorCode::EmptyInput, "graph has no nodes");
  if (n > std::numeric_limits<NodeIndex>::max()) {
    raise(ErrorCode::Overflow, "too many nodes");
  }
  {
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < n; ++i) {
      if (!seen.emplace(node_names[i], i).second) {
        raise(ErrorCode::DuplicateNode, "node \"" + node_names[i] + "\" listed twice");
      }
    }
  }
  for (const Edge& e : edges) {
    if (e.effect >= n || e.cause >= n) {
      raise(ErrorCode::UnknownNode, "edge (" + std::to_string(e.effect) + ", " +
                                        std::to_string(e.cause) +
                                        ") references a node outside [0, " +
                                        std::to_string(n) + ")");
    }
    if (e.effect == e.cause) {
      raise(ErrorCode::SelfLoop, "edge " + edge_label(node_names, e));
    }
  }

  CausalityGraph g;
  g.offsets_.assign(n + 1, 0);
  g.in_degree_.assign(n, 0);
  for (const Edge& e : edges) {
    ++g.offsets_[e.effect + 1];
    ++g.in_degree_[e.cause];
  }
  for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
  g.targets_.resize(edges.size());
  {
    std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const Edge& e : edges) g.targets_[fill[e.effect]++] = e.cause;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto first = g.targets_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i]);
    const auto last = g.targets_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i + 1]);
    std::sort(first, last);
    const auto dup = std::adjacent_find(first, last);
    if (dup != last) {
      raise(ErrorCode::DuplicateEdge,
            "edge " + edge_label(node_names, Edge{static_cast<NodeIndex>(i), *dup}));
    }
  }
  if (auto back = find_back_edge(n, g.offsets_, g.targets_)) {
    raise(ErrorCode::CycleDetected, "edge " + edge_label(node_names, *back) + " closes a cycle");
  }

  g.names_ = std::move(node_names);
  g.edges_ = std::move(edges);
  return g;
}

CausalityGraph build_graph(
    std::vector<std::string> node_names,
    const std::vector<std::pair<std::string, std::string>>& named_edges) {
  std::unordered_map<std::string, NodeIndex> index;
  for (std::size_t i = 0; i < node_names.size(); ++i) {
    index.emplace(node_names[i], static_cast<NodeIndex>(i));
  }
  std::vector<Edge> edges;
  edges.reserve(named_edges.size());
  for (const auto& [effect, cause] : named_edges) {
    const auto a = index.find(effect);
    const auto b = index.find(cause);
    if (a == index.end() || b == index.end()) {
      raise(ErrorCode::UnknownNode, "edge (\"" + effect + "\" -> \"" + cause +
                                        "\") names unknown node \"" +
                                        (a == index.end() ? effect : cause) + "\"");
    }
    edges.push_back({a->second, b->second});
  }
  return build_graph(std::move(node_names), std::move(edges));
}

void PolytreeSpec::validate() const {
  if (branching < 1) raise(ErrorCode::InvalidArgument, "polytree branching factor must be >= 1");
}

std::uint64_t polytree_node_count(const PolytreeSpec& spec) {
  spec.validate();
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 0;
  std::uint64_t level = 1;
  for (std::uint32_t k = 0; k <= spec.height; ++k) {
    if (total > kMax - level) raise(ErrorCode::Overflow, "polytree node count exceeds 64 bits");
    total += level;
    if (k == spec.height) break;
    if (level > kMax / spec.branching) raise(ErrorCode::Overflow, "polytree node count exceeds 64 bits");
    level *= spec.branching;
  }
  return total;
}

LeafDensity leaf_density(const PolytreeSpec& spec) {
  const std::uint64_t nodes = polytree_node_count(spec);
  std::uint64_t leaves = 1;
  for (std::uint32_t k = 0; k < spec.height; ++k) leaves *= spec.branching;
  return {leaves, nodes};
}

CausalityGraph make_polytree(const PolytreeSpec& spec) {
  const std::uint64_t count = polytree_node_count(spec);
  if (count > std::numeric_limits<NodeIndex>::max()) {
    raise(ErrorCode::Overflow, "polytree with " + std::to_string(count) + " nodes is too large");
  }
  const auto n = static_cast<std::size_t>(count);
  std::vector<std::string> names(n);
  for (std::size_t i = 0; i < n; ++i) names[i] = "n" + std::to_string(i);
  // Level order: the children of node i are r*i + 1, ..., r*i + r.
  std::vector<Edge> edges;
  edges.reserve(n - 1);
  for (std::size_t child = 1; child < n; ++child) {
    edges.push_back({static_cast<NodeIndex>((child - 1) / spec.branching),
                     static_cast<NodeIndex>(child)});
  }
  return build_graph(std::move(names), std::move(edges));
}

std::vector<Path> enumerate_root_paths(const CausalityGraph& g, std::size_t length) {
  std::vector<Path> out;
  Path current;
  current.reserve(length + 1);
  auto extend = [&](auto&& self, NodeIndex node) -> void {
    current.push_back(node);
    if (current.size() == length + 1) {
      out.push_back(current);
    } else {
      for (NodeIndex next : g.causes(node)) self(self, next);
    }
    current.pop_back();
  };
  for (NodeIndex s : g.sources()) extend(extend, s);
  if (out.empty()) {
    raise(ErrorCode::NoSuchPath, "no source-rooted path with " + std::to_string(length) + " edges");
  }
  return out;
}

}  // namespace kpirefine
