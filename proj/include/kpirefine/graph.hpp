#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace kpirefine {

using NodeIndex = std::uint32_t;

// A causal edge: an anomaly at `effect` is typically caused by one at `cause`.
struct Edge {
  NodeIndex effect;
  NodeIndex cause;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Immutable, validated DAG of KPI nodes. Edges point effect -> cause, so the
// out-neighbourhood of a node is the set of its candidate causes.
class CausalityGraph {
 public:
  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::string& name(NodeIndex i) const { return names_.at(i); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  // Neighbour set of node i, sorted ascending.
  std::span<const NodeIndex> causes(NodeIndex i) const noexcept {
    return {targets_.data() + offsets_[i], targets_.data() + offsets_[i + 1]};
  }
  bool has_causes(NodeIndex i) const noexcept {
    return offsets_[i + 1] != offsets_[i];
  }
  std::size_t in_degree(NodeIndex i) const noexcept { return in_degree_[i]; }

  // Nodes without incoming edges, ascending.
  std::vector<NodeIndex> sources() const;
  // Nodes with an empty neighbour set, ascending.
  std::vector<NodeIndex> sinks() const;

  std::optional<NodeIndex> index_of(const std::string& name) const;

 private:
  friend CausalityGraph build_graph(std::vector<std::string>, std::vector<Edge>);

  std::vector<std::string> names_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<NodeIndex> targets_;
  std::vector<std::size_t> in_degree_;
};

// Validates names and edges and builds the neighbour sets. Throws Error with
// DuplicateNode, SelfLoop, DuplicateEdge, UnknownNode or CycleDetected; the
// message names the offending edge.
CausalityGraph build_graph(std::vector<std::string> node_names,
                           std::vector<Edge> edges);

CausalityGraph build_graph(
    std::vector<std::string> node_names,
    const std::vector<std::pair<std::string, std::string>>& named_edges);

struct PolytreeSpec {
  std::uint32_t branching = 2;  // children per internal node, >= 1
  std::uint32_t height = 0;     // depth of every leaf

  void validate() const;
};

// 1 + r + ... + r^h. Throws Overflow past 64 bits.
std::uint64_t polytree_node_count(const PolytreeSpec& spec);

struct LeafDensity {
  std::uint64_t leaves;
  std::uint64_t nodes;

  double value() const noexcept {
    return static_cast<double>(leaves) / static_cast<double>(nodes);
  }
};

LeafDensity leaf_density(const PolytreeSpec& spec);

// Perfectly balanced (r,h)-polytree, edges parent -> child, nodes numbered in
// level order with the root at 0 and named "n<index>". Throws Overflow when
// the node count does not fit NodeIndex.
CausalityGraph make_polytree(const PolytreeSpec& spec);

using Path = std::vector<NodeIndex>;

// Every directed path with exactly `length` edges that starts at a source
// node, in lexicographic order. Throws NoSuchPath when there is none.
std::vector<Path> enumerate_root_paths(const CausalityGraph& g,
                                       std::size_t length);

}  // namespace kpirefine
