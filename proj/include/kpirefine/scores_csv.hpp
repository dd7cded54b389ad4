#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kpirefine/graph.hpp"
#include "kpirefine/refine.hpp"

namespace kpirefine {

// One epoch of detector output, reordered to graph node order. Missing cells
// carry a 0 placeholder in `scores` and are listed in `missing`.
struct ScoreRow {
  std::size_t line = 0;  // 1-based line in the source file
  std::vector<double> scores;
  std::vector<NodeIndex> missing;
};

// Header row of node names (any order, each graph node exactly once), then
// one row per epoch; an empty cell is a missing reading. Throws
// Error(Parse) with "<source>:<line>: ..." on malformed input.
std::vector<ScoreRow> read_scores_csv(std::istream& in, const CausalityGraph& g,
                                      std::string_view source);

struct RefinedEpoch {
  std::vector<double> raw;
  std::vector<NodeIndex> missing;
  RefineResult result;
};

// Columns: epoch,node_name,raw_score,y,alpha; a missing raw score is empty.
void write_refined_csv(std::ostream& out, const CausalityGraph& g,
                       std::span<const RefinedEpoch> epochs);

}  // namespace kpirefine
