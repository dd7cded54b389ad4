#include "kpirefine/scores_csv.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "kpirefine/error.hpp"
#include "kpirefine/format.hpp"

namespace kpirefine {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void fail_at(std::string_view source, std::size_t line, const std::string& msg) {
  raise(ErrorCode::Parse, std::string(source) + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

std::vector<ScoreRow> read_scores_csv(std::istream& in, const CausalityGraph& g,
                                      std::string_view source) {
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) fail_at(source, 1, "missing header row");

  const auto header = split(lines[0]);
  if (header.size() != g.size()) {
    fail_at(source, 1, "header has " + std::to_string(header.size()) + " columns, graph has " +
                           std::to_string(g.size()) + " nodes");
  }
  std::vector<NodeIndex> column_node(header.size());
  std::vector<bool> seen(g.size(), false);
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto idx = g.index_of(std::string(header[c]));
    if (!idx) fail_at(source, 1, "unknown node \"" + std::string(header[c]) + "\"");
    if (seen[*idx]) fail_at(source, 1, "node \"" + std::string(header[c]) + "\" repeated");
    seen[*idx] = true;
    column_node[c] = *idx;
  }

  std::vector<ScoreRow> rows;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const std::size_t line_no = l + 1;
    const auto cells = split(lines[l]);
    if (cells.size() != g.size()) {
      fail_at(source, line_no, "expected " + std::to_string(g.size()) + " cells, found " +
                                   std::to_string(cells.size()));
    }
    ScoreRow row;
    row.line = line_no;
    row.scores.assign(g.size(), 0.0);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto cell = cells[c];
      if (cell.empty()) {
        row.missing.push_back(column_node[c]);
        continue;
      }
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        fail_at(source, line_no, "cannot parse \"" + std::string(cell) + "\" as a number");
      }
      if (!(v >= 0.0 && v <= 1.0)) {
        fail_at(source, line_no, "score " + std::string(cell) + " outside [0, 1]");
      }
      row.scores[column_node[c]] = v;
    }
    std::sort(row.missing.begin(), row.missing.end());
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_refined_csv(std::ostream& out, const CausalityGraph& g,
                       std::span<const RefinedEpoch> epochs) {
  out << "epoch,node_name,raw_score,y,alpha\n";
  for (std::size_t m = 0; m < epochs.size(); ++m) {
    const auto& e = epochs[m];
    for (NodeIndex i = 0; i < g.size(); ++i) {
      out << m << ',' << g.name(i) << ',';
      if (!std::binary_search(e.missing.begin(), e.missing.end(), i)) out << format_decimal(e.raw[i]);
      out << ',' << format_decimal(e.result.y[i]) << ',' << format_decimal(e.result.alpha[i])
          << '\n';
    }
  }
}

}  // namespace kpirefine
