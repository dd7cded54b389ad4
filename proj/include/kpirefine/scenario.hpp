#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "kpirefine/graph.hpp"
#include "kpirefine/refine.hpp"

namespace kpirefine {

// Synthetic experiment: each epoch one source-rooted path of `path_length`
// edges is anomalous, and binary detector outputs are flipped with the
// given false positive / false negative rates.
struct ScenarioSpec {
  CausalityGraph graph;
  std::uint32_t epochs = 5000;
  double fpr = 0.1;
  double fnr = 0.1;
  std::size_t path_length = 0;
  std::uint64_t seed = 0;
  std::vector<NodeIndex> key_kpis;
  // Per-node probability of a missing reading; 0 disables the simulation.
  double missing_rate = 0.0;
  // Set when the graph came from make_polytree; echoed in reports.
  std::optional<PolytreeSpec> polytree;

  void validate() const;
};

ScenarioSpec polytree_scenario(const PolytreeSpec& tree, double fpr, double fnr,
                               std::uint32_t epochs, std::uint64_t seed);

struct EpochRecord {
  std::vector<std::uint8_t> labels;  // 1 = anomalous
  ScoreVector raw_scores;
  std::vector<NodeIndex> missing;
};

// Uniform draw over the precomputed source-rooted paths of a graph.
class PathSampler {
 public:
  PathSampler(const CausalityGraph& g, std::size_t length);

  const std::vector<Path>& paths() const noexcept { return paths_; }
  const Path& sample(std::mt19937_64& rng) const;

 private:
  std::vector<Path> paths_;
};

// Node set (ascending) of the path drawn for `epoch`.
std::vector<NodeIndex> sample_anomaly_set(const ScenarioSpec& spec, std::uint64_t epoch);

ScoreVector corrupt_scores(std::span<const std::uint8_t> labels, double fpr, double fnr,
                           std::mt19937_64& rng);

EpochRecord generate_epoch(const ScenarioSpec& spec, const PathSampler& sampler,
                           std::uint64_t epoch);

std::vector<EpochRecord> generate(const ScenarioSpec& spec);

// One row per (epoch, node): epoch,node_name,label,raw_score. Missing
// readings leave raw_score empty.
void write_scenario_csv(std::ostream& out, const ScenarioSpec& spec,
                        std::span<const EpochRecord> records);

nlohmann::json scenario_to_json(const ScenarioSpec& spec);

}  // namespace kpirefine
