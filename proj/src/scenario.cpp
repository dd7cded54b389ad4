#include "kpirefine/scenario.hpp"

#include <algorithm>
#include <ostream>

#include "kpirefine/error.hpp"
#include "kpirefine/format.hpp"
#include "kpirefine/random.hpp"

namespace kpirefine {

void ScenarioSpec::validate() const {
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(fpr)) raise(ErrorCode::InvalidArgument, "fpr must lie in [0, 1]");
  if (!in_unit(fnr)) raise(ErrorCode::InvalidArgument, "fnr must lie in [0, 1]");
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) {
    raise(ErrorCode::InvalidArgument, "missing rate must lie in [0, 1)");
  }
  for (NodeIndex i : key_kpis) {
    if (i >= graph.size()) raise(ErrorCode::InvalidArgument, "key KPI index out of range");
  }
}

ScenarioSpec polytree_scenario(const PolytreeSpec& tree, double fpr, double fnr,
                               std::uint32_t epochs, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.graph = make_polytree(tree);
  spec.epochs = epochs;
  spec.fpr = fpr;
  spec.fnr = fnr;
  spec.path_length = tree.height;
  spec.seed = seed;
  spec.polytree = tree;
  return spec;
}

PathSampler::PathSampler(const CausalityGraph& g, std::size_t length)
    : paths_(enumerate_root_paths(g, length)) {}

const Path& PathSampler::sample(std::mt19937_64& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, paths_.size() - 1);
  return paths_[pick(rng)];
}

std::vector<NodeIndex> sample_anomaly_set(const ScenarioSpec& spec, std::uint64_t epoch) {
  const PathSampler sampler(spec.graph, spec.path_length);
  auto rng = make_stream(spec.seed, epoch);
  std::vector<NodeIndex> set = sampler.sample(rng);
  std::sort(set.begin(), set.end());
  return set;
}

ScoreVector corrupt_scores(std::span<const std::uint8_t> labels, double fpr, double fnr,
                           std::mt19937_64& rng) {
  std::bernoulli_distribution false_positive(fpr);
  std::bernoulli_distribution false_negative(fnr);
  std::vector<double> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0) {
      out[i] = false_negative(rng) ? 0.0 : 1.0;
    } else {
      out[i] = false_positive(rng) ? 1.0 : 0.0;
    }
  }
  return ScoreVector(std::move(out));
}

EpochRecord generate_epoch(const ScenarioSpec& spec, const PathSampler& sampler,
                           std::uint64_t epoch) {
  // Draw order within a stream: path, score flips, missing flags.
  auto rng = make_stream(spec.seed, epoch);
  EpochRecord rec;
  rec.labels.assign(spec.graph.size(), 0);
  for (NodeIndex i : sampler.sample(rng)) rec.labels[i] = 1;
  rec.raw_scores = corrupt_scores(rec.labels, spec.fpr, spec.fnr, rng);
  if (spec.missing_rate > 0.0) {
    std::bernoulli_distribution gone(spec.missing_rate);
    do {
      rec.missing.clear();
      for (NodeIndex i = 0; i < spec.graph.size(); ++i) {
        const bool is_key = std::find(spec.key_kpis.begin(), spec.key_kpis.end(), i) !=
                            spec.key_kpis.end();
        if (gone(rng) && !is_key) rec.missing.push_back(i);
      }
    } while (rec.missing.size() == spec.graph.size());
  }
  return rec;
}

std::vector<EpochRecord> generate(const ScenarioSpec& spec) {
  spec.validate();
  std::vector<EpochRecord> out;
  if (spec.epochs == 0) return out;
  const PathSampler sampler(spec.graph, spec.path_length);
  out.reserve(spec.epochs);
  for (std::uint32_t m = 0; m < spec.epochs; ++m) out.push_back(generate_epoch(spec, sampler, m));
  return out;
}

void write_scenario_csv(std::ostream& out, const ScenarioSpec& spec,
                        std::span<const EpochRecord> records) {
  out << "epoch,node_name,label,raw_score\n";
  for (std::size_t m = 0; m < records.size(); ++m) {
    const auto& rec = records[m];
    for (NodeIndex i = 0; i < spec.graph.size(); ++i) {
      out << m << ',' << spec.graph.name(i) << ',' << int(rec.labels[i]) << ',';
      if (!std::binary_search(rec.missing.begin(), rec.missing.end(), i)) {
        out << format_decimal(rec.raw_scores[i]);
      }
      out << '\n';
    }
  }
}

nlohmann::json scenario_to_json(const ScenarioSpec& spec) {
  nlohmann::json j;
  j["nodes"] = spec.graph.size();
  j["edges"] = spec.graph.edges().size();
  if (spec.polytree) {
    j["r"] = spec.polytree->branching;
    j["h"] = spec.polytree->height;
  }
  j["epochs"] = spec.epochs;
  j["fpr"] = spec.fpr;
  j["fnr"] = spec.fnr;
  j["path_length"] = spec.path_length;
  j["seed"] = spec.seed;
  j["missing_rate"] = spec.missing_rate;
  nlohmann::json keys = nlohmann::json::array();
  for (NodeIndex i : spec.key_kpis) keys.push_back(spec.graph.name(i));
  j["key_kpis"] = keys;
  return j;
}

}  // namespace kpirefine
