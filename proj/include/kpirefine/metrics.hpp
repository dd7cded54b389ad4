#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kpirefine/refine.hpp"
#include "kpirefine/scenario.hpp"

namespace kpirefine {

struct LabeledPool {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;

  void add(double score, bool anomalous) {
    scores.push_back(score);
    labels.push_back(anomalous ? 1 : 0);
  }
  std::size_t positives() const;
  std::size_t negatives() const { return labels.size() - positives(); }
};

// Mann-Whitney AUC: P(pos > neg) + P(pos == neg) / 2, by midranks in
// O(n log n). Throws SingleClassPool when either class is empty and
// DimensionMismatch on ragged input.
double auc_roc(const LabeledPool& pool);

struct EvalReport {
  double auc_original = 0.0;
  double auc_refined = 0.0;
  std::size_t sample_count = 0;
  // Echo of the run.
  std::optional<PolytreeSpec> polytree;
  double fpr = 0.0;
  double fnr = 0.0;
  std::uint32_t epochs = 0;
  std::uint64_t seed = 0;
  std::uint64_t refine_seed = 0;
  // Solver statistics over all epochs.
  double mean_iterations = 0.0;
  double converged_fraction = 0.0;
  double mean_epoch_ms = 0.0;
};

struct ExperimentOptions {
  unsigned threads = 1;  // 0 = hardware concurrency
};

// Generates the scenario, refines every epoch independently (refine stream =
// epoch index) and pools all node-epoch samples for both AUCs.
EvalReport run_experiment(const ScenarioSpec& spec, const RefineConfig& cfg,
                          const ExperimentOptions& options = {});

enum class SweepAxis { Fpr, Fnr };

std::vector<EvalReport> sweep(const ScenarioSpec& base, const RefineConfig& cfg,
                              SweepAxis axis, std::span<const double> values,
                              const ExperimentOptions& options = {});

nlohmann::json report_to_json(const EvalReport& report);
std::string report_csv_header();  // r,h,fpr,fnr,auc_original,auc_refined,M,seed
std::string report_csv_row(const EvalReport& report);

}  // namespace kpirefine
