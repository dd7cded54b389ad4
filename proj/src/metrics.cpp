#include "kpirefine/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "kpirefine/error.hpp"
#include "kpirefine/format.hpp"
#include "kpirefine/parallel.hpp"

namespace kpirefine {

std::size_t LabeledPool::positives() const {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(),
                                                [](std::uint8_t l) { return l != 0; }));
}

double auc_roc(const LabeledPool& pool) {
  if (pool.scores.size() != pool.labels.size()) {
    raise(ErrorCode::DimensionMismatch, "scores and labels differ in length");
  }
  const std::size_t n = pool.scores.size();
  const std::size_t n_pos = pool.positives();
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) raise(ErrorCode::SingleClassPool, "AUC needs both classes");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return pool.scores[a] < pool.scores[b]; });

  // Sum of positive midranks (1-based), ties sharing their average rank.
  double rank_sum = 0.0;
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo + 1;
    while (hi < n && pool.scores[order[hi]] == pool.scores[order[lo]]) ++hi;
    const double midrank = 0.5 * static_cast<double>(lo + 1 + hi);
    for (std::size_t t = lo; t < hi; ++t) {
      if (pool.labels[order[t]] != 0) rank_sum += midrank;
    }
    lo = hi;
  }
  const double pos = static_cast<double>(n_pos);
  const double u = rank_sum - pos * (pos + 1.0) / 2.0;
  return u / (pos * static_cast<double>(n_neg));
}

EvalReport run_experiment(const ScenarioSpec& spec, const RefineConfig& cfg,
                          const ExperimentOptions& options) {
  spec.validate();
  cfg.validate();
  if (spec.epochs == 0) raise(ErrorCode::InvalidArgument, "epoch count must be positive");

  const std::size_t n = spec.graph.size();
  const PathSampler sampler(spec.graph, spec.path_length);
  std::vector<EpochRecord> records(spec.epochs);
  std::vector<std::vector<double>> refined(spec.epochs);
  std::vector<std::uint32_t> iterations(spec.epochs);
  std::vector<std::uint8_t> converged(spec.epochs);
  std::vector<double> elapsed_ms(spec.epochs);

  parallel_for(spec.epochs, options.threads, [&](std::size_t m) {
    records[m] = generate_epoch(spec, sampler, m);
    const ConfidencePartition part(n, spec.key_kpis, records[m].missing);
    const auto start = std::chrono::steady_clock::now();
    auto result = refine(records[m].raw_scores, spec.graph, part, cfg, m);
    elapsed_ms[m] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    refined[m] = std::move(result.y);
    iterations[m] = result.iterations_used;
    converged[m] = result.converged ? 1 : 0;
  });

  LabeledPool original;
  LabeledPool improved;
  original.scores.reserve(n * spec.epochs);
  original.labels.reserve(n * spec.epochs);
  improved.scores.reserve(n * spec.epochs);
  improved.labels.reserve(n * spec.epochs);
  for (std::size_t m = 0; m < spec.epochs; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      const bool anomalous = records[m].labels[i] != 0;
      original.add(records[m].raw_scores[i], anomalous);
      improved.add(refined[m][i], anomalous);
    }
  }

  EvalReport report;
  report.auc_original = auc_roc(original);
  report.auc_refined = auc_roc(improved);
  report.sample_count = original.scores.size();
  report.polytree = spec.polytree;
  report.fpr = spec.fpr;
  report.fnr = spec.fnr;
  report.epochs = spec.epochs;
  report.seed = spec.seed;
  report.refine_seed = cfg.seed;
  const double epochs = static_cast<double>(spec.epochs);
  report.mean_iterations = std::accumulate(iterations.begin(), iterations.end(), 0.0) / epochs;
  report.converged_fraction = std::accumulate(converged.begin(), converged.end(), 0.0) / epochs;
  report.mean_epoch_ms = std::accumulate(elapsed_ms.begin(), elapsed_ms.end(), 0.0) / epochs;
  return report;
}

std::vector<EvalReport> sweep(const ScenarioSpec& base, const RefineConfig& cfg,
                              SweepAxis axis, std::span<const double> values,
                              const ExperimentOptions& options) {
  std::vector<EvalReport> out;
  out.reserve(values.size());
  for (double v : values) {
    ScenarioSpec spec = base;
    (axis == SweepAxis::Fpr ? spec.fpr : spec.fnr) = v;
    out.push_back(run_experiment(spec, cfg, options));
  }
  return out;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  if (report.polytree) {
    j["r"] = report.polytree->branching;
    j["h"] = report.polytree->height;
  }
  j["fpr"] = report.fpr;
  j["fnr"] = report.fnr;
  j["auc_original"] = report.auc_original;
  j["auc_refined"] = report.auc_refined;
  j["M"] = report.epochs;
  j["seed"] = report.seed;
  j["refine_seed"] = report.refine_seed;
  j["sample_count"] = report.sample_count;
  j["mean_iterations"] = report.mean_iterations;
  j["converged_fraction"] = report.converged_fraction;
  return j;
}

std::string report_csv_header() { return "r,h,fpr,fnr,auc_original,auc_refined,M,seed"; }

std::string report_csv_row(const EvalReport& report) {
  std::string row;
  if (report.polytree) {
    row += std::to_string(report.polytree->branching) + ',' +
           std::to_string(report.polytree->height) + ',';
  } else {
    row += ",,";
  }
  row += format_decimal(report.fpr) + ',' + format_decimal(report.fnr) + ',' +
         format_decimal(report.auc_original) + ',' + format_decimal(report.auc_refined) + ',' +
         std::to_string(report.epochs) + ',' + std::to_string(report.seed);
  return row;
}

}  // namespace kpirefine
