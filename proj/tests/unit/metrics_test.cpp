#include <cmath>
#include <random>

#include <doctest.h>

#include "kpirefine/metrics.hpp"
#include "support/testutil.hpp"

using namespace kpirefine;
using testutil::error_code_of;

namespace {

LabeledPool pool_of(std::vector<double> scores, std::vector<std::uint8_t> labels) {
  LabeledPool p;
  p.scores = std::move(scores);
  p.labels = std::move(labels);
  return p;
}

// O(n^2) pair count, half credit for ties.
double auc_pairs(const LabeledPool& p) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < p.scores.size(); ++i) {
    if (!p.labels[i]) continue;
    for (std::size_t j = 0; j < p.scores.size(); ++j) {
      if (p.labels[j]) continue;
      pairs += 1;
      wins += p.scores[i] > p.scores[j] ? 1.0 : p.scores[i] == p.scores[j] ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("auc examples") {
  CHECK(auc_roc(pool_of({0.9, 0.1}, {1, 0})) == 1.0);
  CHECK(auc_roc(pool_of({0.1, 0.9}, {1, 0})) == 0.0);
  CHECK(auc_roc(pool_of({0.5, 0.5}, {1, 0})) == 0.5);
  CHECK(auc_roc(pool_of({0.8, 0.4, 0.6, 0.2}, {1, 1, 0, 0})) == doctest::Approx(0.75));
}

TEST_CASE("binary scores under the flip model give 1 - (fpr + fnr) / 2") {
  // 90 of 100 positives score 1, 10 of 100 negatives score 1.
  LabeledPool p;
  for (int i = 0; i < 100; ++i) p.add(i < 90 ? 1.0 : 0.0, true);
  for (int i = 0; i < 100; ++i) p.add(i < 10 ? 1.0 : 0.0, false);
  CHECK(auc_roc(p) == doctest::Approx(0.9));
}

TEST_CASE("auc errors") {
  CHECK(error_code_of([] { auc_roc(pool_of({0.1, 0.2}, {1, 1})); }) == ErrorCode::SingleClassPool);
  CHECK(error_code_of([] { auc_roc(pool_of({}, {})); }) == ErrorCode::SingleClassPool);
  CHECK(error_code_of([] { auc_roc(pool_of({0.1, 0.2}, {1})); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("auc matches pair counting, transforms and label inversion") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    LabeledPool p;
    const int n = 2 + trial * 7;
    for (int i = 0; i < n; ++i) {
      // Coarse values force ties.
      p.add(std::round(u(rng) * 10.0) / 10.0, i % 3 == 0);
    }
    if (p.positives() == 0 || p.negatives() == 0) continue;
    const double auc = auc_roc(p);
    CHECK(auc == doctest::Approx(auc_pairs(p)).epsilon(1e-12));

    LabeledPool affine = p, squashed = p, inverted = p;
    for (double& s : affine.scores) s = 3.0 * s - 7.0;
    for (double& s : squashed.scores) s = 1.0 / (1.0 + std::exp(-4.0 * s));
    for (auto& l : inverted.labels) l = 1 - l;
    CHECK(auc_roc(affine) == doctest::Approx(auc).epsilon(1e-12));
    CHECK(auc_roc(squashed) == doctest::Approx(auc).epsilon(1e-12));
    CHECK(auc_roc(inverted) == doctest::Approx(1.0 - auc).epsilon(1e-12));
  }
}

TEST_CASE("experiment pools every node-epoch sample") {
  const ScenarioSpec spec = polytree_scenario({2, 3}, 0.1, 0.1, 40, 1);
  const EvalReport r = run_experiment(spec, RefineConfig{});
  CHECK(r.sample_count == 40 * 15);
  CHECK(r.epochs == 40);
  CHECK(r.fpr == 0.1);
  CHECK(r.auc_original > 0.7);
  CHECK(r.auc_refined > 0.7);
  CHECK(r.mean_iterations > 0.0);
}

TEST_CASE("experiments are deterministic and thread-count independent") {
  const ScenarioSpec spec = polytree_scenario({2, 3}, 0.15, 0.05, 30, 4);
  RefineConfig cfg;
  cfg.seed = 2;
  const EvalReport a = run_experiment(spec, cfg);
  const EvalReport b = run_experiment(spec, cfg, ExperimentOptions{4});
  CHECK(a.auc_original == b.auc_original);
  CHECK(a.auc_refined == b.auc_refined);
  CHECK(report_to_json(a) == report_to_json(b));
  CHECK(report_csv_row(a) == report_csv_row(b));
}

TEST_CASE("noise-free scenarios stay perfect") {
  const ScenarioSpec spec = polytree_scenario({2, 4}, 0.0, 0.0, 30, 3);
  const EvalReport r = run_experiment(spec, RefineConfig{});
  CHECK(r.auc_original == 1.0);
  CHECK(r.auc_refined >= 0.99);
}

TEST_CASE("zero epochs are rejected") {
  const ScenarioSpec spec = polytree_scenario({2, 2}, 0.1, 0.1, 0, 0);
  CHECK(error_code_of([&] { run_experiment(spec, RefineConfig{}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("sweep varies one rate") {
  const ScenarioSpec base = polytree_scenario({2, 3}, 0.2, 0.0, 10, 0);
  const std::vector<double> values{0.0, 0.1, 0.3};
  const auto reports = sweep(base, RefineConfig{}, SweepAxis::Fnr, values);
  REQUIRE(reports.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(reports[i].fpr == 0.2);
    CHECK(reports[i].fnr == values[i]);
  }
  CHECK(sweep(base, RefineConfig{}, SweepAxis::Fpr, std::vector<double>{}).empty());
}

TEST_CASE("report serialisation") {
  EvalReport r;
  r.polytree = PolytreeSpec{2, 6};
  r.fpr = 0.1;
  r.fnr = 0.2;
  r.auc_original = 0.9;
  r.auc_refined = 0.25;
  r.epochs = 5000;
  r.seed = 3;
  CHECK(report_csv_header() == "r,h,fpr,fnr,auc_original,auc_refined,M,seed");
  CHECK(report_csv_row(r) == "2,6,0.1,0.2,0.9,0.25,5000,3");
  const auto j = report_to_json(r);
  CHECK(j.at("auc_refined") == 0.25);
  CHECK(j.at("M") == 5000);
  CHECK_FALSE(j.contains("mean_epoch_ms"));
}

}  // TEST_SUITE
