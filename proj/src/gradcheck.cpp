#include "kpirefine/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "kpirefine/error.hpp"
#include "kpirefine/random.hpp"
#include "kpirefine/refine.hpp"

namespace kpirefine {
namespace {

constexpr double kRelativeFloor = 1e-3;

struct Instance {
  CausalityGraph graph;
  ScoreVector scores;
  ConfidencePartition partition;
  RefineConfig config;
  LatentPoint point;
};

Instance random_instance(std::mt19937_64& rng, std::uint32_t max_nodes) {
  std::uniform_int_distribution<std::uint32_t> size_dist(1, max_nodes);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::uint32_t n = size_dist(rng);

  // Random topological order, then forward edges only.
  std::vector<NodeIndex> order(n);
  for (NodeIndex i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const double density = 0.05 + 0.35 * unit(rng);
  std::vector<Edge> edges;
  for (std::uint32_t a = 0; a < n; ++a) {
    for (std::uint32_t b = a + 1; b < n; ++b) {
      if (unit(rng) < density) edges.push_back({order[a], order[b]});
    }
  }
  std::vector<std::string> names(n);
  for (NodeIndex i = 0; i < n; ++i) names[i] = "v" + std::to_string(i);

  std::vector<NodeIndex> key, missing;
  for (NodeIndex i = 0; i < n; ++i) {
    const double u = unit(rng);
    if (u < 0.15) {
      key.push_back(i);
    } else if (u < 0.3) {
      missing.push_back(i);
    }
  }
  if (missing.size() == n) missing.pop_back();

  std::vector<double> s(n);
  const bool binary = unit(rng) < 0.5;
  for (double& v : s) v = binary ? (unit(rng) < 0.5 ? 0.0 : 1.0) : unit(rng);

  RefineConfig cfg;
  cfg.units = ParamUnits::Absolute;
  cfg.alpha_floor = 0.05 + 0.5 * unit(rng);
  cfg.penalty_weight = std::pow(10.0, -1.0 + 3.0 * unit(rng));
  cfg.sharpness = 5.0 + 10.0 * unit(rng);

  ConfidencePartition part(n, key, missing);
  std::normal_distribution<double> normal(0.0, 1.5);
  LatentPoint p;
  p.z.resize(n);
  for (double& v : p.z) v = normal(rng);
  p.eps.resize(part.free_nodes().size());
  for (double& v : p.eps) v = normal(rng);

  return {build_graph(std::move(names), std::move(edges)), ScoreVector(std::move(s)),
          std::move(part), cfg, std::move(p)};
}

}  // namespace

void GradcheckOptions::validate() const {
  if (trials == 0) raise(ErrorCode::InvalidArgument, "trials must be >= 1");
  if (max_nodes == 0) raise(ErrorCode::InvalidArgument, "max nodes must be >= 1");
  if (!(tolerance > 0.0)) raise(ErrorCode::InvalidArgument, "tolerance must be > 0");
  if (!(step > 0.0) || !std::isfinite(step)) raise(ErrorCode::InvalidArgument, "step must be > 0");
}

double gradient_relative_error(double analytic, double numeric, double objective_value) {
  const double floor = kRelativeFloor * std::max(1.0, std::abs(objective_value));
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  options.validate();
  GradcheckReport report;
  report.trials = options.trials;
  for (std::uint32_t t = 0; t < options.trials; ++t) {
    auto rng = make_stream(options.seed, t);
    Instance inst = random_instance(rng, options.max_nodes);
    RefineObjective f(inst.graph, inst.scores, inst.partition, inst.config);
    const double value = f.evaluate(inst.point);
    LatentPoint analytic;
    f.gradient(analytic);

    double worst = 0.0;
    LatentPoint probe = inst.point;
    auto check = [&](std::vector<double>& coords, const std::vector<double>& grad) {
      for (std::size_t i = 0; i < coords.size(); ++i) {
        const double x = coords[i];
        coords[i] = x + options.step;
        const double up = f.evaluate(probe);
        coords[i] = x - options.step;
        const double down = f.evaluate(probe);
        coords[i] = x;
        const double numeric = (up - down) / (2.0 * options.step);
        worst = std::max(worst, gradient_relative_error(grad[i], numeric, value));
        ++report.coordinates;
      }
    };
    check(probe.z, analytic.z);
    check(probe.eps, analytic.eps);
    report.worst_relative_error = std::max(report.worst_relative_error, worst);
    if (!(worst < options.tolerance)) ++report.failed_trials;
  }
  return report;
}

}  // namespace kpirefine
