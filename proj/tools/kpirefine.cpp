// kpirefine: refine detector scores against a causality graph, run synthetic
// experiments and check the objective's gradient.
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kpirefine/error.hpp"
#include "kpirefine/format.hpp"
#include "kpirefine/gradcheck.hpp"
#include "kpirefine/graph.hpp"
#include "kpirefine/graph_io.hpp"
#include "kpirefine/metrics.hpp"
#include "kpirefine/parallel.hpp"
#include "kpirefine/refine.hpp"
#include "kpirefine/scenario.hpp"
#include "kpirefine/scores_csv.hpp"

namespace {

using namespace kpirefine;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDomain = 2;

struct SolverFlags {
  RefineConfig cfg;
  bool no_backtracking = false;
  std::string units = "per-node";

  void add_to(CLI::App& app) {
    app.add_option("--alpha-floor", cfg.alpha_floor, "Lower bound on free confidences")
        ->capture_default_str();
    app.add_option("--mu", cfg.penalty_weight, "Penalty weight")->capture_default_str();
    app.add_option("--c", cfg.sharpness, "Smooth maximum sharpness")->capture_default_str();
    app.add_option("--step-size", cfg.step_size, "Gradient step")->capture_default_str();
    app.add_option("--max-iters", cfg.max_iterations, "Iteration budget per epoch")
        ->capture_default_str();
    app.add_option("--grad-tol", cfg.gradient_tolerance, "Stop when the gradient norm is below")
        ->capture_default_str();
    app.add_flag("--no-backtracking", no_backtracking, "Take every step unchecked");
    app.add_option("--max-move", cfg.max_move, "Largest latent change per step, in logits")
        ->capture_default_str();
    app.add_option("--units", units, "How --mu, --step-size and --grad-tol are read")
        ->check(CLI::IsMember({"per-node", "absolute"}))
        ->capture_default_str();
  }

  RefineConfig resolve() const {
    RefineConfig out = cfg;
    out.backtracking = !no_backtracking;
    out.units = units == "absolute" ? ParamUnits::Absolute : ParamUnits::PerNode;
    out.validate();
    return out;
  }
};

struct ScenarioFlags {
  std::optional<std::uint32_t> r;
  std::optional<std::uint32_t> h;
  std::string graph;
  double fpr = 0.1;
  double fnr = 0.1;
  std::uint32_t epochs = 5000;
  std::optional<std::size_t> path_length;
  double missing_rate = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t refine_seed = 0;
  unsigned parallel = 1;

  void add_to(CLI::App& app) {
    app.add_option("--r", r, "Polytree branching factor");
    app.add_option("--h", h, "Polytree height");
    app.add_option("--graph", graph, "Graph JSON instead of a polytree");
    app.add_option("--fpr", fpr, "False positive rate")->capture_default_str();
    app.add_option("--fnr", fnr, "False negative rate")->capture_default_str();
    app.add_option("--epochs", epochs, "Number of epochs M")->capture_default_str();
    app.add_option("--path-length", path_length,
                   "Edges on the anomalous path (default: polytree height)");
    app.add_option("--missing-rate", missing_rate, "Probability of a missing reading")
        ->capture_default_str();
    app.add_option("--seed", seed, "Scenario seed")->capture_default_str();
    app.add_option("--refine-seed", refine_seed, "Seed for the solver's starting points")
        ->capture_default_str();
    app.add_option("--parallel", parallel, "Worker threads (0 = all cores)")
        ->capture_default_str();
  }

  ScenarioSpec build() const {
    ScenarioSpec spec;
    if (!graph.empty()) {
      if (r || h) raise(ErrorCode::InvalidArgument, "give either --graph or --r/--h, not both");
      if (!path_length) raise(ErrorCode::InvalidArgument, "--path-length is required with --graph");
      GraphFile file = load_graph_json(graph);
      spec.graph = std::move(file.graph);
      spec.key_kpis = std::move(file.key_kpis);
      spec.path_length = *path_length;
    } else {
      if (!r || !h) raise(ErrorCode::InvalidArgument, "either --graph or both --r and --h are required");
      PolytreeSpec tree{*r, *h};
      tree.validate();
      spec.graph = make_polytree(tree);
      spec.polytree = tree;
      spec.path_length = path_length.value_or(tree.height);
    }
    spec.fpr = fpr;
    spec.fnr = fnr;
    spec.epochs = epochs;
    spec.missing_rate = missing_rate;
    spec.seed = seed;
    if (epochs == 0) raise(ErrorCode::InvalidArgument, "--epochs must be positive");
    spec.validate();
    return spec;
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::Io, "cannot open " + path + " for writing");
  out << content;
  if (!out.flush()) raise(ErrorCode::Io, "failed writing " + path);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

int cmd_refine(const std::string& graph_path, const std::string& scores_path,
               const std::string& out_path, const SolverFlags& solver, std::uint64_t seed,
               unsigned threads) {
  RefineConfig cfg = solver.resolve();
  cfg.seed = seed;
  const GraphFile file = load_graph_json(graph_path);
  const CausalityGraph& g = file.graph;

  std::ifstream in(scores_path, std::ios::binary);
  if (!in) raise(ErrorCode::Io, "cannot open " + scores_path);
  const std::vector<ScoreRow> rows = read_scores_csv(in, g, scores_path);

  // Validate every row before doing any work so errors name the line.
  std::vector<ConfidencePartition> parts;
  parts.reserve(rows.size());
  for (const ScoreRow& row : rows) {
    try {
      parts.emplace_back(g.size(), file.key_kpis, row.missing);
    } catch (const Error& e) {
      raise(e.code(), scores_path + ":" + std::to_string(row.line) + ": " + e.message());
    }
  }

  std::vector<RefinedEpoch> epochs(rows.size());
  std::vector<double> elapsed_ms(rows.size());
  parallel_for(rows.size(), threads, [&](std::size_t m) {
    const auto start = std::chrono::steady_clock::now();
    const ScoreVector s(rows[m].scores);
    epochs[m].raw = rows[m].scores;
    epochs[m].missing = rows[m].missing;
    epochs[m].result = refine(s, g, parts[m], cfg, m);
    elapsed_ms[m] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  });

  std::ostringstream csv;
  write_refined_csv(csv, g, epochs);
  write_file(out_path, csv.str());

  for (std::size_t m = 0; m < epochs.size(); ++m) {
    const RefineResult& r = epochs[m].result;
    std::printf("epoch %zu: objective %s, iterations %u%s, %.2f ms\n", m,
                format_decimal(r.objective_trace.back()).c_str(), r.iterations_used,
                r.converged ? "" : " (not converged)", elapsed_ms[m]);
  }
  std::printf("wrote %zu epochs to %s\n", epochs.size(), out_path.c_str());
  return kExitOk;
}

int cmd_simulate(const ScenarioFlags& flags, const SolverFlags& solver, const std::string& out_path,
                 const std::string& scenario_path) {
  const ScenarioSpec spec = flags.build();
  if (!scenario_path.empty()) {
    const std::vector<EpochRecord> records = generate(spec);
    std::ostringstream csv;
    write_scenario_csv(csv, spec, records);
    write_file(scenario_path, csv.str());
    write_file(scenario_path + ".json", scenario_to_json(spec).dump(2) + "\n");
  }
  RefineConfig cfg = solver.resolve();
  cfg.seed = flags.refine_seed;
  const EvalReport report = run_experiment(spec, cfg, ExperimentOptions{flags.parallel});
  if (!out_path.empty()) {
    if (ends_with(out_path, ".csv")) {
      write_file(out_path, report_csv_header() + "\n" + report_csv_row(report) + "\n");
    } else {
      write_file(out_path, report_to_json(report).dump(2) + "\n");
    }
  }
  std::printf("auc_original %.6f\nauc_refined  %.6f\n", report.auc_original, report.auc_refined);
  std::printf("epochs %u, nodes %zu, mean iterations %.1f, converged %.1f%%, %.2f ms per epoch\n",
              report.epochs, spec.graph.size(), report.mean_iterations,
              100.0 * report.converged_fraction, report.mean_epoch_ms);
  return kExitOk;
}

int cmd_sweep(const ScenarioFlags& flags, const SolverFlags& solver, const std::string& axis_name,
              const std::vector<double>& values, const std::string& out_path) {
  const ScenarioSpec base = flags.build();
  RefineConfig cfg = solver.resolve();
  cfg.seed = flags.refine_seed;
  const SweepAxis axis = axis_name == "fnr" ? SweepAxis::Fnr : SweepAxis::Fpr;
  const std::vector<EvalReport> reports =
      sweep(base, cfg, axis, values, ExperimentOptions{flags.parallel});
  std::string csv = report_csv_header() + "\n";
  for (const EvalReport& r : reports) {
    csv += report_csv_row(r) + "\n";
    std::printf("fpr %.3f fnr %.3f: auc_original %.6f auc_refined %.6f\n", r.fpr, r.fnr,
                r.auc_original, r.auc_refined);
  }
  write_file(out_path, csv);
  return kExitOk;
}

int cmd_gradcheck(const GradcheckOptions& options) {
  const GradcheckReport report = run_gradcheck(options);
  std::printf("trials %u, coordinates %llu, worst relative error %.3e, tolerance %.1e\n",
              report.trials, static_cast<unsigned long long>(report.coordinates),
              report.worst_relative_error, options.tolerance);
  if (!report.passed()) {
    std::printf("FAIL: %u of %u trials above tolerance\n", report.failed_trials, report.trials);
    return kExitUsage;
  }
  std::printf("PASS\n");
  return kExitOk;
}

int cmd_polytree(std::uint32_t r, std::uint32_t h, const std::string& out_path) {
  const PolytreeSpec tree{r, h};
  tree.validate();
  const CausalityGraph g = make_polytree(tree);
  save_graph_json(out_path, g);
  const LeafDensity d = leaf_density(tree);
  std::printf("N=%zu edges=%zu leaves=%llu density %llu/%llu (%.4f)\n", g.size(), g.edges().size(),
              static_cast<unsigned long long>(d.leaves), static_cast<unsigned long long>(d.leaves),
              static_cast<unsigned long long>(d.nodes), d.value());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Refine anomaly scores with a causality graph"};
  // -h is taken by --h (polytree height).
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  // refine
  auto* refine_cmd = app.add_subcommand("refine", "Refine a scores CSV against a graph");
  std::string graph_path, scores_path, refine_out;
  std::uint64_t refine_seed = 0;
  unsigned refine_threads = 1;
  SolverFlags refine_solver;
  refine_cmd->add_option("--graph", graph_path, "Graph JSON")->required();
  refine_cmd->add_option("--scores", scores_path, "Scores CSV")->required();
  refine_cmd->add_option("--out", refine_out, "Refined scores CSV")->required();
  refine_cmd->add_option("--seed", refine_seed, "Seed for starting points")->capture_default_str();
  refine_cmd->add_option("--parallel", refine_threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
  refine_solver.add_to(*refine_cmd);

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "Run a synthetic experiment");
  ScenarioFlags sim_flags;
  SolverFlags sim_solver;
  std::string sim_out;
  sim_flags.add_to(*simulate_cmd);
  sim_solver.add_to(*simulate_cmd);
  std::string sim_scenario_out;
  simulate_cmd->add_option("--out", sim_out, "Report file (.csv or JSON)");
  simulate_cmd->add_option("--scenario-out", sim_scenario_out,
                           "Also write the generated labels and raw scores (CSV plus .json sidecar)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep FPR or FNR with the other rate fixed");
  ScenarioFlags sweep_flags;
  SolverFlags sweep_solver;
  std::string sweep_axis = "fpr", sweep_out;
  std::vector<double> sweep_values{0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
  sweep_flags.add_to(*sweep_cmd);
  sweep_solver.add_to(*sweep_cmd);
  sweep_cmd->add_option("--axis", sweep_axis, "Rate to vary")
      ->check(CLI::IsMember({"fpr", "fnr"}))
      ->capture_default_str();
  sweep_cmd->add_option("--values", sweep_values, "Grid of rates")->delimiter(',');
  sweep_cmd->add_option("--out", sweep_out, "Results CSV")->required();

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare the gradient with finite differences");
  GradcheckOptions grad_opts;
  grad_cmd->add_option("--trials", grad_opts.trials, "Random instances")->capture_default_str();
  grad_cmd->add_option("--max-n", grad_opts.max_nodes, "Largest graph")->capture_default_str();
  grad_cmd->add_option("--tolerance", grad_opts.tolerance, "Largest relative error")
      ->capture_default_str();
  grad_cmd->add_option("--step", grad_opts.step, "Difference half-width")->capture_default_str();
  grad_cmd->add_option("--seed", grad_opts.seed, "Instance seed")->capture_default_str();

  // polytree
  auto* tree_cmd = app.add_subcommand("polytree", "Write a balanced polytree as graph JSON");
  std::int64_t tree_r = 2, tree_h = 0;
  std::string tree_out;
  tree_cmd->add_option("--r", tree_r, "Branching factor")->required();
  tree_cmd->add_option("--h", tree_h, "Height")->required();
  tree_cmd->add_option("--out", tree_out, "Graph JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*refine_cmd) {
      return cmd_refine(graph_path, scores_path, refine_out, refine_solver, refine_seed,
                        refine_threads);
    }
    if (*simulate_cmd) return cmd_simulate(sim_flags, sim_solver, sim_out, sim_scenario_out);
    if (*sweep_cmd) return cmd_sweep(sweep_flags, sweep_solver, sweep_axis, sweep_values, sweep_out);
    if (*grad_cmd) return cmd_gradcheck(grad_opts);
    if (*tree_cmd) {
      if (tree_r < 1 || tree_h < 0 || tree_r > UINT32_MAX || tree_h > UINT32_MAX) {
        raise(ErrorCode::InvalidArgument, "need r >= 1 and h >= 0");
      }
      return cmd_polytree(static_cast<std::uint32_t>(tree_r), static_cast<std::uint32_t>(tree_h),
                          tree_out);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "kpirefine: %s\n", e.what());
    return e.code() == ErrorCode::AllScoresMissing ? kExitDomain : kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "kpirefine: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
