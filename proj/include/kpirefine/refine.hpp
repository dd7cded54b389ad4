#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "kpirefine/graph.hpp"
#include "kpirefine/kernels.hpp"

namespace kpirefine {

// Raw detector output for one epoch, each entry in [0, 1].
class ScoreVector {
 public:
  ScoreVector() = default;
  explicit ScoreVector(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

 private:
  std::vector<double> values_;
};

enum class NodeRole : std::uint8_t { Free, Key, Missing };

// Splits the nodes into key KPIs (confidence pinned to 1), missing KPIs
// (pinned to 0) and free nodes whose confidence is optimised.
class ConfidencePartition {
 public:
  // Throws InvalidArgument on out-of-range or overlapping sets and
  // AllScoresMissing when every node is missing.
  ConfidencePartition(std::size_t node_count, std::span<const NodeIndex> key,
                      std::span<const NodeIndex> missing);

  static ConfidencePartition all_free(std::size_t node_count) {
    return ConfidencePartition(node_count, {}, {});
  }

  std::size_t size() const noexcept { return roles_.size(); }
  NodeRole role(NodeIndex i) const noexcept { return roles_[i]; }
  std::span<const NodeIndex> free_nodes() const noexcept { return free_; }
  std::vector<NodeIndex> nodes_with(NodeRole role) const;

 private:
  std::vector<NodeRole> roles_;
  std::vector<NodeIndex> free_;
};

// How step_size, penalty_weight and gradient_tolerance are read.
//   PerNode:  per-node quantities; with N nodes the solver uses
//             step N * step_size, penalty N^-1 * penalty_weight and
//             tolerance N^-1 * gradient_tolerance. This is plain gradient
//             descent on N times the objective, whose fidelity term then
//             has O(1) gradients regardless of graph size.
//   Absolute: used as given.
enum class ParamUnits : std::uint8_t { PerNode, Absolute };

struct RefineConfig {
  double alpha_floor = 0.2;      // lower bound on free confidences, in (0, 1)
  double penalty_weight = 0.03;  // mu
  double sharpness = 10.0;       // c in the smooth maximum
  double step_size = 3.0;        // gamma: initial step of every iteration
  std::uint32_t max_iterations = 5000;
  double gradient_tolerance = 1e-4;
  bool backtracking = true;
  // Largest change of any latent coordinate in one step, in logits; the step
  // is shortened to respect it. Infinity disables the cap.
  double max_move = 2.0;
  ParamUnits units = ParamUnits::PerNode;
  std::uint64_t seed = 0;

  void validate() const;
  // Equivalent Absolute config for a graph with node_count nodes.
  RefineConfig resolved(std::size_t node_count) const;
};

// Unconstrained variables: scores are sigmoid(z), free confidences are
// alpha_floor + (1 - alpha_floor) * sigmoid(eps). `eps` is indexed like
// ConfidencePartition::free_nodes().
struct LatentPoint {
  std::vector<double> z;
  std::vector<double> eps;
};

struct MappedScores {
  std::vector<double> y;
  std::vector<double> alpha;
};

struct RefineResult {
  std::vector<double> y;
  std::vector<double> alpha;
  std::vector<double> objective_trace;  // initial value, then one per accepted step
  double final_gradient_norm = 0.0;
  std::uint32_t iterations_used = 0;
  bool converged = false;
  LatentPoint latent;
};

MappedScores map_latent(const LatentPoint& p, const ConfidencePartition& part,
                        double alpha_floor);

// Exponentially weighted average sum v e^{c v} / sum e^{c v}, evaluated with
// the maximum subtracted. Throws EmptyInput.
double smoothmax(std::span<const double> values, double sharpness);

// sum a (s - y)^2 / sum a. Throws DegenerateWeights when sum a == 0.
double fidelity(std::span<const double> y, std::span<const double> alpha,
                std::span<const double> s);

// mu * sum over nodes with causes of max(0, y_i - smoothmax(y_causes))^3.
double penalty(std::span<const double> y, const CausalityGraph& g,
               double penalty_weight, double sharpness);

// Penalised objective over the latent variables with its analytic gradient.
// Holds scratch buffers, so one instance must not be shared across threads.
class RefineObjective {
 public:
  RefineObjective(const CausalityGraph& g, const ScoreVector& s,
                  const ConfidencePartition& part, const RefineConfig& cfg,
                  const kernels::KernelTable& kernels = kernels::active());

  // Evaluates at p and caches intermediate terms for gradient().
  double evaluate(const LatentPoint& p);
  // Gradient at the point passed to the most recent evaluate().
  void gradient(LatentPoint& out);

  const std::vector<double>& y() const noexcept { return y_; }
  const std::vector<double>& alpha() const noexcept { return alpha_; }
  std::size_t free_count() const noexcept { return part_.free_nodes().size(); }
  std::size_t node_count() const noexcept { return y_.size(); }

 private:
  void check_shape(const LatentPoint& p) const;

  const CausalityGraph& graph_;
  const ScoreVector& scores_;
  const ConfidencePartition& part_;
  RefineConfig cfg_;
  const kernels::KernelTable& k_;

  std::vector<NodeIndex> internal_;  // nodes with a nonempty neighbour set
  std::vector<double> y_;
  std::vector<double> alpha_;
  std::vector<double> sig_eps_;
  std::vector<double> expw_;         // exp(c (y - shift)), shared by all neighbourhoods
  std::vector<double> soft_max_;     // per entry of internal_
  std::vector<double> hinge_;
  std::vector<double> weight_sum_;   // per entry of internal_: sum of expw_ over causes
  std::vector<double> local_shift_;  // NaN unless the neighbourhood fell back to its own max
  std::vector<double> grad_y_;
  double fidelity_ = 0.0;
  double alpha_sum_ = 0.0;
};

double objective(const LatentPoint& p, const ScoreVector& s, const CausalityGraph& g,
                 const ConfidencePartition& part, const RefineConfig& cfg);

LatentPoint gradient(const LatentPoint& p, const ScoreVector& s, const CausalityGraph& g,
                     const ConfidencePartition& part, const RefineConfig& cfg);

LatentPoint gd_step(const LatentPoint& p, const LatentPoint& grad, double step);

// Standard-normal draws for z (all nodes, ascending) then eps (free nodes,
// ascending) from stream (seed, stream).
LatentPoint initial_point(const ConfidencePartition& part, std::uint64_t seed,
                          std::uint64_t stream);

// Gradient descent from initial_point(part, cfg.seed, stream).
RefineResult refine(const ScoreVector& s, const CausalityGraph& g,
                    const ConfidencePartition& part, const RefineConfig& cfg,
                    std::uint64_t stream = 0);

RefineResult refine_from(LatentPoint start, const ScoreVector& s, const CausalityGraph& g,
                         const ConfidencePartition& part, const RefineConfig& cfg);

struct ConstraintViolation {
  NodeIndex node;
  double margin;  // y_i - max over causes
};

// Nodes with causes whose score exceeds the exact maximum of their causes by
// more than tol.
std::vector<ConstraintViolation> check_hard_constraints(std::span<const double> y,
                                                        const CausalityGraph& g,
                                                        double tol);

}  // namespace kpirefine
