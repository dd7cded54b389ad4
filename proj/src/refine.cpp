#include "kpirefine/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "kernels/scalar_math.hpp"
#include "kpirefine/error.hpp"
#include "kpirefine/random.hpp"

namespace kpirefine {
namespace {

// Below this a shared-shift weight sum has lost precision; redo the
// neighbourhood with its own maximum.
constexpr double kWeightSumFloor = std::numeric_limits<double>::min() * 0x1p53;

// Marks a neighbourhood evaluated in the shared exp frame.
constexpr double kSharedFrame = std::numeric_limits<double>::quiet_NaN();

// Halvings before a backtracking search gives up on an iteration.
constexpr int kMaxHalvings = 60;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) raise(ErrorCode::NonFinite, std::string(what) + " is not finite");
}

}  // namespace

ScoreVector::ScoreVector(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] >= 0.0 && values_[i] <= 1.0)) {
      raise(ErrorCode::InvalidArgument,
            "score " + std::to_string(i) + " = " + std::to_string(values_[i]) + " outside [0, 1]");
    }
  }
}

ConfidencePartition::ConfidencePartition(std::size_t node_count,
                                         std::span<const NodeIndex> key,
                                         std::span<const NodeIndex> missing)
    : roles_(node_count, NodeRole::Free) {
  auto assign = [&](std::span<const NodeIndex> set, NodeRole role) {
    for (NodeIndex i : set) {
      if (i >= node_count) {
        raise(ErrorCode::InvalidArgument, "node index " + std::to_string(i) + " out of range");
      }
      if (roles_[i] != NodeRole::Free && roles_[i] != role) {
        raise(ErrorCode::InvalidArgument,
              "node " + std::to_string(i) + " is both a key KPI and missing");
      }
      roles_[i] = role;
    }
  };
  assign(key, NodeRole::Key);
  assign(missing, NodeRole::Missing);
  if (node_count > 0 &&
      std::all_of(roles_.begin(), roles_.end(), [](NodeRole r) { return r == NodeRole::Missing; })) {
    raise(ErrorCode::AllScoresMissing, "every node is missing");
  }
  for (NodeIndex i = 0; i < node_count; ++i) {
    if (roles_[i] == NodeRole::Free) free_.push_back(i);
  }
}

std::vector<NodeIndex> ConfidencePartition::nodes_with(NodeRole role) const {
  std::vector<NodeIndex> out;
  for (NodeIndex i = 0; i < roles_.size(); ++i) {
    if (roles_[i] == role) out.push_back(i);
  }
  return out;
}

void RefineConfig::validate() const {
  auto fail = [](const std::string& m) { raise(ErrorCode::InvalidArgument, m); };
  if (!(alpha_floor > 0.0 && alpha_floor < 1.0)) fail("alpha floor must lie in (0, 1)");
  if (!(penalty_weight > 0.0) || !std::isfinite(penalty_weight)) fail("penalty weight must be > 0");
  if (!(sharpness > 0.0) || !std::isfinite(sharpness)) fail("sharpness must be > 0");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) fail("step size must be > 0");
  if (max_iterations == 0) fail("max iterations must be positive");
  if (!(gradient_tolerance > 0.0)) fail("gradient tolerance must be > 0");
  if (!(max_move > 0.0)) fail("max move must be > 0");
}

RefineConfig RefineConfig::resolved(std::size_t node_count) const {
  RefineConfig out = *this;
  if (units == ParamUnits::PerNode && node_count > 0) {
    const double n = static_cast<double>(node_count);
    out.step_size = step_size * n;
    out.penalty_weight = penalty_weight / n;
    out.gradient_tolerance = gradient_tolerance / n;
  }
  out.units = ParamUnits::Absolute;
  return out;
}

MappedScores map_latent(const LatentPoint& p, const ConfidencePartition& part,
                        double alpha_floor) {
  if (p.z.size() != part.size() || p.eps.size() != part.free_nodes().size()) {
    raise(ErrorCode::DimensionMismatch, "latent point does not match the partition");
  }
  MappedScores out;
  out.y.resize(p.z.size());
  for (std::size_t i = 0; i < p.z.size(); ++i) out.y[i] = detail::sigmoid(p.z[i]);
  out.alpha.resize(p.z.size());
  for (NodeIndex i = 0; i < part.size(); ++i) {
    out.alpha[i] = part.role(i) == NodeRole::Key ? 1.0 : 0.0;
  }
  const auto free = part.free_nodes();
  for (std::size_t k = 0; k < free.size(); ++k) {
    out.alpha[free[k]] = alpha_floor + (1.0 - alpha_floor) * detail::sigmoid(p.eps[k]);
  }
  return out;
}

double smoothmax(std::span<const double> values, double sharpness) {
  if (values.empty()) raise(ErrorCode::EmptyInput, "smoothmax of an empty list");
  const double top = *std::max_element(values.begin(), values.end());
  double num = 0.0;
  double den = 0.0;
  for (double v : values) {
    const double w = detail::clamped_exp(sharpness * (v - top));
    num += v * w;
    den += w;
  }
  return num / den;
}

double fidelity(std::span<const double> y, std::span<const double> alpha,
                std::span<const double> s) {
  if (y.size() != alpha.size() || y.size() != s.size()) {
    raise(ErrorCode::DimensionMismatch, "fidelity inputs differ in length");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += alpha[i] * (s[i] - y[i]) * (s[i] - y[i]);
    den += alpha[i];
  }
  if (!(den > 0.0)) raise(ErrorCode::DegenerateWeights, "confidence weights sum to zero");
  return num / den;
}

double penalty(std::span<const double> y, const CausalityGraph& g, double penalty_weight,
               double sharpness) {
  if (y.size() != g.size()) raise(ErrorCode::DimensionMismatch, "score vector does not match graph");
  std::vector<double> buf;
  double total = 0.0;
  for (NodeIndex i = 0; i < g.size(); ++i) {
    const auto causes = g.causes(i);
    if (causes.empty()) continue;
    buf.clear();
    for (NodeIndex j : causes) buf.push_back(y[j]);
    const double h = std::max(0.0, y[i] - smoothmax(buf, sharpness));
    total += h * h * h;
  }
  return penalty_weight * total;
}

RefineObjective::RefineObjective(const CausalityGraph& g, const ScoreVector& s,
                                 const ConfidencePartition& part, const RefineConfig& cfg,
                                 const kernels::KernelTable& kernels)
    : graph_(g), scores_(s), part_(part), cfg_(cfg.resolved(g.size())), k_(kernels) {
  cfg_.validate();
  const std::size_t n = g.size();
  if (s.size() != n || part.size() != n) {
    raise(ErrorCode::DimensionMismatch,
          "graph has " + std::to_string(n) + " nodes, scores " + std::to_string(s.size()) +
              ", partition " + std::to_string(part.size()));
  }
  for (NodeIndex i = 0; i < n; ++i) {
    if (g.has_causes(i)) internal_.push_back(i);
  }
  y_.resize(n);
  alpha_.resize(n);
  for (NodeIndex i = 0; i < n; ++i) alpha_[i] = part.role(i) == NodeRole::Key ? 1.0 : 0.0;
  sig_eps_.resize(part.free_nodes().size());
  expw_.resize(n);
  soft_max_.resize(internal_.size());
  hinge_.resize(internal_.size());
  weight_sum_.resize(internal_.size());
  local_shift_.resize(internal_.size());
  grad_y_.resize(n);
}

void RefineObjective::check_shape(const LatentPoint& p) const {
  if (p.z.size() != y_.size() || p.eps.size() != sig_eps_.size()) {
    raise(ErrorCode::DimensionMismatch, "latent point does not match the problem");
  }
}

double RefineObjective::evaluate(const LatentPoint& p) {
  check_shape(p);
  k_.sigmoid(p.z, y_);
  k_.sigmoid(p.eps, sig_eps_);
  const auto free = part_.free_nodes();
  const double floor = cfg_.alpha_floor;
  for (std::size_t k = 0; k < free.size(); ++k) {
    alpha_[free[k]] = floor + (1.0 - floor) * sig_eps_[k];
  }

  const auto res = k_.weighted_sq_residual(y_, scores_.values(), alpha_);
  if (!(res.weight_sum > 0.0)) raise(ErrorCode::DegenerateWeights, "confidence weights sum to zero");
  alpha_sum_ = res.weight_sum;
  fidelity_ = res.weighted_sq_sum / res.weight_sum;

  double pen = 0.0;
  if (!internal_.empty()) {
    const double c = cfg_.sharpness;
    const double shift = *std::max_element(y_.begin(), y_.end());
    k_.exp_affine(y_, c, shift, expw_);
    for (std::size_t t = 0; t < internal_.size(); ++t) {
      const NodeIndex i = internal_[t];
      const auto causes = graph_.causes(i);
      double num = 0.0;
      double den = 0.0;
      for (NodeIndex j : causes) {
        num += y_[j] * expw_[j];
        den += expw_[j];
      }
      double local = kSharedFrame;
      if (den < kWeightSumFloor) {
        // Rare: this neighbourhood sits far below the global maximum.
        local = 0.0;
        for (NodeIndex j : causes) local = std::max(local, y_[j]);
        num = den = 0.0;
        for (NodeIndex j : causes) {
          const double w = detail::clamped_exp(c * (y_[j] - local));
          num += y_[j] * w;
          den += w;
        }
      }
      local_shift_[t] = local;
      const double m = num / den;
      const double h = std::max(0.0, y_[i] - m);
      soft_max_[t] = m;
      hinge_[t] = h;
      weight_sum_[t] = den;
      pen += h * h * h;
    }
  }
  return fidelity_ + cfg_.penalty_weight * pen;
}

void RefineObjective::gradient(LatentPoint& out) {
  const std::size_t n = y_.size();
  out.z.resize(n);
  out.eps.resize(sig_eps_.size());

  // d/dy of the fidelity term, then the cubed hinges.
  k_.scaled_residual(y_, scores_.values(), alpha_, 2.0 / alpha_sum_, grad_y_);
  const double c = cfg_.sharpness;
  const double three_mu = 3.0 * cfg_.penalty_weight;
  for (std::size_t t = 0; t < internal_.size(); ++t) {
    const double h = hinge_[t];
    if (h <= 0.0) continue;
    const NodeIndex i = internal_[t];
    const double coef = three_mu * h * h;
    grad_y_[i] += coef;
    const double m = soft_max_[t];
    const double inv_den = 1.0 / weight_sum_[t];
    const double local = local_shift_[t];
    for (NodeIndex k : graph_.causes(i)) {
      const double w = std::isnan(local) ? expw_[k] : detail::clamped_exp(c * (y_[k] - local));
      grad_y_[k] -= coef * w * inv_den * (1.0 + c * (y_[k] - m));
    }
  }
  std::copy(grad_y_.begin(), grad_y_.end(), out.z.begin());
  k_.sigmoid_chain(y_, out.z);

  // Quotient rule: d/da_k [sum a e / sum a] = (e_k - fidelity) / sum a.
  const auto free = part_.free_nodes();
  const auto s = scores_.values();
  const double scale = (1.0 - cfg_.alpha_floor) / alpha_sum_;
  for (std::size_t k = 0; k < free.size(); ++k) {
    const NodeIndex i = free[k];
    const double e = (s[i] - y_[i]) * (s[i] - y_[i]);
    out.eps[k] = (e - fidelity_) * scale * sig_eps_[k] * (1.0 - sig_eps_[k]);
  }
}

double objective(const LatentPoint& p, const ScoreVector& s, const CausalityGraph& g,
                 const ConfidencePartition& part, const RefineConfig& cfg) {
  RefineObjective f(g, s, part, cfg);
  return f.evaluate(p);
}

LatentPoint gradient(const LatentPoint& p, const ScoreVector& s, const CausalityGraph& g,
                     const ConfidencePartition& part, const RefineConfig& cfg) {
  RefineObjective f(g, s, part, cfg);
  f.evaluate(p);
  LatentPoint out;
  f.gradient(out);
  return out;
}

LatentPoint gd_step(const LatentPoint& p, const LatentPoint& grad, double step) {
  if (p.z.size() != grad.z.size() || p.eps.size() != grad.eps.size()) {
    raise(ErrorCode::DimensionMismatch, "gradient shape differs from the point");
  }
  LatentPoint out{std::vector<double>(p.z.size()), std::vector<double>(p.eps.size())};
  for (std::size_t i = 0; i < p.z.size(); ++i) out.z[i] = p.z[i] - step * grad.z[i];
  for (std::size_t i = 0; i < p.eps.size(); ++i) out.eps[i] = p.eps[i] - step * grad.eps[i];
  return out;
}

LatentPoint initial_point(const ConfidencePartition& part, std::uint64_t seed,
                          std::uint64_t stream) {
  auto rng = make_stream(seed, stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  LatentPoint p;
  p.z.resize(part.size());
  for (double& v : p.z) v = normal(rng);
  p.eps.resize(part.free_nodes().size());
  for (double& v : p.eps) v = normal(rng);
  return p;
}

RefineResult refine(const ScoreVector& s, const CausalityGraph& g,
                    const ConfidencePartition& part, const RefineConfig& cfg,
                    std::uint64_t stream) {
  return refine_from(initial_point(part, cfg.seed, stream), s, g, part, cfg);
}

RefineResult refine_from(LatentPoint start, const ScoreVector& s, const CausalityGraph& g,
                         const ConfidencePartition& part, const RefineConfig& config) {
  const auto& k = kernels::active();
  RefineObjective f(g, s, part, config, k);
  const RefineConfig cfg = config.resolved(g.size());

  LatentPoint current = std::move(start);
  LatentPoint trial = current;
  LatentPoint grad;

  RefineResult result;
  double value = f.evaluate(current);
  require_finite(value, "objective");
  f.gradient(grad);
  result.objective_trace.push_back(value);

  auto grad_norm = [&] {
    return std::sqrt(k.squared_norm(grad.z) + k.squared_norm(grad.eps));
  };
  double norm = grad_norm();
  require_finite(norm, "gradient norm");

  while (true) {
    if (norm <= cfg.gradient_tolerance) {
      result.converged = true;
      break;
    }
    if (result.iterations_used == cfg.max_iterations) break;

    double step = cfg.step_size;
    double gmax = 0.0;
    for (double v : grad.z) gmax = std::max(gmax, std::abs(v));
    for (double v : grad.eps) gmax = std::max(gmax, std::abs(v));
    if (gmax * step > cfg.max_move) step = cfg.max_move / gmax;
    double trial_value = 0.0;
    bool accepted = false;
    for (int halvings = 0; halvings <= kMaxHalvings; ++halvings, step *= 0.5) {
      k.descend(current.z, grad.z, step, trial.z);
      k.descend(current.eps, grad.eps, step, trial.eps);
      trial_value = f.evaluate(trial);
      if (!cfg.backtracking || trial_value < value) {
        accepted = true;
        break;
      }
    }
    // No decrease even at a vanishing step: numerically stationary.
    if (!accepted) {
      f.evaluate(current);
      break;
    }
    require_finite(trial_value, "objective");
    std::swap(current, trial);
    value = trial_value;
    f.gradient(grad);
    norm = grad_norm();
    require_finite(norm, "gradient norm");
    result.objective_trace.push_back(value);
    ++result.iterations_used;
  }

  result.y = f.y();
  result.alpha = f.alpha();
  result.final_gradient_norm = norm;
  result.latent = std::move(current);
  return result;
}

std::vector<ConstraintViolation> check_hard_constraints(std::span<const double> y,
                                                        const CausalityGraph& g, double tol) {
  if (y.size() != g.size()) raise(ErrorCode::DimensionMismatch, "score vector does not match graph");
  std::vector<ConstraintViolation> out;
  for (NodeIndex i = 0; i < g.size(); ++i) {
    const auto causes = g.causes(i);
    if (causes.empty()) continue;
    double top = -std::numeric_limits<double>::infinity();
    for (NodeIndex j : causes) top = std::max(top, y[j]);
    if (y[i] > top + tol) out.push_back({i, y[i] - top});
  }
  return out;
}

}  // namespace kpirefine
