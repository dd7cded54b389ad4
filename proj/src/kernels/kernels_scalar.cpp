#include "kernels_impl.hpp"
#include "scalar_math.hpp"

namespace kpirefine::kernels {
namespace {

void sigmoid(std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = detail::sigmoid(x[i]);
}

void exp_affine(std::span<const double> x, double scale, double shift,
                std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = detail::clamped_exp(scale * (x[i] - shift));
  }
}

WeightedResidual weighted_sq_residual(std::span<const double> y,
                                      std::span<const double> s,
                                      std::span<const double> w) {
  WeightedResidual acc{0.0, 0.0};
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = s[i] - y[i];
    acc.weighted_sq_sum += w[i] * d * d;
    acc.weight_sum += w[i];
  }
  return acc;
}

void scaled_residual(std::span<const double> y, std::span<const double> s,
                     std::span<const double> w, double scale,
                     std::span<double> out) {
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = scale * w[i] * (y[i] - s[i]);
}

void sigmoid_chain(std::span<const double> y, std::span<double> g) {
  for (std::size_t i = 0; i < y.size(); ++i) g[i] *= y[i] * (1.0 - y[i]);
}

void descend(std::span<const double> x, std::span<const double> g, double step,
             std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - step * g[i];
}

double squared_norm(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

}  // namespace

const KernelTable& scalar_table() noexcept {
  static const KernelTable table{
      Isa::Scalar,     sigmoid,       exp_affine, weighted_sq_residual,
      scaled_residual, sigmoid_chain, descend,    squared_norm,
  };
  return table;
}

}  // namespace kpirefine::kernels
