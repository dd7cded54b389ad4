#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense vector kernels behind the refinement objective. Every kernel has a
// portable scalar reference and, where the toolchain allows, an AVX2+FMA
// variant; the variant is picked once at runtime from CPUID and can be
// overridden (tests, benchmarking, reproducibility across machines).
//
// Variants agree to within a few ulp but are not bit-identical: reductions
// sum in a different order and exp() uses a polynomial on AVX2. Results are
// bit-reproducible for a fixed variant.
namespace kpirefine::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa) noexcept;

struct WeightedResidual {
  double weighted_sq_sum;  // sum_i w_i (s_i - y_i)^2
  double weight_sum;       // sum_i w_i
};

struct KernelTable {
  Isa isa;

  // out_i = 1 / (1 + exp(-x_i)), overflow-safe in both tails.
  void (*sigmoid)(std::span<const double> x, std::span<double> out);
  // out_i = exp(scale * (x_i - shift)), exponent clamped to [-708, 708].
  void (*exp_affine)(std::span<const double> x, double scale, double shift,
                     std::span<double> out);
  WeightedResidual (*weighted_sq_residual)(std::span<const double> y,
                                           std::span<const double> s,
                                           std::span<const double> w);
  // out_i = scale * w_i * (y_i - s_i)
  void (*scaled_residual)(std::span<const double> y, std::span<const double> s,
                          std::span<const double> w, double scale,
                          std::span<double> out);
  // g_i *= y_i * (1 - y_i)
  void (*sigmoid_chain)(std::span<const double> y, std::span<double> g);
  // out_i = x_i - step * g_i
  void (*descend)(std::span<const double> x, std::span<const double> g,
                  double step, std::span<double> out);
  double (*squared_norm)(std::span<const double> x);
};

const KernelTable& scalar_table() noexcept;
// nullptr when the AVX2 variant was not compiled in.
const KernelTable* avx2_table() noexcept;

bool is_supported(Isa isa) noexcept;

// Table used by the solver. Defaults to the best supported variant; the
// environment variable KPIREFINE_ISA=scalar|avx2 overrides at start-up.
const KernelTable& active() noexcept;

// Throws Error(InvalidArgument) if `isa` is not supported on this CPU/build.
void set_active(Isa isa);

std::span<const Isa> supported();

}  // namespace kpirefine::kernels
