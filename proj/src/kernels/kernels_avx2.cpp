// AVX2 + FMA variants, 4 doubles per lane. Compiled with -mavx2 -mfma; only
// reached after the dispatcher has confirmed CPU support.

#include <immintrin.h>

#include "kernels_impl.hpp"
#include "scalar_math.hpp"

namespace kpirefine::kernels {
namespace {

constexpr std::size_t kLane = 4;

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

// exp(x) for x in [-708, 708]: x = n ln2 + r with |r| <= ln2/2, then a
// degree-13 Taylor polynomial in r (truncation < 1e-17 relative) scaled by 2^n.
inline __m256d exp_pd(__m256d x) {
  const __m256d limit = _mm256_set1_pd(detail::kExpArgLimit);
  x = _mm256_min_pd(limit, x);
  x = _mm256_max_pd(_mm256_sub_pd(_mm256_setzero_pd(), limit), x);

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125e-1), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212e-6), r);

  static constexpr double kInvFactorial[] = {
      1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
      1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,     1.0 / 720.0,
      1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,        1.0 / 2.0,
      1.0,                1.0,
  };
  __m256d p = _mm256_set1_pd(kInvFactorial[0]);
  for (std::size_t k = 1; k < std::size(kInvFactorial); ++k) {
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kInvFactorial[k]));
  }

  const __m256i biased = _mm256_add_epi64(_mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n)),
                                          _mm256_set1_epi64x(1023));
  const __m256d scale = _mm256_castsi256_pd(_mm256_slli_epi64(biased, 52));
  return _mm256_mul_pd(p, scale);
}

void sigmoid(std::span<const double> x, std::span<double> out) {
  const std::size_t n = x.size();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  std::size_t i = 0;
  for (; i + kLane <= n; i += kLane) {
    const __m256d v = _mm256_loadu_pd(x.data() + i);
    const __m256d neg_abs = _mm256_or_pd(v, sign_mask);
    const __m256d e = exp_pd(neg_abs);
    const __m256d r = _mm256_div_pd(one, _mm256_add_pd(one, e));
    const __m256d nonneg = _mm256_cmp_pd(v, _mm256_setzero_pd(), _CMP_GE_OQ);
    _mm256_storeu_pd(out.data() + i, _mm256_blendv_pd(_mm256_mul_pd(e, r), r, nonneg));
  }
  for (; i < n; ++i) out[i] = detail::sigmoid(x[i]);
}

void exp_affine(std::span<const double> x, double scale, double shift,
                std::span<double> out) {
  const std::size_t n = x.size();
  const __m256d sc = _mm256_set1_pd(scale);
  const __m256d sh = _mm256_set1_pd(shift);
  std::size_t i = 0;
  for (; i + kLane <= n; i += kLane) {
    const __m256d v = _mm256_sub_pd(_mm256_loadu_pd(x.data() + i), sh);
    _mm256_storeu_pd(out.data() + i, exp_pd(_mm256_mul_pd(sc, v)));
  }
  for (; i < n; ++i) out[i] = detail::clamped_exp(scale * (x[i] - shift));
}

WeightedResidual weighted_sq_residual(std::span<const double> y,
                                      std::span<const double> s,
                                      std::span<const double> w) {
  const std::size_t n = y.size();
  __m256d sq = _mm256_setzero_pd();
  __m256d ws = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLane <= n; i += kLane) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(s.data() + i), _mm256_loadu_pd(y.data() + i));
    const __m256d wv = _mm256_loadu_pd(w.data() + i);
    sq = _mm256_fmadd_pd(_mm256_mul_pd(wv, d), d, sq);
    ws = _mm256_add_pd(ws, wv);
  }
  WeightedResidual acc{hsum(sq), hsum(ws)};
  for (; i < n; ++i) {
    const double d = s[i] - y[i];
    acc.weighted_sq_sum += w[i] * d * d;
    acc.weight_sum += w[i];
  }
  return acc;
}

void scaled_residual(std::span<const double> y, std::span<const double> s,
                     std::span<const double> w, double scale,
                     std::span<double> out) {
  const std::size_t n = y.size();
  const __m256d sc = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + kLane <= n; i += kLane) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(y.data() + i), _mm256_loadu_pd(s.data() + i));
    const __m256d wv = _mm256_mul_pd(sc, _mm256_loadu_pd(w.data() + i));
    _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(wv, d));
  }
  for (; i < n; ++i) out[i] = scale * w[i] * (y[i] - s[i]);
}

void sigmoid_chain(std::span<const double> y, std::span<double> g) {
  const std::size_t n = y.size();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + kLane <= n; i += kLane) {
    const __m256d yv = _mm256_loadu_pd(y.data() + i);
    const __m256d d = _mm256_mul_pd(yv, _mm256_sub_pd(one, yv));
    _mm256_storeu_pd(g.data() + i, _mm256_mul_pd(_mm256_loadu_pd(g.data() + i), d));
  }
  for (; i < n; ++i) g[i] *= y[i] * (1.0 - y[i]);
}

void descend(std::span<const double> x, std::span<const double> g, double step,
             std::span<double> out) {
  const std::size_t n = x.size();
  const __m256d st = _mm256_set1_pd(step);
  std::size_t i = 0;
  for (; i + kLane <= n; i += kLane) {
    const __m256d r = _mm256_fnmadd_pd(st, _mm256_loadu_pd(g.data() + i), _mm256_loadu_pd(x.data() + i));
    _mm256_storeu_pd(out.data() + i, r);
  }
  for (; i < n; ++i) out[i] = x[i] - step * g[i];
}

double squared_norm(std::span<const double> x) {
  const std::size_t n = x.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLane <= n; i += kLane) {
    const __m256d v = _mm256_loadu_pd(x.data() + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) total += x[i] * x[i];
  return total;
}

}  // namespace

namespace impl {

const KernelTable& avx2_table_impl() noexcept {
  static const KernelTable table{
      Isa::Avx2,       sigmoid,       exp_affine, weighted_sq_residual,
      scaled_residual, sigmoid_chain, descend,    squared_norm,
  };
  return table;
}

}  // namespace impl
}  // namespace kpirefine::kernels
