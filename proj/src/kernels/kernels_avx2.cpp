// Compiled with -mavx2 -mfma. Nothing here may run before the dispatcher has
// confirmed CPU support.

#include "wshift/kernels.hpp"

#include <immintrin.h>

#include <algorithm>

namespace wshift::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

double weighted_sq_dev_avx2(std::span<const double> x, std::span<const double> q,
                            std::span<const double> w) {
  const std::size_t n = x.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(q.data() + i));
    const __m256d d1 =
        _mm256_sub_pd(_mm256_loadu_pd(x.data() + i + 4), _mm256_loadu_pd(q.data() + i + 4));
    acc0 = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w.data() + i), d0), d0, acc0);
    acc1 = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w.data() + i + 4), d1), d1, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(q.data() + i));
    acc0 = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w.data() + i), d), d, acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = x[i] - q[i];
    acc += w[i] * d * d;
  }
  return acc;
}

BridgeSums bridge_sums_avx2(std::span<const double> walk, double endpoint,
                            std::span<const double> u, std::span<const double> quad_w,
                            std::span<const double> cross_w) {
  const std::size_t n = walk.size();
  const __m256d e = _mm256_set1_pd(endpoint);
  __m256d q0 = _mm256_setzero_pd(), q1 = _mm256_setzero_pd();
  __m256d c0 = _mm256_setzero_pd(), c1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    const __m256d b0 =
        _mm256_fnmadd_pd(_mm256_loadu_pd(u.data() + k), e, _mm256_loadu_pd(walk.data() + k));
    const __m256d b1 = _mm256_fnmadd_pd(_mm256_loadu_pd(u.data() + k + 4), e,
                                        _mm256_loadu_pd(walk.data() + k + 4));
    q0 = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(quad_w.data() + k), b0), b0, q0);
    q1 = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(quad_w.data() + k + 4), b1), b1, q1);
    c0 = _mm256_fmadd_pd(_mm256_loadu_pd(cross_w.data() + k), b0, c0);
    c1 = _mm256_fmadd_pd(_mm256_loadu_pd(cross_w.data() + k + 4), b1, c1);
  }
  BridgeSums s{hsum(_mm256_add_pd(q0, q1)), hsum(_mm256_add_pd(c0, c1))};
  for (; k < n; ++k) {
    const double b = walk[k] - u[k] * endpoint;
    s.quadratic += quad_w[k] * b * b;
    s.cross += cross_w[k] * b;
  }
  return s;
}

double ks_sup_avx2(std::span<const double> c) {
  const std::size_t n = c.size();
  const __m256d nn = _mm256_set1_pd(static_cast<double>(n));
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d four = _mm256_set1_pd(4.0);
  __m256d idx = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  __m256d best = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(c.data() + i);
    const __m256d lo = _mm256_div_pd(idx, nn);
    const __m256d hi = _mm256_div_pd(_mm256_add_pd(idx, one), nn);
    best = _mm256_max_pd(best, _mm256_max_pd(_mm256_sub_pd(hi, v), _mm256_sub_pd(v, lo)));
    idx = _mm256_add_pd(idx, four);
  }
  double m = hmax(best);
  const double nd = static_cast<double>(n);
  for (; i < n; ++i) {
    const double lo = static_cast<double>(i) / nd;
    const double hi = static_cast<double>(i + 1) / nd;
    m = std::max(m, std::max(hi - c[i], c[i] - lo));
  }
  return m;
}

void axpby_avx2(double a, std::span<const double> x, double b, std::span<const double> y,
                std::span<double> out) {
  const std::size_t n = out.size();
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x.data() + i),
                                      _mm256_mul_pd(vb, _mm256_loadu_pd(y.data() + i)));
    _mm256_storeu_pd(out.data() + i, r);
  }
  for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

}  // namespace

const Table& avx2_table_impl() {
  static const Table t{weighted_sq_dev_avx2, bridge_sums_avx2, ks_sup_avx2, axpby_avx2};
  return t;
}

}  // namespace wshift::kernels
