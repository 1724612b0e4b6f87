// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "postsel/simd/kernels.hpp"

namespace postsel::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

const __m256d kAbsMask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
const __m256d kSignMask = _mm256_castsi256_pd(_mm256_set1_epi64x(
    static_cast<long long>(0x8000000000000000ULL)));

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_sq_diff_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void gemv_avx2(const double* a, std::size_t rows, std::size_t cols, const double* x,
               double* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot_avx2(a + r * cols, x, cols);
}

void gemv_t_acc_avx2(const double* a, std::size_t rows, std::size_t cols, const double* r,
                     double* acc) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = a + i * cols;
    const __m256d ri = _mm256_set1_pd(r[i]);
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      const __m256d cur = _mm256_loadu_pd(acc + j);
      _mm256_storeu_pd(acc + j, _mm256_fmadd_pd(_mm256_loadu_pd(row + j), ri, cur));
    }
    for (; j < cols; ++j) acc[j] += row[j] * r[i];
  }
}

void hard_threshold_avx2(const double* y, std::size_t n, double t, double* out) {
  const __m256d tv = _mm256_set1_pd(t);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(y + i);
    const __m256d keep = _mm256_cmp_pd(_mm256_and_pd(v, kAbsMask), tv, _CMP_GT_OQ);
    _mm256_storeu_pd(out + i, _mm256_and_pd(v, keep));
  }
  for (; i < n; ++i) out[i] = std::abs(y[i]) > t ? y[i] : 0.0;
}

void soft_threshold_avx2(const double* y, std::size_t n, double t, double* out) {
  const __m256d tv = _mm256_set1_pd(t);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(y + i);
    const __m256d mag = _mm256_max_pd(_mm256_sub_pd(_mm256_and_pd(v, kAbsMask), tv), zero);
    _mm256_storeu_pd(out + i, _mm256_or_pd(mag, _mm256_and_pd(v, kSignMask)));
  }
  for (; i < n; ++i) out[i] = std::copysign(std::max(std::abs(y[i]) - t, 0.0), y[i]);
}

bool all_leq_avx2(const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ok = _mm256_cmp_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), _CMP_LE_OQ);
    if (_mm256_movemask_pd(ok) != 0xF) return false;
  }
  for (; i < n; ++i) {
    if (!(a[i] <= b[i])) return false;
  }
  return true;
}

constexpr Kernels kAvx2{Isa::Avx2,      dot_avx2,          sum_sq_diff_avx2,
                        gemv_avx2,      gemv_t_acc_avx2,   hard_threshold_avx2,
                        soft_threshold_avx2, all_leq_avx2};

}  // namespace

namespace detail {
const Kernels* avx2_table() { return &kAvx2; }
}  // namespace detail

}  // namespace postsel::simd
