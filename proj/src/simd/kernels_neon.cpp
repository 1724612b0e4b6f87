// AArch64 variant. NEON is architecturally guaranteed on AArch64, so no
// runtime probe is needed beyond the build-time architecture check.

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

#include "postsel/simd/kernels.hpp"

namespace postsel::simd {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_sq_diff_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vfmaq_f64(acc, d, d);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void gemv_neon(const double* a, std::size_t rows, std::size_t cols, const double* x,
               double* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot_neon(a + r * cols, x, cols);
}

void gemv_t_acc_neon(const double* a, std::size_t rows, std::size_t cols, const double* r,
                     double* acc) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = a + i * cols;
    const float64x2_t ri = vdupq_n_f64(r[i]);
    std::size_t j = 0;
    for (; j + 2 <= cols; j += 2) {
      vst1q_f64(acc + j, vfmaq_f64(vld1q_f64(acc + j), vld1q_f64(row + j), ri));
    }
    for (; j < cols; ++j) acc[j] += row[j] * r[i];
  }
}

void hard_threshold_neon(const double* y, std::size_t n, double t, double* out) {
  const float64x2_t tv = vdupq_n_f64(t);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t v = vld1q_f64(y + i);
    const uint64x2_t keep = vcgtq_f64(vabsq_f64(v), tv);
    vst1q_f64(out + i, vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(v), keep)));
  }
  for (; i < n; ++i) out[i] = std::abs(y[i]) > t ? y[i] : 0.0;
}

void soft_threshold_neon(const double* y, std::size_t n, double t, double* out) {
  const float64x2_t tv = vdupq_n_f64(t);
  const float64x2_t zero = vdupq_n_f64(0.0);
  const uint64x2_t sign = vdupq_n_u64(0x8000000000000000ULL);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t v = vld1q_f64(y + i);
    const float64x2_t mag = vmaxq_f64(vsubq_f64(vabsq_f64(v), tv), zero);
    const uint64x2_t s = vandq_u64(vreinterpretq_u64_f64(v), sign);
    vst1q_f64(out + i, vreinterpretq_f64_u64(vorrq_u64(vreinterpretq_u64_f64(mag), s)));
  }
  for (; i < n; ++i) out[i] = std::copysign(std::max(std::abs(y[i]) - t, 0.0), y[i]);
}

bool all_leq_neon(const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const uint64x2_t ok = vcleq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    if ((vgetq_lane_u64(ok, 0) & vgetq_lane_u64(ok, 1)) == 0) return false;
  }
  for (; i < n; ++i) {
    if (!(a[i] <= b[i])) return false;
  }
  return true;
}

constexpr Kernels kNeon{Isa::Neon,      dot_neon,          sum_sq_diff_neon,
                        gemv_neon,      gemv_t_acc_neon,   hard_threshold_neon,
                        soft_threshold_neon, all_leq_neon};

}  // namespace

namespace detail {
const Kernels* neon_table() { return &kNeon; }
}  // namespace detail

}  // namespace postsel::simd
