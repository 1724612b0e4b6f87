#include <algorithm>
#include <cmath>

#include "postsel/simd/kernels.hpp"

namespace postsel::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void gemv_scalar(const double* a, std::size_t rows, std::size_t cols, const double* x,
                 double* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot_scalar(a + r * cols, x, cols);
}

void gemv_t_acc_scalar(const double* a, std::size_t rows, std::size_t cols, const double* r,
                       double* acc) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double ri = r[i];
    const double* row = a + i * cols;
    for (std::size_t j = 0; j < cols; ++j) acc[j] += row[j] * ri;
  }
}

void hard_threshold_scalar(const double* y, std::size_t n, double t, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::abs(y[i]) > t ? y[i] : 0.0;
}

void soft_threshold_scalar(const double* y, std::size_t n, double t, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::copysign(std::max(std::abs(y[i]) - t, 0.0), y[i]);
  }
}

bool all_leq_scalar(const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!(a[i] <= b[i])) return false;
  }
  return true;
}

constexpr Kernels kScalar{Isa::Scalar,      dot_scalar,           sum_sq_diff_scalar,
                          gemv_scalar,      gemv_t_acc_scalar,    hard_threshold_scalar,
                          soft_threshold_scalar, all_leq_scalar};

}  // namespace

const Kernels& scalar_kernels() { return kScalar; }

}  // namespace postsel::simd
