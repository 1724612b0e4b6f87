#pragma once

// Data-parallel inner loops with a scalar reference implementation and
// vector variants (AVX2+FMA on x86-64, NEON on AArch64) picked at runtime.
// Reductions may differ from the scalar reference in the last bits because
// the summation order differs; elementwise kernels are bit-identical.

#include <cstddef>
#include <span>

namespace postsel::simd {

enum class Isa { Scalar, Avx2, Neon };

const char* isa_name(Isa isa);

/// Table of kernel entry points for one instruction set.
struct Kernels {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
  /// out = A x, A row-major rows x cols.
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x,
               double* out);
  /// acc += A^T r, A row-major rows x cols.
  void (*gemv_t_acc)(const double* a, std::size_t rows, std::size_t cols, const double* r,
                     double* acc);
  /// out_i = y_i if |y_i| > t else 0.
  void (*hard_threshold)(const double* y, std::size_t n, double t, double* out);
  /// out_i = sign(y_i) max(|y_i| - t, 0).
  void (*soft_threshold)(const double* y, std::size_t n, double t, double* out);
  /// true iff a_i <= b_i for every i.
  bool (*all_leq)(const double* a, const double* b, std::size_t n);
};

const Kernels& scalar_kernels();
/// Vector kernels for this build and CPU, or nullptr when unavailable.
const Kernels* vector_kernels();
/// The table used by the library. Honors POSTSEL_SIMD=scalar to force the
/// reference path.
const Kernels& active();

// Convenience wrappers over the active table.
double dot(std::span<const double> a, std::span<const double> b);
double sum_sq_diff(std::span<const double> a, std::span<const double> b);
void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> out);
void gemv_t_acc(std::span<const double> a, std::size_t rows, std::size_t cols,
                std::span<const double> r, std::span<double> acc);
void hard_threshold(std::span<const double> y, double t, std::span<double> out);
void soft_threshold(std::span<const double> y, double t, std::span<double> out);
bool all_leq(std::span<const double> a, std::span<const double> b);

namespace detail {
const Kernels* avx2_table();
const Kernels* neon_table();
}  // namespace detail

}  // namespace postsel::simd
