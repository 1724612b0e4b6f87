#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "postsel/simd/kernels.hpp"

namespace postsel::simd {

#if !(defined(__x86_64__) || defined(_M_X64))
namespace detail {
const Kernels* avx2_table() { return nullptr; }
}  // namespace detail
#endif

#if !(defined(__aarch64__) || defined(_M_ARM64))
namespace detail {
const Kernels* neon_table() { return nullptr; }
}  // namespace detail
#endif

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

const Kernels* vector_kernels() {
#if defined(__x86_64__) || defined(_M_X64)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return detail::avx2_table();
  }
  return nullptr;
#else
  return detail::neon_table();
#endif
}

const Kernels& active() {
  static const Kernels& table = [] () -> const Kernels& {
    const char* env = std::getenv("POSTSEL_SIMD");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) return scalar_kernels();
    const Kernels* vec = vector_kernels();
    return vec != nullptr ? *vec : scalar_kernels();
  }();
  return table;
}

namespace {
void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}
}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "simd::dot: size mismatch");
  return active().dot(a.data(), b.data(), a.size());
}

double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "simd::sum_sq_diff: size mismatch");
  return active().sum_sq_diff(a.data(), b.data(), a.size());
}

void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> out) {
  require(a.size() == rows * cols && x.size() == cols && out.size() == rows,
          "simd::gemv: dimension mismatch");
  active().gemv(a.data(), rows, cols, x.data(), out.data());
}

void gemv_t_acc(std::span<const double> a, std::size_t rows, std::size_t cols,
                std::span<const double> r, std::span<double> acc) {
  require(a.size() == rows * cols && r.size() == rows && acc.size() == cols,
          "simd::gemv_t_acc: dimension mismatch");
  active().gemv_t_acc(a.data(), rows, cols, r.data(), acc.data());
}

void hard_threshold(std::span<const double> y, double t, std::span<double> out) {
  require(y.size() == out.size(), "simd::hard_threshold: size mismatch");
  active().hard_threshold(y.data(), y.size(), t, out.data());
}

void soft_threshold(std::span<const double> y, double t, std::span<double> out) {
  require(y.size() == out.size(), "simd::soft_threshold: size mismatch");
  active().soft_threshold(y.data(), y.size(), t, out.data());
}

bool all_leq(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "simd::all_leq: size mismatch");
  return active().all_leq(a.data(), b.data(), a.size());
}

}  // namespace postsel::simd
