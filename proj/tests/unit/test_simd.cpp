#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "postsel/rng.hpp"
#include "postsel/simd/kernels.hpp"

using namespace postsel;

namespace {

std::vector<double> random_vec(Rng& r, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = 3.0 * r.normal();
  return v;
}

}  // namespace

TEST_CASE("vector kernels agree with the scalar reference") {
  const simd::Kernels& ref = simd::scalar_kernels();
  const simd::Kernels* vec = simd::vector_kernels();
  if (vec == nullptr) {
    MESSAGE("no vector kernels on this machine; scalar path only");
    return;
  }
  Rng r(11);
  // Odd sizes exercise the remainder loops.
  for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 17u, 64u, 1001u}) {
    const auto a = random_vec(r, n);
    const auto b = random_vec(r, n);
    const double scale = 1.0 + std::sqrt(static_cast<double>(n)) * 10.0;
    CHECK(vec->dot(a.data(), b.data(), n) ==
          doctest::Approx(ref.dot(a.data(), b.data(), n)).epsilon(1e-13 * scale));
    CHECK(vec->sum_sq_diff(a.data(), b.data(), n) ==
          doctest::Approx(ref.sum_sq_diff(a.data(), b.data(), n)).epsilon(1e-13 * scale));

    std::vector<double> h1(n), h2(n), s1(n), s2(n);
    ref.hard_threshold(a.data(), n, 1.5, h1.data());
    vec->hard_threshold(a.data(), n, 1.5, h2.data());
    ref.soft_threshold(a.data(), n, 1.5, s1.data());
    vec->soft_threshold(a.data(), n, 1.5, s2.data());
    CHECK(h1 == h2);
    CHECK(s1 == s2);
    CHECK(ref.all_leq(a.data(), b.data(), n) == vec->all_leq(a.data(), b.data(), n));
    CHECK(ref.all_leq(a.data(), a.data(), n) == vec->all_leq(a.data(), a.data(), n));

    const std::size_t rows = n % 5 + 2;
    const auto A = random_vec(r, rows * n);
    std::vector<double> o1(rows), o2(rows);
    ref.gemv(A.data(), rows, n, a.data(), o1.data());
    vec->gemv(A.data(), rows, n, a.data(), o2.data());
    for (std::size_t i = 0; i < rows; ++i) CHECK(o2[i] == doctest::Approx(o1[i]).epsilon(1e-12));
    const auto rr = random_vec(r, rows);
    std::vector<double> acc1(n, 1.0), acc2(n, 1.0);
    ref.gemv_t_acc(A.data(), rows, n, rr.data(), acc1.data());
    vec->gemv_t_acc(A.data(), rows, n, rr.data(), acc2.data());
    for (std::size_t j = 0; j < n; ++j) CHECK(acc2[j] == doctest::Approx(acc1[j]).epsilon(1e-12));
  }
}

TEST_CASE("soft and hard thresholding reference semantics") {
  const std::vector<double> y{-3.0, -1.0, 0.0, 1.0, 2.0, 2.5};
  std::vector<double> h(y.size()), s(y.size());
  simd::hard_threshold(y, 2.0, h);
  simd::soft_threshold(y, 2.0, s);
  CHECK(h == std::vector<double>{-3.0, 0.0, 0.0, 0.0, 0.0, 2.5});
  CHECK(s == std::vector<double>{-1.0, 0.0, 0.0, 0.0, 0.0, 0.5});
}

TEST_CASE("span wrappers reject mismatched sizes") {
  std::vector<double> a(3), b(4);
  CHECK_THROWS_AS(simd::dot(a, b), std::invalid_argument);
}
