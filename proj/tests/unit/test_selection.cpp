#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "postsel/errors.hpp"
#include "postsel/normal.hpp"
#include "postsel/rng.hpp"
#include "postsel/selection.hpp"

using namespace postsel;

namespace {

// Step-up rule written out directly from the definition.
std::size_t brute_force_bh(const std::vector<double>& y, double q) {
  const std::size_t n = y.size();
  std::vector<double> a;
  for (double v : y) a.push_back(std::abs(v));
  std::sort(a.begin(), a.end(), std::greater<>());
  for (std::size_t k = n; k >= 1; --k) {
    const double t = std_quantile(1.0 - q * static_cast<double>(k) / (2.0 * static_cast<double>(n)));
    if (a[k - 1] >= t) return k;
  }
  return 0;
}

std::vector<double> sparse_draw(Rng& r, std::size_t n, std::size_t signals, double nu) {
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = (i < signals ? nu : 0.0) + r.normal();
  return y;
}

}  // namespace

TEST_CASE("abs_order sorts by decreasing magnitude, stable on ties") {
  const std::vector<double> y{1.0, -3.0, 2.0, -1.0};
  CHECK(abs_order(y) == std::vector<std::size_t>{1, 2, 0, 3});
}

TEST_CASE("fixed threshold uses a strict comparison") {
  const std::vector<double> y{2.0, -2.5, 1.0, 2.0000001};
  const auto out = select_fixed(y, 2.0);
  CHECK(out.selected == std::vector<std::size_t>{1, 3});
  CHECK(out.signs == std::vector<int>{-1, 1});
  CHECK(out.threshold == 2.0);
}

TEST_CASE("top-K selection, boundary and ties") {
  const std::vector<double> y{0.5, -4.0, 3.0, -1.0, 2.0};
  const auto out = select_topk(y, 2);
  CHECK(out.selected == std::vector<std::size_t>{1, 2});
  CHECK(out.boundary_index == 4u);
  CHECK(out.boundary_sign == 1);
  CHECK(out.threshold == 2.0);
  CHECK_THROWS_AS(select_topk(std::vector<double>{3.0, -2.0, 2.0}, 2), TieAtBoundary);
  CHECK_NOTHROW(select_topk(std::vector<double>{3.0, -2.0, 2.0}, 1));
  CHECK_THROWS_AS(select_topk(y, 0), DomainError);
  CHECK_THROWS_AS(select_topk(y, 5), DomainError);
}

TEST_CASE("BH thresholds and the empty selection") {
  const auto t = bh_thresholds(1000, 0.1);
  CHECK(t[0] == doctest::Approx(3.890591886413094).epsilon(1e-13));
  const std::vector<double> zeros(20, 0.0);
  const auto out = select_bh(zeros, 0.1);
  CHECK(out.k_hat == 0);
  CHECK(out.selected.empty());
  CHECK(out.threshold == doctest::Approx(bh_thresholds(20, 0.1)[0]));
}

TEST_CASE("BH matches the step-up definition and the rightmost local minimum") {
  Rng r(17);
  for (int it = 0; it < 300; ++it) {
    const std::size_t n = 5 + r.below(150);
    const auto y = sparse_draw(r, n, r.below(n / 3 + 1), 1.0 + 4.0 * r.uniform());
    const double q = 0.05 + 0.3 * r.uniform();
    const auto out = select_bh(y, q);
    REQUIRE(out.k_hat == brute_force_bh(y, q));
    for (double p : {0.5, 1.0, 2.0}) {
      CHECK(rightmost_local_min(sk_profile(y, q, p)) == out.k_hat);
    }
  }
}

TEST_CASE("leftmost local minimum is the step-down index") {
  // |y|_(1) < t_1 but |y|_(2) >= t_2: step-down stops at 0, step-up picks 2.
  const std::size_t n = 10;
  const double q = 0.2;
  const auto t = bh_thresholds(n, q);
  std::vector<double> y(n, 0.1);
  y[0] = 0.5 * (t[0] + t[1]);
  y[1] = 0.5 * (t[0] + t[1]) - 1e-9;
  REQUIRE(y[0] < t[0]);
  REQUIRE(y[1] >= t[1]);
  const auto s = sk_profile(y, q, 1.0);
  CHECK(select_bh(y, q).k_hat == 2);
  CHECK(rightmost_local_min(s) == 2);
  CHECK(leftmost_local_min(s) == 0);
}

TEST_CASE("affine constraints hold at the observed data") {
  Rng r(23);
  for (int it = 0; it < 50; ++it) {
    const auto y = sparse_draw(r, 30, 4, 3.0);
    for (const SelectionOutcome& o : {select_fixed(y, 1.5), select_topk(y, 5), select_bh(y, 0.2)}) {
      const auto c = affine_build(o, y);
      CHECK(affine_verify(c, y));
      CHECK(c.cols == y.size());
    }
  }
}

TEST_CASE("top-K with K = n - 1 fixes the boundary sign") {
  const std::vector<double> y{3.0, -2.0, 1.0};
  const auto o = select_topk(y, 2);
  const auto c = affine_build(o, y);
  CHECK(affine_verify(c, y));
  // Flipping the boundary sign changes the event and must violate a row.
  CHECK_FALSE(affine_verify(c, std::vector<double>{3.0, -2.0, -1.0}));
  CHECK_FALSE(same_event(o, std::vector<double>{3.0, -2.0, -1.0}));
}

TEST_CASE("affine set and rerun agree on perturbed probes") {
  Rng r(29);
  int agree_in = 0, agree_out = 0;
  for (int it = 0; it < 40; ++it) {
    const auto y = sparse_draw(r, 25, 3, 3.5);
    for (const SelectionOutcome& o : {select_fixed(y, 1.0), select_topk(y, 4), select_bh(y, 0.3)}) {
      const auto c = affine_build(o, y);
      for (int p = 0; p < 50; ++p) {
        std::vector<double> z(y);
        const double scale = 0.05 * (1 + p % 10);
        for (double& v : z) v += scale * r.normal();
        const bool a = affine_verify(c, z);
        REQUIRE(a == same_event(o, z));
        (a ? agree_in : agree_out)++;
      }
    }
  }
  CHECK(agree_in > 100);
  CHECK(agree_out > 100);
}

TEST_CASE("affine_build rejects an outcome from other data") {
  const std::vector<double> y{3.0, 0.1, -2.0};
  const auto o = select_fixed(y, 1.0);
  CHECK_THROWS_AS(affine_build(o, std::vector<double>{0.0, 3.0, -2.0}), ConsistencyError);
}

TEST_CASE("truncation regions") {
  const std::vector<double> y{3.0, -2.5, 0.1};
  const auto o = select_fixed(y, 1.0);
  CHECK(truncation_for(o, 1).lambda() == 1.0);
  CHECK(sign_conditioned_bounds(o, 1).b == -1.0);
  CHECK(sign_conditioned_bounds(o, 0).a == 1.0);
  CHECK_THROWS_AS(truncation_for(o, 2), DomainError);
}
