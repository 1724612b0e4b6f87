#include <doctest.h>

#include <cmath>
#include <vector>

#include "postsel/errors.hpp"
#include "postsel/estimators.hpp"
#include "postsel/rng.hpp"

using namespace postsel;

namespace {

std::vector<double> draw(std::uint64_t seed, std::size_t n) {
  Rng r(seed);
  std::vector<double> y(n);
  for (double& v : y) v = r.normal();
  return y;
}

}  // namespace

TEST_CASE("bootstrap is a deterministic function of the seed") {
  const auto y = draw(1, 50);
  BootstrapOptions o;
  o.B = 200;
  o.seed = 42;
  const auto a = est_bootstrap(y, o);
  CHECK(a == est_bootstrap(y, o));
  o.seed = 43;
  CHECK(a != est_bootstrap(y, o));
  o.order = BootOrder::Second;
  o.B2_outer = 5;
  o.B2_inner = 100;
  const auto b = est_bootstrap(y, o);
  CHECK(b == est_bootstrap(y, o));
}

TEST_CASE("oracle bootstrap at zero recovers the order statistic means") {
  const std::size_t n = 100;
  const auto y = draw(2, n);
  const std::vector<double> zero(n, 0.0);
  BootstrapOptions o;
  o.order = BootOrder::Oracle;
  o.B = 4000;
  o.seed = 7;
  const auto est = est_bootstrap(y, o, zero);
  const auto order = abs_order(y);
  // bias of rank 1 is E|Y|_(1) = 2.7469576878061206; the sd of the maximum is
  // about 0.43, so 4000 draws give a standard error near 0.007.
  const std::size_t top = order[0];
  const double bias = std::abs(y[top]) - std::copysign(1.0, y[top]) * est[top];
  CHECK(std::abs(bias - 2.7469576878061206) < 0.03);
  CHECK_THROWS_AS(est_bootstrap(y, o), DomainError);
}

TEST_CASE("bootstrap is translation equivariant under signed ranks") {
  const auto y = draw(3, 30);
  std::vector<double> shifted(y);
  for (double& v : shifted) v += 5.0;
  BootstrapOptions o;
  o.B = 300;
  o.seed = 9;
  o.signed_ranks = true;
  const auto a = est_bootstrap(y, o);
  const auto b = est_bootstrap(shifted, o);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(b[i] == doctest::Approx(a[i] + 5.0).epsilon(1e-12));
}

TEST_CASE("bootstrap options are validated") {
  const auto y = draw(4, 10);
  BootstrapOptions o;
  o.B = 10;
  CHECK_THROWS_AS(est_bootstrap(y, o), DomainError);
  o.B = 200;
  o.sigma = 0.0;
  CHECK_THROWS_AS(est_bootstrap(y, o), DomainError);
}
