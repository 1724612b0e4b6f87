#include <doctest.h>

#include <vector>

#include "postsel/rng.hpp"

using namespace postsel;

TEST_CASE("equal seeds give equal streams") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    differs = differs || x != c.uniform();
  }
  CHECK(differs);
}

TEST_CASE("substreams depend on every tag") {
  Rng a = Rng::substream(7, {1, 2});
  Rng b = Rng::substream(7, {1, 2});
  Rng c = Rng::substream(7, {2, 1});
  Rng d = Rng::substream(8, {1, 2});
  const double x = a.uniform();
  CHECK(x == b.uniform());
  CHECK(x != c.uniform());
  CHECK(x != d.uniform());
  CHECK(derive_seed(7, {1, 2}) != derive_seed(7, {1}));
}

TEST_CASE("uniforms stay inside the open unit interval and below() is in range") {
  Rng r(1);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) {
    const double u = r.uniform();
    CHECK((u > 0.0 && u < 1.0));
    ++counts[r.below(5)];
  }
  for (int c : counts) CHECK(c == doctest::Approx(10000).epsilon(0.05));
}

TEST_CASE("normal draws have unit variance") {
  Rng r(3);
  double s = 0.0, ss = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    ss += z * z;
  }
  CHECK(s / n == doctest::Approx(0.0).epsilon(0.01));
  CHECK(ss / n == doctest::Approx(1.0).epsilon(0.01));
}
