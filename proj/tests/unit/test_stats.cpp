#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "postsel/rng.hpp"
#include "postsel/stats.hpp"

using namespace postsel;

TEST_CASE("mean, sd and median") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(mean(v) == 2.5);
  CHECK(sample_sd(v) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
}

TEST_CASE("Kolmogorov tail") {
  CHECK(kolmogorov_sf(1.3580986393225505) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(kolmogorov_sf(0.0) == 1.0);
  CHECK(kolmogorov_sf(5.0) < 1e-20);
}

TEST_CASE("KS statistic by hand") {
  const auto r = ks_uniform({0.9, 0.1, 0.5});
  CHECK(r.statistic == doctest::Approx(0.7 / 3.0).epsilon(1e-12));
  CHECK(r.n == 3);
}

TEST_CASE("KS test accepts uniforms and rejects a shifted sample") {
  Rng r(31);
  std::vector<double> u(5000), w(5000);
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = r.uniform();
    w[i] = std::pow(r.uniform(), 1.2);
  }
  CHECK(ks_uniform(u).p_value > 0.01);
  CHECK(ks_uniform(w).p_value < 1e-6);
}

TEST_CASE("parallel_for visits each index once") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) CHECK(h.load() == 1);
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("parallel_for rethrows the first exception") {
  std::atomic<int> ran{0};
  CHECK_THROWS_AS(parallel_for(100, 3,
                               [&](std::size_t i) {
                                 ran++;
                                 if (i == 5) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  CHECK(ran.load() <= 100);
}
