#include <doctest.h>

#include <cmath>
#include <vector>

#include "postsel/errors.hpp"
#include "postsel/simlab.hpp"

using namespace postsel;

TEST_CASE("signal counts") {
  CHECK(signal_count(1000, 0.3) == 8);
  CHECK(signal_count(1000, 1.0 / 3.0) == 10);
  CHECK(signal_count(1000, 0.15) == 3);
  CHECK(signal_count(100, 0.0) == 1);
}

TEST_CASE("sparse samples are reproducible and shaped") {
  SimConfig cfg;
  cfg.n = 200;
  cfg.alpha = 0.3;
  cfg.seed = 5;
  const auto a = gen_sparse_sample(cfg, 3);
  const auto b = gen_sparse_sample(cfg, 3);
  CHECK(a.y == b.y);
  CHECK(a.y != gen_sparse_sample(cfg, 4).y);
  std::size_t nonzero = 0;
  for (double m : a.mu) nonzero += m != 0.0;
  CHECK(nonzero == signal_count(200, 0.3));
  cfg.global_null = true;
  for (double m : gen_sparse_sample(cfg, 3).mu) CHECK(m == 0.0);
}

TEST_CASE("partial MSE") {
  const std::vector<double> est{1.0, 2.0, 0.0};
  const std::vector<double> mu{0.0, 0.0, 0.0};
  const std::vector<std::size_t> ranks{1, 0, 2};
  CHECK(partial_mse(est, mu, ranks, 1) == 4.0);
  CHECK(partial_mse(est, mu, ranks, 2) == 2.5);
  CHECK_THROWS_AS(partial_mse(est, mu, ranks, 0), DomainError);
  CHECK_THROWS_AS(partial_mse(est, mu, ranks, 4), DomainError);
}

TEST_CASE("experiments do not depend on the thread count") {
  SimConfig cfg;
  cfg.n = 300;
  cfg.S = 6;
  cfg.seed = 77;
  cfg.q_grid = {0.05, 0.2};
  cfg.methods = {Method::TN, Method::HT, Method::ST, Method::JS};
  cfg.threads = 1;
  const auto one = run_bh_experiment(cfg);
  cfg.threads = 4;
  const auto four = run_bh_experiment(cfg);
  CHECK(one.values == four.values);
  CHECK(one.selected == four.selected);
  cfg.K_grid = {1, 5, 20};
  const auto t1 = run_topk_experiment(cfg);
  cfg.threads = 1;
  CHECK(run_topk_experiment(cfg).values == t1.values);
  CHECK(t1.axis == "K");
  CHECK(t1.median.size() == 3);
}

TEST_CASE("integrated MSE averages report medians") {
  MSEReport a, b;
  for (MSEReport* r : {&a, &b}) {
    r->axis = "q";
    r->axis_values = {0.1, 0.2};
    r->methods = {Method::TN};
  }
  a.median = {{1.0}, {3.0}};
  b.median = {{2.0}, {5.0}};
  const std::vector<MSEReport> v{a, b};
  const auto c = integrated_mse(v);
  CHECK(c.values[0][0] == 1.5);
  CHECK(c.values[1][0] == 4.0);
}

TEST_CASE("winners' curse under the global null") {
  const auto w = winners_curse_demo(100, 200, 1, 2);
  REQUIRE(w.mean_raw.size() == 100);
  CHECK(w.approx_mean[0] == doctest::Approx(2.7301167750722019));
  // The top order statistic is biased upward by about 2.75, so its MSE is
  // near 2.75^2 + 0.43^2.
  CHECK(w.mean_raw[0] > 6.5);
  CHECK(w.mean_raw[0] < 9.0);
  CHECK(w.mean_bc[0] < w.mean_raw[0]);
  CHECK(w.mean_js[0] < w.mean_raw[0]);
}

TEST_CASE("risk constants for the nearly black space") {
  RiskBoundSpec s;
  s.eta = 0.01;
  s.q = 0.1;
  s.r = 2.0;
  const auto c = risk_constants(s, 10000);
  const double tau = std::sqrt(2.0 * std::log(100.0));
  CHECK(c.tau == doctest::Approx(tau));
  CHECK(c.k_n == 100.0);
  CHECK(c.minimax == doctest::Approx(100.0 * tau * tau));
  CHECK(c.bound == doctest::Approx(2.0 * c.minimax));
  s.enforce_window = true;
  CHECK_THROWS_AS(risk_constants(s, 10000), DomainError);
}

TEST_CASE("k(mu) is zero without signal and grows with it") {
  const std::vector<double> zero(1000, 0.0);
  CHECK(k_of_mu(zero, 0.1) == 0.0);
  std::vector<double> mu(1000, 0.0);
  for (std::size_t i = 0; i < 50; ++i) mu[i] = 8.0;
  const double k = k_of_mu(mu, 0.1);
  CHECK(k > 49.0);
  CHECK(k < 60.0);
}

TEST_CASE("squeeze audit on a small grid") {
  const auto r = squeeze_audit(60, 60);
  CHECK(r.points == 3600);
  CHECK(r.evaluated > 0);
  CHECK(r.violations == 0);
}

TEST_CASE("polyhedral bounds reproduce the fixed threshold region") {
  const std::vector<double> y{3.0, -0.5, -2.5};
  const auto o = select_fixed(y, 2.0);
  const auto c = affine_build(o, y);
  const auto [lo, hi] = polyhedral_bounds(c, y, 0);
  CHECK(lo == doctest::Approx(2.0));
  CHECK(std::isinf(hi));
  const auto [lo2, hi2] = polyhedral_bounds(c, y, 2);
  CHECK(std::isinf(lo2));
  CHECK(hi2 == doctest::Approx(-2.0));
}
