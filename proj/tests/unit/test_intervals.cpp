#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "postsel/ebayes.hpp"
#include "postsel/errors.hpp"
#include "postsel/estimators.hpp"
#include "postsel/intervals.hpp"
#include "postsel/normal.hpp"
#include "postsel/truncnorm.hpp"

using namespace postsel;

TEST_CASE("TN interval endpoints invert the truncated CDF") {
  for (double t : {0.5, 2.0, 3.5}) {
    for (double y : {t, t + 0.01, t + 0.7, t + 3.0, -(t + 1.2)}) {
      for (double p : {0.05, 0.1, 0.32}) {
        const Ci ci = ci_tn(y, t, 1.0, p);
        const TruncatedGaussian lo(ci.lower, 1.0, TruncRegion::two_sided(t));
        const TruncatedGaussian hi(ci.upper, 1.0, TruncRegion::two_sided(t));
        CHECK(std::abs(trunc_cdf(lo, y) - (1.0 - p / 2.0)) <= 1e-8);
        CHECK(std::abs(trunc_cdf(hi, y) - p / 2.0) <= 1e-8);
        CHECK(ci.lower < ci.upper);
      }
    }
  }
}

TEST_CASE("TN interval without truncation is the z interval") {
  const double z = std_quantile_upper(0.05);
  const Ci ci = ci_tn(1.3, 0.0, 1.0, 0.1);
  CHECK(ci.lower == doctest::Approx(1.3 - z).epsilon(1e-9));
  CHECK(ci.upper == doctest::Approx(1.3 + z).epsilon(1e-9));
}

TEST_CASE("TN intervals nest, are odd and scale") {
  for (double y : {2.1, 2.6, 4.0, 6.5}) {
    const Ci narrow = ci_tn(y, 2.0, 1.0, 0.2);
    const Ci wide = ci_tn(y, 2.0, 1.0, 0.05);
    CHECK(wide.lower <= narrow.lower);
    CHECK(wide.upper >= narrow.upper);
    const Ci neg = ci_tn(-y, 2.0, 1.0, 0.1);
    const Ci pos = ci_tn(y, 2.0, 1.0, 0.1);
    CHECK(neg.lower == doctest::Approx(-pos.upper).epsilon(1e-9));
    CHECK(neg.upper == doctest::Approx(-pos.lower).epsilon(1e-9));
    const Ci s = ci_tn(2.5 * y, 5.0, 2.5, 0.1);
    CHECK(s.lower == doctest::Approx(2.5 * pos.lower).epsilon(1e-9));
    CHECK(s.upper == doctest::Approx(2.5 * pos.upper).epsilon(1e-9));
  }
}

TEST_CASE("sign-conditioned interval uses the one-sided tail") {
  const double y = 2.4, t = 2.0, p = 0.1;
  const Ci ci = ci_tn(y, t, 1.0, p, true);
  const auto inf = std::numeric_limits<double>::infinity();
  const TruncatedGaussian lo(ci.lower, 1.0, TruncRegion::interval(t, inf));
  CHECK(std::abs(trunc_cdf(lo, y) - (1.0 - p / 2.0)) <= 1e-8);
}

TEST_CASE("Fisher interval is centred at the TN estimate") {
  const Ci ci = ci_fisher(3.0, 2.0, 1.0, 0.1);
  const double m = est_tn(3.0, 2.0);
  CHECK(0.5 * (ci.lower + ci.upper) == doctest::Approx(m).epsilon(1e-12));
  const TruncatedGaussian g(m, 1.0, TruncRegion::two_sided(2.0));
  const double half = std_quantile_upper(0.05) / std::sqrt(trunc_var(g));
  CHECK(0.5 * (ci.upper - ci.lower) == doctest::Approx(half).epsilon(1e-9));
}

TEST_CASE("Bonferroni intervals") {
  std::vector<double> y(1000, 0.0);
  std::vector<std::size_t> E;
  for (std::size_t i = 0; i < 50; ++i) {
    y[i] = 4.0 + 0.01 * static_cast<double>(i);
    E.push_back(i);
  }
  const auto rep = ci_by(y, E, 1.0, 0.1);
  REQUIRE(rep.indices.size() == 50);
  for (std::size_t j = 0; j < 50; ++j) {
    CHECK(0.5 * (rep.upper[j] - rep.lower[j]) == doctest::Approx(3.0902323061678135).epsilon(1e-12));
    CHECK(rep.valid[j]);
  }
}

TEST_CASE("Efron interval on the analytic example") {
  const auto e = GaussianMixtureMarginal::efron_example();
  const EfronCi ci = ci_efron(-4.0, e, 0.9, 0.1);
  REQUIRE(ci.valid);
  const double half = std_quantile_upper(0.05) * std::sqrt(0.5);
  CHECK(ci.lower == doctest::Approx(-3.5 - half).epsilon(1e-8));
  CHECK(ci.upper == doctest::Approx(-3.5 + half).epsilon(1e-8));
}

TEST_CASE("per-row errors are recorded on request") {
  const GaussianMixtureMarginal g({{1.0, 0.0, 1.0}}, 1.0);
  const std::vector<double> y{0.1, 5.0, 0.0};
  const auto o = select_fixed(y, 0.05);
  IntervalOptions opt;
  opt.marginal = &g;
  opt.pi0 = 1.0;
  CHECK_THROWS(intervals_selected(y, o, CiMethod::Efron, 0.1, opt));
  opt.row_errors = true;
  const auto rep = intervals_selected(y, o, CiMethod::Efron, 0.1, opt);
  CHECK(rep.failures >= 1);
  REQUIRE(rep.errors.size() == rep.indices.size());
  for (std::size_t j = 0; j < rep.indices.size(); ++j) {
    if (!rep.errors[j].empty()) {
      CHECK_FALSE(rep.valid[j]);
      CHECK(std::isnan(rep.lower[j]));
    }
  }
}

TEST_CASE("interval metrics on a hand-built report") {
  IntervalReport rep;
  rep.indices = {0, 1, 2, 3};
  rep.lower = {0.0, 0.0, 0.0, std::nan("")};
  rep.upper = {2.0, 4.0, 1.0, std::nan("")};
  rep.valid = {true, true, true, false};
  const std::vector<double> mu{1.0, 5.0, -1.0, 0.0};
  const auto m = interval_metrics(rep, mu);
  CHECK(m.count == 4);
  CHECK(m.valid == 3);
  CHECK(m.misses == 2);
  CHECK(m.upward_misses == 1);
  CHECK(m.invalid_rate == doctest::Approx(0.25));
  CHECK(m.mean_width == doctest::Approx(7.0 / 3.0));
  CHECK(m.fcp == doctest::Approx(2.0 / 3.0));
  REQUIRE(m.upward_miss_share);
  CHECK(*m.upward_miss_share == doctest::Approx(0.5));
  CHECK(m.width_summary[0] == 1.0);
  CHECK(m.width_summary[8] == 4.0);
  CHECK(m.skew_summary[0] == -1.0);
}

TEST_CASE("nine number summary") {
  const auto s = nine_number_summary({8, 7, 6, 5, 4, 3, 2, 1, 0});
  for (std::size_t j = 0; j < 9; ++j) CHECK(s[j] == static_cast<double>(j));
  CHECK(std::isnan(nine_number_summary({})[4]));
}

TEST_CASE("CI method names round trip") {
  for (CiMethod m : {CiMethod::TN, CiMethod::BY, CiMethod::Fisher, CiMethod::Efron}) {
    CHECK(parse_ci_method(ci_method_name(m)) == m);
  }
  CHECK_THROWS_AS(parse_ci_method("bayes"), DomainError);
}
