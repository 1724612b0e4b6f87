#pragma once

// Gaussian distributions restricted to a two-sided tail (-inf,-lambda] U
// [lambda,inf) or to an interval [a,b]. Everything is evaluated on the
// standardized scale and through Mills ratios so that masses far below
// double underflow still give usable means, variances and CDF values.

#include <variant>

#include "postsel/rng.hpp"

namespace postsel {

struct TwoSidedTail {
  double lambda = 0.0;
};

struct Interval {
  double a = 0.0;
  double b = 0.0;
};

class TruncRegion {
 public:
  /// (-inf, -lambda] U [lambda, inf); lambda = 0 is the whole line.
  static TruncRegion two_sided(double lambda);
  /// [a, b]; either end may be infinite.
  static TruncRegion interval(double a, double b);
  static TruncRegion whole_line();

  bool is_two_sided() const { return std::holds_alternative<TwoSidedTail>(v_); }
  bool is_whole_line() const;
  /// Threshold of a two-sided tail region. Throws for intervals.
  double lambda() const;
  /// Bounds of an interval region. Throws for two-sided tails.
  Interval bounds() const;
  bool contains(double x) const;

  const std::variant<TwoSidedTail, Interval>& variant() const { return v_; }

 private:
  explicit TruncRegion(std::variant<TwoSidedTail, Interval> v) : v_(v) {}
  std::variant<TwoSidedTail, Interval> v_;
};

/// log Z below this is treated as an empty region.
inline constexpr double kLogMassFloor = -740.0;

struct TruncatedGaussian {
  /// Validates sigma > 0 and that the region carries mass above the floor.
  TruncatedGaussian(double mu, double sigma, TruncRegion region);

  double mu;
  double sigma;
  TruncRegion region;
};

/// Mean offset h = E[X] - m and variance of X ~ N(m, 1) on the region,
/// both on the standardized scale.
struct StdMoments {
  double shift;
  double var;
};

/// X ~ N(m, 1) restricted to (-inf,-l] U [l,inf).
StdMoments tail_moments(double m, double l);
/// Z ~ N(0, 1) restricted to [alpha, beta].
StdMoments interval_moments(double alpha, double beta);

/// log P(Z in [alpha, beta]) for standard normal Z.
double std_log_interval_mass(double alpha, double beta);
/// log P(X in region) for X ~ N(m, 1), region (-inf,-l] U [l,inf).
double std_log_tail_mass(double m, double l);

double trunc_mass(const TruncatedGaussian& tg);
double trunc_log_mass(const TruncatedGaussian& tg);
double trunc_pdf(const TruncatedGaussian& tg, double x);
double trunc_logpdf(const TruncatedGaussian& tg, double x);
double trunc_cdf(const TruncatedGaussian& tg, double x);
double trunc_mean(const TruncatedGaussian& tg);
double trunc_var(const TruncatedGaussian& tg);
/// Inverse CDF for u in (0, 1); the result always lies inside the region.
double trunc_quantile(const TruncatedGaussian& tg, double u);
/// One inverse-CDF draw (consumes exactly one uniform).
double trunc_sample(const TruncatedGaussian& tg, Rng& rng);

/// F^{[vminus, vplus]}_{mu0, sigma2}(value). Requires vminus < value < vplus.
double selective_pivot(double value, double mu0, double sigma2, double vminus, double vplus);

}  // namespace postsel
