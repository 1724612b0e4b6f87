#pragma once

// Standard normal distribution functions with full relative accuracy in the
// tails. Tail probabilities go through the scaled complementary error
// function erfcx(x) = exp(x^2) erfc(x), so log-tail values stay accurate far
// beyond the point where the plain probability underflows.

namespace postsel {

inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kSqrtPiOver2 = 1.25331413731550025121;

/// exp(x*x) * erfc(x), accurate over the whole double range.
double erfcx(double x);

double std_pdf(double x);
double std_log_pdf(double x);

/// Phi(x).
double std_cdf(double x);
/// 1 - Phi(x), computed without cancellation.
double std_sf(double x);
double std_log_cdf(double x);
double std_log_sf(double x);

/// Mills ratio (1 - Phi(x)) / phi(x). Finite for x > -37.
double mills_ratio(double x);

/// Phi^{-1}(p) for 0 < p < 1. Throws DomainError otherwise.
double std_quantile(double p);
/// Upper-tail quantile: the x with 1 - Phi(x) = p, without forming 1 - p.
double std_quantile_upper(double p);
/// Phi^{-1}(exp(log_p)) for log_p < 0, usable when exp(log_p) underflows.
double std_quantile_log(double log_p);

}  // namespace postsel
