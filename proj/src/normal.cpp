#include "postsel/normal.hpp"

#include <cmath>
#include <limits>

#include "postsel/errors.hpp"

namespace postsel {
namespace {

constexpr double kInvSqrtPi = 0.56418958354775628695;
constexpr double kLog2Pi = 1.83787706640934548356;

// Rational Chebyshev coefficients from W. J. Cody, "Rational Chebyshev
// approximations for the error function", Math. Comp. 23 (1969).
constexpr double kA[5] = {3.1611237438705656, 113.864154151050156, 377.485237685302021,
                          3209.37758913846947, .185777706184603153};
constexpr double kB[4] = {23.6012909523441209, 244.024637934444173, 1282.61652607737228,
                          2844.23683343917062};
constexpr double kC[9] = {.564188496988670089, 8.88314979438837594, 66.1191906371416295,
                          298.635138197400131, 881.95222124176909,  1712.04761263407058,
                          2051.07837782607147, 1230.33935479799725, 2.15311535474403846e-8};
constexpr double kD[8] = {15.7449261107098347, 117.693950891312499, 537.181101862009858,
                          1621.38957456669019, 3290.79923573345963, 4362.61909014324716,
                          3439.36767414372164, 1230.33935480374942};
constexpr double kP[6] = {.305326634961232344, .360344899949804439, .125781726111229246,
                          .0160837851487422766, 6.58749161529837803e-4, .0163153871373020978};
constexpr double kQ[5] = {2.56852019228982242, 1.87295284992346047, .527905102951428412,
                          .0605183413124413191, .00233520497626869185};

// exp(x*x) with the square split so that the large exponent is exact.
double exp_square(double x) {
  const double xh = std::trunc(x * 16.0) / 16.0;
  const double del = (x - xh) * (x + xh);
  return std::exp(xh * xh) * std::exp(del);
}

// exp(-x*x/2) with the same splitting.
double exp_neg_half_square(double x) {
  const double xh = std::trunc(x * 16.0) / 16.0;
  const double del = (x - xh) * (x + xh);
  return std::exp(-0.5 * xh * xh) * std::exp(-0.5 * del);
}

// erfcx for y >= 0.
double erfcx_nonneg(double y) {
  if (y <= 0.46875) {
    const double ysq = y * y;
    double num = kA[4] * ysq;
    double den = ysq;
    for (int i = 0; i < 3; ++i) {
      num = (num + kA[i]) * ysq;
      den = (den + kB[i]) * ysq;
    }
    const double erf_y = y * (num + kA[3]) / (den + kB[3]);
    return std::exp(ysq) * (1.0 - erf_y);
  }
  if (y <= 4.0) {
    double num = kC[8] * y;
    double den = y;
    for (int i = 0; i < 7; ++i) {
      num = (num + kC[i]) * y;
      den = (den + kD[i]) * y;
    }
    return (num + kC[7]) / (den + kD[7]);
  }
  if (y >= 6.71e7) return kInvSqrtPi / y;
  const double ysq = 1.0 / (y * y);
  double num = kP[5] * ysq;
  double den = ysq;
  for (int i = 0; i < 4; ++i) {
    num = (num + kP[i]) * ysq;
    den = (den + kQ[i]) * ysq;
  }
  const double r = ysq * (num + kP[4]) / (den + kQ[4]);
  return (kInvSqrtPi - r) / y;
}

// Acklam's rational approximation to the lower-tail quantile (p <= 0.5),
// relative error about 1e-9 before refinement.
double quantile_initial(double p) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  if (p < 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Quantile for 0 < p <= 0.5 (non-positive result).
double quantile_lower(double p) {
  if (p == 0.5) return 0.0;
  double x = quantile_initial(p);
  for (int iter = 0; iter < 2; ++iter) {
    const double e = std_cdf(x) - p;
    const double u = e / std_pdf(x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

}  // namespace

double erfcx(double x) {
  if (std::isnan(x)) return x;
  if (x >= 0.0) return erfcx_nonneg(x);
  if (x < -26.628) return std::numeric_limits<double>::infinity();
  const double e = exp_square(x);
  return (e + e) - erfcx_nonneg(-x);
}

double std_pdf(double x) { return kInvSqrt2Pi * exp_neg_half_square(x); }

double std_log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double std_sf(double x) {
  if (std::isnan(x)) return x;
  if (x >= 0.0) {
    if (x == std::numeric_limits<double>::infinity()) return 0.0;
    return 0.5 * erfcx_nonneg(x * kInvSqrt2) * exp_neg_half_square(x);
  }
  return 1.0 - std_sf(-x);
}

double std_cdf(double x) { return std_sf(-x); }

double std_log_sf(double x) {
  if (std::isnan(x)) return x;
  if (x > 0.0) {
    if (x == std::numeric_limits<double>::infinity()) {
      return -std::numeric_limits<double>::infinity();
    }
    return std::log(0.5 * erfcx_nonneg(x * kInvSqrt2)) - 0.5 * x * x;
  }
  return std::log1p(-std_sf(-x));
}

double std_log_cdf(double x) { return std_log_sf(-x); }

double mills_ratio(double x) {
  if (x > 38.0) {
    // Asymptotic series 1/x (1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8 - 945/x^10).
    const double z = 1.0 / (x * x);
    const double s =
        1.0 + z * (-1.0 + z * (3.0 + z * (-15.0 + z * (105.0 + z * -945.0))));
    return s / x;
  }
  return kSqrtPiOver2 * erfcx(x * kInvSqrt2);
}

double std_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("std_quantile: probability must lie in (0, 1)");
  }
  if (p <= 0.5) return quantile_lower(p);
  // 1 - p is exact for p in [0.5, 1].
  return -quantile_lower(1.0 - p);
}

double std_quantile_upper(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("std_quantile_upper: probability must lie in (0, 1)");
  }
  if (p <= 0.5) return -quantile_lower(p);
  return quantile_lower(1.0 - p);
}

double std_quantile_log(double log_p) {
  if (!(log_p < 0.0)) {
    throw DomainError("std_quantile_log: log probability must be negative");
  }
  if (log_p > -700.0) return std_quantile(std::exp(log_p));
  // Deep lower tail: Newton on log Phi(x) = log_p, starting from the
  // leading-order asymptotic log Phi(x) ~ -x^2/2 - log|x| - log sqrt(2 pi).
  const double s = -2.0 * log_p;
  double x = -std::sqrt(s - std::log(s) - kLog2Pi);
  for (int iter = 0; iter < 50; ++iter) {
    const double g = std_log_cdf(x) - log_p;
    const double step = g * mills_ratio(-x);
    x -= step;
    if (std::abs(step) <= 1e-15 * std::abs(x)) break;
  }
  return x;
}

}  // namespace postsel
