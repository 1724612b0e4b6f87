#include "postsel/truncnorm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "postsel/errors.hpp"
#include "postsel/normal.hpp"

namespace postsel {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Below this standardized width an interval is treated as locally uniform;
// the exact moment formulas cancel catastrophically there.
constexpr double kNarrowWidth = 1e-6;

double logaddexp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// x * phi(x), with the infinite limits set to 0.
double x_pdf(double x) { return std::isinf(x) ? 0.0 : x * std_pdf(x); }

double clamp01(double p) { return std::min(1.0, std::max(0.0, p)); }

}  // namespace

TruncRegion TruncRegion::two_sided(double lambda) {
  if (!(lambda >= 0.0) || std::isinf(lambda)) {
    throw DomainError("two-sided tail threshold must be finite and >= 0");
  }
  return TruncRegion(TwoSidedTail{lambda});
}

TruncRegion TruncRegion::interval(double a, double b) {
  if (std::isnan(a) || std::isnan(b) || a > b) {
    throw DomainError("interval region needs a <= b");
  }
  return TruncRegion(Interval{a, b});
}

TruncRegion TruncRegion::whole_line() { return TruncRegion(TwoSidedTail{0.0}); }

bool TruncRegion::is_whole_line() const {
  if (const auto* t = std::get_if<TwoSidedTail>(&v_)) return t->lambda == 0.0;
  const auto& iv = std::get<Interval>(v_);
  return iv.a == -kInf && iv.b == kInf;
}

double TruncRegion::lambda() const {
  if (const auto* t = std::get_if<TwoSidedTail>(&v_)) return t->lambda;
  throw DomainError("lambda() called on an interval region");
}

Interval TruncRegion::bounds() const {
  if (const auto* iv = std::get_if<Interval>(&v_)) return *iv;
  throw DomainError("bounds() called on a two-sided tail region");
}

bool TruncRegion::contains(double x) const {
  if (const auto* t = std::get_if<TwoSidedTail>(&v_)) return std::abs(x) >= t->lambda;
  const auto& iv = std::get<Interval>(v_);
  return x >= iv.a && x <= iv.b;
}

TruncatedGaussian::TruncatedGaussian(double mu_, double sigma_, TruncRegion region_)
    : mu(mu_), sigma(sigma_), region(region_) {
  if (!std::isfinite(mu)) throw DomainError("truncated Gaussian: mu must be finite");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DomainError("truncated Gaussian: sigma must be positive and finite");
  }
  if (!(trunc_log_mass(*this) >= kLogMassFloor)) {
    throw DegenerateRegion("truncation region has numerically zero mass");
  }
}

double std_log_interval_mass(double alpha, double beta) {
  if (!(alpha < beta)) return -kInf;
  if (alpha >= 0.0) {
    const double la = std_log_sf(alpha);
    const double lb = std_log_sf(beta);
    return la + std::log(-std::expm1(lb - la));
  }
  if (beta <= 0.0) return std_log_interval_mass(-beta, -alpha);
  return std::log(0.5 * (std::erf(beta * kInvSqrt2) - std::erf(alpha * kInvSqrt2)));
}

double std_log_tail_mass(double m, double l) {
  if (l == 0.0) return 0.0;
  return logaddexp(std_log_sf(l - m), std_log_sf(l + m));
}

StdMoments tail_moments(double m, double l) {
  if (l == 0.0) return {0.0, 1.0};
  const double sgn = m < 0.0 ? -1.0 : 1.0;
  m = std::abs(m);
  const double a = l - m;
  const double b = l + m;
  double h;
  double s;
  if (a >= 0.0) {
    // Divide numerator and normalizer by phi(a); phi(b)/phi(a) = exp(-2lm).
    const double w = std::exp(-2.0 * l * m);
    const double d = mills_ratio(a) + w * mills_ratio(b);
    h = -std::expm1(-2.0 * l * m) / d;
    s = (a + w * b) / d;
  } else {
    const double z = std_sf(a) + std_sf(b);
    h = (std_pdf(a) - std_pdf(b)) / z;
    s = (a * std_pdf(a) + b * std_pdf(b)) / z;
  }
  return {sgn * h, std::max(0.0, 1.0 + s - h * h)};
}

StdMoments interval_moments(double alpha, double beta) {
  if (!(alpha < beta)) throw DegenerateRegion("empty interval");
  if (beta - alpha < kNarrowWidth) {
    const double w = beta - alpha;
    return {0.5 * (alpha + beta), w * w / 12.0};
  }
  if (beta <= 0.0) {
    const StdMoments r = interval_moments(-beta, -alpha);
    return {-r.shift, r.var};
  }
  double h;
  double s;
  if (alpha >= 0.0) {
    if (std::isinf(beta)) {
      const double d = mills_ratio(alpha);
      h = 1.0 / d;
      s = alpha / d;
    } else {
      const double r = std::exp(-0.5 * (beta - alpha) * (beta + alpha));
      const double d = mills_ratio(alpha) - r * mills_ratio(beta);
      h = (1.0 - r) / d;
      s = (alpha - beta * r) / d;
    }
  } else {
    const double z = 0.5 * (std::erf(beta * kInvSqrt2) - std::erf(alpha * kInvSqrt2));
    h = (std_pdf(alpha) - std_pdf(beta)) / z;
    s = (x_pdf(alpha) - x_pdf(beta)) / z;
  }
  return {h, std::max(0.0, 1.0 + s - h * h)};
}

double trunc_log_mass(const TruncatedGaussian& tg) {
  if (tg.region.is_two_sided()) {
    return std_log_tail_mass(tg.mu / tg.sigma, tg.region.lambda() / tg.sigma);
  }
  const Interval iv = tg.region.bounds();
  return std_log_interval_mass((iv.a - tg.mu) / tg.sigma, (iv.b - tg.mu) / tg.sigma);
}

double trunc_mass(const TruncatedGaussian& tg) { return std::exp(trunc_log_mass(tg)); }

double trunc_logpdf(const TruncatedGaussian& tg, double x) {
  if (!tg.region.contains(x)) return -kInf;
  const double z = (x - tg.mu) / tg.sigma;
  return std_log_pdf(z) - std::log(tg.sigma) - trunc_log_mass(tg);
}

double trunc_pdf(const TruncatedGaussian& tg, double x) {
  if (!tg.region.contains(x)) return 0.0;
  return std::exp(trunc_logpdf(tg, x));
}

double trunc_cdf(const TruncatedGaussian& tg, double x) {
  const double z = (x - tg.mu) / tg.sigma;
  if (tg.region.is_whole_line()) return std_cdf(z);
  const double log_z = trunc_log_mass(tg);
  if (tg.region.is_two_sided()) {
    const double lam = tg.region.lambda();
    const double m = tg.mu / tg.sigma;
    const double l = lam / tg.sigma;
    const double a = l - m;
    const double b = l + m;
    if (x < -lam) return clamp01(std::exp(std_log_cdf(z) - log_z));
    if (x < lam) return clamp01(std::exp(std_log_sf(b) - log_z));
    const double upper = std::exp(std_log_sf(z) - log_z);
    if (upper < 0.5) return clamp01(1.0 - upper);
    return clamp01(std::exp(logaddexp(std_log_sf(b), std_log_interval_mass(a, z)) - log_z));
  }
  const Interval iv = tg.region.bounds();
  const double alpha = (iv.a - tg.mu) / tg.sigma;
  const double beta = (iv.b - tg.mu) / tg.sigma;
  if (z <= alpha) return 0.0;
  if (z >= beta) return 1.0;
  const double upper = std::exp(std_log_interval_mass(z, beta) - log_z);
  if (upper < 0.5) return clamp01(1.0 - upper);
  return clamp01(std::exp(std_log_interval_mass(alpha, z) - log_z));
}

double trunc_mean(const TruncatedGaussian& tg) {
  if (tg.region.is_two_sided()) {
    return tg.mu + tg.sigma * tail_moments(tg.mu / tg.sigma, tg.region.lambda() / tg.sigma).shift;
  }
  const Interval iv = tg.region.bounds();
  const StdMoments mo = interval_moments((iv.a - tg.mu) / tg.sigma, (iv.b - tg.mu) / tg.sigma);
  return tg.mu + tg.sigma * mo.shift;
}

double trunc_var(const TruncatedGaussian& tg) {
  const double s2 = tg.sigma * tg.sigma;
  if (tg.region.is_two_sided()) {
    return s2 * tail_moments(tg.mu / tg.sigma, tg.region.lambda() / tg.sigma).var;
  }
  const Interval iv = tg.region.bounds();
  return s2 * interval_moments((iv.a - tg.mu) / tg.sigma, (iv.b - tg.mu) / tg.sigma).var;
}

double trunc_quantile(const TruncatedGaussian& tg, double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("trunc_quantile: u must lie in (0, 1)");
  if (tg.region.is_whole_line()) return tg.mu + tg.sigma * std_quantile(u);
  const double log_z = trunc_log_mass(tg);
  if (tg.region.is_two_sided()) {
    const double lam = tg.region.lambda();
    const double b = (lam + tg.mu) / tg.sigma;
    const double log_lower = std_log_sf(b);
    if (std::log(u) < log_lower - log_z) {
      const double z = std_quantile_log(std::log(u) + log_z);
      return std::min(tg.mu + tg.sigma * z, -lam);
    }
    const double z = -std_quantile_log(std::log1p(-u) + log_z);
    return std::max(tg.mu + tg.sigma * z, lam);
  }
  const Interval iv = tg.region.bounds();
  const double alpha = (iv.a - tg.mu) / tg.sigma;
  const double beta = (iv.b - tg.mu) / tg.sigma;
  double z;
  if (alpha >= 0.0) {
    // Upper tail: sf(z) = (1-u) sf(alpha) + u sf(beta).
    const double lp = logaddexp(std::log1p(-u) + std_log_sf(alpha), std::log(u) + std_log_sf(beta));
    z = -std_quantile_log(lp);
  } else if (beta <= 0.0) {
    const double lp = logaddexp(std::log1p(-u) + std_log_cdf(alpha), std::log(u) + std_log_cdf(beta));
    z = std_quantile_log(lp);
  } else {
    const double pa = std_cdf(alpha);
    const double p = pa + u * (std_cdf(beta) - pa);
    z = std_quantile(std::min(std::max(p, std::numeric_limits<double>::min()),
                              std::nextafter(1.0, 0.0)));
  }
  return std::min(std::max(tg.mu + tg.sigma * z, iv.a), iv.b);
}

double trunc_sample(const TruncatedGaussian& tg, Rng& rng) {
  return trunc_quantile(tg, rng.uniform());
}

double selective_pivot(double value, double mu0, double sigma2, double vminus, double vplus) {
  if (!(sigma2 > 0.0)) throw DomainError("selective_pivot: sigma2 must be positive");
  if (!(vminus < value && value < vplus)) {
    throw DomainError("selective_pivot: value must lie strictly inside (vminus, vplus)");
  }
  const TruncatedGaussian tg(mu0, std::sqrt(sigma2), TruncRegion::interval(vminus, vplus));
  return trunc_cdf(tg, value);
}

}  // namespace postsel
