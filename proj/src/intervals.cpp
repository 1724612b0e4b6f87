#include "postsel/intervals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "postsel/errors.hpp"
#include "postsel/estimators.hpp"
#include "postsel/normal.hpp"
#include "postsel/truncnorm.hpp"

namespace postsel {
namespace {

constexpr double kStartSpan = 30.0;
constexpr double kMaxSpan = 50.0;
constexpr double kBisectTol = 1e-10;

// F_mu(y) on the chosen region, for y >= t > 0 (the caller reflects y < 0).
double cdf_in_mu(double mu, double y, double t, double sigma, bool one_sided) {
  const TruncRegion region = one_sided
                                 ? TruncRegion::interval(t, std::numeric_limits<double>::infinity())
                                 : TruncRegion::two_sided(t);
  try {
    return trunc_cdf(TruncatedGaussian(mu, sigma, region), y);
  } catch (const DegenerateRegion&) {
    // Only the one-sided region can lose its mass, and only for mu far
    // below t, where the conditional law piles up at t.
    return 1.0;
  }
}

// Root in mu of F_mu(y) = target. F is decreasing in mu.
double invert(double y, double t, double sigma, double target, bool one_sided) {
  const auto h = [&](double mu) { return cdf_in_mu(mu, y, t, sigma, one_sided) - target; };
  double lo = y - kStartSpan * sigma;
  double hi = y + kStartSpan * sigma;
  double hlo = h(lo);
  double hhi = h(hi);
  if (hlo < 0.0) {
    lo = y - kMaxSpan * sigma;
    hlo = h(lo);
  }
  if (hhi > 0.0) {
    hi = y + kMaxSpan * sigma;
    hhi = h(hi);
  }
  if (hlo < 0.0 || hhi > 0.0) throw SolverError("ci_tn: no bracket within 50 sigma of y");
  while (hi - lo > kBisectTol * sigma) {
    const double mid = 0.5 * (lo + hi);
    const double hm = h(mid);
    if (hm == 0.0) return mid;
    if (hm > 0.0) {
      lo = mid;
      hlo = hm;
    } else {
      hi = mid;
      hhi = hm;
    }
  }
  // Secant polish inside the final bracket.
  if (hlo != hhi) {
    const double s = lo + hlo * (hi - lo) / (hlo - hhi);
    if (s >= lo && s <= hi) return s;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Ci ci_tn(double y, double t, double sigma, double p, bool sign_conditioned) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("ci_tn: p must lie in (0, 1)");
  if (!(sigma > 0.0)) throw DomainError("ci_tn: sigma must be positive");
  if (!(t >= 0.0) || !(std::abs(y) >= t)) throw DomainError("ci_tn: need |y| >= t >= 0");
  if (y < 0.0) {
    const Ci r = ci_tn(-y, t, sigma, p, sign_conditioned);
    return {-r.upper, -r.lower};
  }
  if (t == 0.0) {
    const double half = sigma * std_quantile_upper(0.5 * p);
    return {y - half, y + half};
  }
  return {invert(y, t, sigma, 1.0 - 0.5 * p, sign_conditioned),
          invert(y, t, sigma, 0.5 * p, sign_conditioned)};
}

Ci ci_fisher(double y, double t, double sigma, double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("ci_fisher: p must lie in (0, 1)");
  const double mu = est_tn(y, t, sigma);
  const double info =
      trunc_var(TruncatedGaussian(mu, sigma, TruncRegion::two_sided(t))) / std::pow(sigma, 4);
  if (!(info >= 1e-12)) throw InstabilityError("ci_fisher: Fisher information is numerically zero");
  const double half = std_quantile_upper(0.5 * p) / std::sqrt(info);
  return {mu - half, mu + half};
}

EfronCi ci_efron(double x, const MarginalDensity& f, double pi0, double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("ci_efron: p must lie in (0, 1)");
  const EfronMoments m = efron_moments(f, x, pi0);
  if (!m.valid) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, false};
  }
  const double half = std_quantile_upper(0.5 * p) * std::sqrt(m.var);
  return {m.mean - half, m.mean + half, true};
}

const char* ci_method_name(CiMethod m) {
  switch (m) {
    case CiMethod::TN: return "tn";
    case CiMethod::BY: return "by";
    case CiMethod::Fisher: return "fisher";
    case CiMethod::Efron: return "efron";
  }
  return "unknown";
}

CiMethod parse_ci_method(const std::string& s) {
  for (CiMethod m : {CiMethod::TN, CiMethod::BY, CiMethod::Fisher, CiMethod::Efron}) {
    if (s == ci_method_name(m)) return m;
  }
  throw DomainError("unknown interval method '" + s + "'");
}

IntervalReport ci_by(std::span<const double> y, std::span<const std::size_t> E, double sigma,
                     double p) {
  if (E.empty()) throw DomainError("ci_by: empty selection");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("ci_by: p must lie in (0, 1)");
  const double half = sigma * std_quantile_upper(p / (2.0 * static_cast<double>(E.size())));
  IntervalReport rep;
  rep.method = CiMethod::BY;
  rep.level = p;
  for (std::size_t i : E) {
    rep.indices.push_back(i);
    rep.lower.push_back(y[i] - half);
    rep.upper.push_back(y[i] + half);
    rep.valid.push_back(true);
    rep.errors.emplace_back();
  }
  return rep;
}

IntervalReport intervals_selected(std::span<const double> y, const SelectionOutcome& outcome,
                                  CiMethod method, double p, const IntervalOptions& opt) {
  if (method == CiMethod::BY) {
    if (outcome.selected.empty()) {
      IntervalReport empty;
      empty.method = method;
      empty.level = p;
      return empty;
    }
    return ci_by(y, outcome.selected, opt.sigma, p);
  }
  if (method == CiMethod::Efron && opt.marginal == nullptr) {
    throw DomainError("Efron intervals need a fitted marginal density");
  }
  IntervalReport rep;
  rep.method = method;
  rep.level = p;
  for (std::size_t i : outcome.selected) {
    rep.indices.push_back(i);
    double lo = 0.0;
    double hi = 0.0;
    bool ok = true;
    std::string err;
    try {
      switch (method) {
        case CiMethod::TN: {
          const Ci c = ci_tn(y[i], outcome.threshold, opt.sigma, p, opt.sign_conditioned);
          lo = c.lower;
          hi = c.upper;
          break;
        }
        case CiMethod::Fisher: {
          const Ci c = ci_fisher(y[i], outcome.threshold, opt.sigma, p);
          lo = c.lower;
          hi = c.upper;
          break;
        }
        case CiMethod::Efron: {
          const EfronCi c = ci_efron(y[i], *opt.marginal, opt.pi0, p);
          lo = c.lower;
          hi = c.upper;
          ok = c.valid;
          break;
        }
        case CiMethod::BY: break;
      }
    } catch (const Error& e) {
      if (!opt.row_errors) throw;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      lo = hi = nan;
      ok = false;
      err = e.what();
      ++rep.failures;
    }
    rep.lower.push_back(lo);
    rep.upper.push_back(hi);
    rep.valid.push_back(ok);
    rep.errors.push_back(std::move(err));
  }
  return rep;
}

NineNumber nine_number_summary(std::vector<double> v) {
  NineNumber out;
  if (v.empty()) {
    out.fill(std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  std::sort(v.begin(), v.end());
  for (std::size_t j = 0; j <= 8; ++j) {
    const double h = static_cast<double>(j) / 8.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    out[j] = v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
  }
  return out;
}

IntervalMetrics interval_metrics(const IntervalReport& rep, std::span<const double> mu) {
  if (mu.size() != rep.indices.size()) throw DomainError("interval_metrics: mu is not aligned");
  IntervalMetrics m;
  m.count = rep.indices.size();
  std::vector<double> widths;
  std::vector<double> skews;
  for (std::size_t j = 0; j < m.count; ++j) {
    if (!rep.valid[j]) continue;
    ++m.valid;
    const double L = rep.lower[j];
    const double R = rep.upper[j];
    widths.push_back(R - L);
    skews.push_back((mu[j] - L) / (R - L));
    if (mu[j] < L || mu[j] > R) {
      ++m.misses;
      if (mu[j] > R) ++m.upward_misses;
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.invalid_rate = m.count == 0 ? 0.0 : 1.0 - static_cast<double>(m.valid) / static_cast<double>(m.count);
  if (m.valid > 0) {
    double total = 0.0;
    for (double w : widths) total += w;
    m.mean_width = total / static_cast<double>(m.valid);
    m.fcp = static_cast<double>(m.misses) / static_cast<double>(m.valid);
  } else {
    m.mean_width = nan;
    m.fcp = nan;
  }
  if (m.misses > 0) {
    m.upward_miss_share = static_cast<double>(m.upward_misses) / static_cast<double>(m.misses);
  }
  m.width_summary = nine_number_summary(widths);
  m.skew_summary = nine_number_summary(skews);
  return m;
}

}  // namespace postsel
