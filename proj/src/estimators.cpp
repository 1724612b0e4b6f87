#include "postsel/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "postsel/ebayes.hpp"
#include "postsel/errors.hpp"
#include "postsel/normal.hpp"
#include "postsel/truncnorm.hpp"

namespace postsel {
namespace {

// Beyond this standardized gap between |y| and t the mean equation is a
// contraction with factor |1 - Var| ~ exp(-gap^2/2); fixed-point iteration
// avoids forming the 0/0 correction explicitly.
constexpr double kDeepTailGap = 10.0;
constexpr int kMaxIter = 100;

double mean_gap(double m, double l, double ys, double* var) {
  const StdMoments mo = tail_moments(m, l);
  if (var != nullptr) *var = mo.var;
  return m + mo.shift - ys;
}

}  // namespace

double est_ht(double y, double t) { return std::abs(y) > t ? y : 0.0; }

double est_st(double y, double t) { return std::copysign(std::max(std::abs(y) - t, 0.0), y); }

TnSolution est_tn_solve(double y, double t, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("est_tn: sigma must be positive");
  if (!(t >= 0.0)) throw DomainError("est_tn: threshold must be >= 0");
  if (!(std::abs(y) >= t)) throw DomainError("est_tn: |y| is below the threshold");
  if (t == 0.0) return {y, 0, 0.0};

  const double sgn = y < 0.0 ? -1.0 : 1.0;
  const double ys = std::abs(y) / sigma;
  const double l = t / sigma;
  TnSolution out;
  double m;

  if (ys - l > kDeepTailGap) {
    m = ys;
    for (int it = 1; it <= kMaxIter; ++it) {
      const double next = ys - tail_moments(m, l).shift;
      out.iterations = it;
      const bool done = std::abs(next - m) <= 1e-15 * std::max(1.0, ys);
      m = next;
      if (done) break;
    }
  } else {
    // mu-hat lies in [ST, HT] = [ys - l, ys]; widen the lower end by one sd.
    double lo = std::max(0.0, ys - l - 1.0);
    double hi = ys;
    while (mean_gap(lo, l, ys, nullptr) > 0.0) lo = std::max(0.0, lo - 1.0);
    while (hi - lo > 1e-3) {
      const double mid = 0.5 * (lo + hi);
      (mean_gap(mid, l, ys, nullptr) > 0.0 ? hi : lo) = mid;
      ++out.iterations;
    }
    m = 0.5 * (lo + hi);
    for (int it = 0; it < kMaxIter; ++it) {
      double var = 0.0;
      const double g = mean_gap(m, l, ys, &var);
      ++out.iterations;
      if (g == 0.0) break;
      (g > 0.0 ? hi : lo) = m;
      double next = m - g / var;
      if (!(var > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
      const double tol = 1e-14 * std::max(1.0, std::abs(m));
      const bool done = std::abs(next - m) <= tol || hi - lo <= tol;
      m = next;
      if (done) break;
    }
  }
  out.mu = sgn * sigma * m;
  out.residual = sigma * std::abs(mean_gap(m, l, ys, nullptr));
  return out;
}

double est_tn(double y, double t, double sigma) { return est_tn_solve(y, t, sigma).mu; }

std::vector<double> est_js(std::span<const double> y, double sigma) {
  const std::size_t n = y.size();
  if (n < 3) throw DomainError("est_js: need n >= 3");
  double ss = 0.0;
  for (double v : y) ss += v * v;
  if (ss == 0.0) throw DomainError("est_js: ||y||^2 is zero");
  const double factor = 1.0 - static_cast<double>(n - 2) * sigma * sigma / ss;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = factor * y[i];
  return out;
}

double approx_abs_orderstat_mean(std::size_t k, std::size_t n) {
  if (k < 1 || k > n) throw DomainError("approx_abs_orderstat_mean: need 1 <= k <= n");
  const double kd = static_cast<double>(k);
  const double n1 = static_cast<double>(n) + 1.0;
  // U_(k) = 2(1 - Phi(|Y|_(k))) ~ Beta(k, n-k+1); expand g(u) = Phi^{-1}(1 - u/2).
  const double x = std_quantile_upper(kd / (2.0 * n1));
  const double var_u = kd * (n1 - kd) / (n1 * n1 * (n1 + 1.0));
  const double phi = std_pdf(x);
  return x * (1.0 + var_u / (8.0 * phi * phi));
}

std::vector<double> est_bias_corrected(std::span<const double> y) {
  const std::size_t n = y.size();
  const auto order = abs_order(y);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    out[i] = std::copysign(std::abs(y[i]) - approx_abs_orderstat_mean(k + 1, n), y[i]);
  }
  return out;
}

double sure_risk(std::span<const double> y, double t) {
  const double t2 = t * t;
  double s = static_cast<double>(y.size());
  for (double v : y) {
    const double v2 = v * v;
    s += std::min(v2, t2);
    if (v2 <= t2) s -= 2.0;
  }
  return s;
}

double sure_threshold(std::span<const double> y, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("sure_threshold: sigma must be positive");
  const std::size_t n = y.size();
  if (n == 0) throw DomainError("sure_threshold: empty input");
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = std::abs(y[i]) / sigma;
  std::sort(a.begin(), a.end());
  const double tmax = std::sqrt(2.0 * std::log(static_cast<double>(n)));
  // SURE increases between consecutive |y_i|, so only 0, the |y_i| below
  // tmax, and tmax itself can be minimizers.
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + a[i] * a[i];
  const auto risk_at = [&](double t) {
    const auto c = static_cast<std::size_t>(std::upper_bound(a.begin(), a.end(), t) - a.begin());
    return static_cast<double>(n) + prefix[c] + static_cast<double>(n - c) * t * t -
           2.0 * static_cast<double>(c);
  };
  double best_t = 0.0;
  double best = risk_at(0.0);
  for (double t : a) {
    if (t > tmax) break;
    const double r = risk_at(t);
    if (r < best) {
      best = r;
      best_t = t;
    }
  }
  if (risk_at(tmax) < best) best_t = tmax;
  return best_t * sigma;
}

std::vector<double> est_sure(std::span<const double> y, double sigma) {
  const double t = sure_threshold(y, sigma);
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = est_st(y[i], t);
  return out;
}

const char* method_name(Method m) {
  switch (m) {
    case Method::TN: return "tn";
    case Method::HT: return "ht";
    case Method::ST: return "st";
    case Method::JS: return "js";
    case Method::SURE: return "sure";
    case Method::Boot1: return "boot1";
    case Method::Boot2: return "boot2";
    case Method::BootOracle: return "oracle";
    case Method::GMLEB: return "gmleb";
    case Method::Tweedie: return "tweedie";
    case Method::BC: return "bc";
  }
  return "unknown";
}

Method parse_method(const std::string& s) {
  for (Method m : {Method::TN, Method::HT, Method::ST, Method::JS, Method::SURE, Method::Boot1,
                   Method::Boot2, Method::BootOracle, Method::GMLEB, Method::Tweedie, Method::BC}) {
    if (s == method_name(m)) return m;
  }
  throw DomainError("unknown method '" + s + "'");
}

bool method_uses_threshold(Method m) {
  return m == Method::TN || m == Method::HT || m == Method::ST;
}

std::vector<double> estimate_full(std::span<const double> y, Method method,
                                  const EstimateOptions& opt) {
  switch (method) {
    case Method::TN:
    case Method::HT:
    case Method::ST:
      throw DomainError(std::string("estimate_full: method '") + method_name(method) +
                        "' needs a selection threshold");
    case Method::JS: return est_js(y, opt.sigma);
    case Method::SURE: return est_sure(y, opt.sigma);
    case Method::BC: return est_bias_corrected(y);
    case Method::Boot1:
    case Method::Boot2:
    case Method::BootOracle: {
      if (!opt.seed) throw DomainError("bootstrap methods need an explicit seed");
      BootstrapOptions b;
      b.order = method == Method::Boot1   ? BootOrder::First
                : method == Method::Boot2 ? BootOrder::Second
                                          : BootOrder::Oracle;
      b.B = opt.B;
      b.B2_outer = opt.B2_outer;
      b.B2_inner = opt.B2_inner;
      b.sigma = opt.sigma;
      b.signed_ranks = opt.signed_ranks;
      b.seed = *opt.seed;
      std::optional<std::span<const double>> mu;
      if (method == Method::BootOracle) {
        if (opt.true_mu.size() != y.size()) throw DomainError("oracle bootstrap needs true_mu");
        mu = std::span<const double>(opt.true_mu);
      }
      return est_bootstrap(y, b, mu);
    }
    case Method::GMLEB: {
      const GridPrior prior =
          gmleb_fit(y, opt.sigma, opt.gmleb_step * opt.sigma, 1.0, opt.gmleb_max_iter);
      std::vector<double> out(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) out[i] = gmleb_mean(prior, y[i], opt.sigma);
      return out;
    }
    case Method::Tweedie: {
      const DensityFit fit = fit_lindsay(y, opt.lindsay_df, opt.lindsay_nbins);
      std::vector<double> out(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) out[i] = tweedie_mean(fit, y[i], opt.sigma);
      return out;
    }
  }
  throw InternalError("estimate_full: unhandled method");
}

EstimateReport estimate_selected(std::span<const double> y, const SelectionOutcome& outcome,
                                 Method method, const EstimateOptions& opt) {
  if (outcome.n != y.size()) throw ConsistencyError("estimate_selected: outcome size differs from y");
  EstimateReport rep;
  rep.method = method;
  rep.indices = outcome.selected;
  if (rep.indices.empty()) return rep;

  const double t = outcome.threshold;
  switch (method) {
    case Method::TN:
      rep.threshold_used = t;
      for (std::size_t i : rep.indices) {
        const TnSolution s = est_tn_solve(y[i], t, opt.sigma);
        rep.estimates.push_back(s.mu);
        rep.iterations.push_back(s.iterations);
        rep.residuals.push_back(s.residual);
      }
      return rep;
    case Method::HT:
      rep.threshold_used = t;
      for (std::size_t i : rep.indices) rep.estimates.push_back(y[i]);
      return rep;
    case Method::ST:
      rep.threshold_used = t;
      for (std::size_t i : rep.indices) rep.estimates.push_back(est_st(y[i], t));
      return rep;
    default: break;
  }
  if (method == Method::SURE) rep.threshold_used = sure_threshold(y, opt.sigma);
  const std::vector<double> full = estimate_full(y, method, opt);
  rep.estimates.reserve(rep.indices.size());
  for (std::size_t i : rep.indices) rep.estimates.push_back(full[i]);
  return rep;
}

}  // namespace postsel
