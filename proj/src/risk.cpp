// Monte Carlo check of the l_r risk bound for the TN estimator at the BH
// threshold, and the grid audit of |ST| <= |TN| <= |HT|.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "postsel/errors.hpp"
#include "postsel/estimators.hpp"
#include "postsel/normal.hpp"
#include "postsel/rng.hpp"
#include "postsel/simlab.hpp"

namespace postsel {
namespace {

bool is_lp(SparsitySpace s) { return s != SparsitySpace::L0; }

void validate(const RiskBoundSpec& s, std::size_t n) {
  if (n < 2) throw DomainError("risk bound: n must be at least 2");
  if (!(s.eta > 0.0 && s.eta < 1.0)) throw DomainError("risk bound: eta must lie in (0, 1)");
  if (!(s.q > 0.0 && s.q < 1.0)) throw DomainError("risk bound: q must lie in (0, 1)");
  if (!(s.r > 0.0 && s.r <= 2.0)) throw DomainError("risk bound: r must lie in (0, 2]");
  if (!(s.slack >= 0.0)) throw DomainError("risk bound: slack must be non-negative");
  if (is_lp(s.space)) {
    if (!(s.p > 0.0 && s.p < s.r)) throw DomainError("risk bound: lp spaces need 0 < p < r");
    if (s.space == SparsitySpace::WeakLp && !(s.C > 0.0)) {
      throw DomainError("risk bound: C must be positive");
    }
  }
  if (s.enforce_window) {
    const double nd = static_cast<double>(n);
    // eta^p with p = 0 is 1; the nearly black space is windowed on eta.
    const double e = is_lp(s.space) ? std::pow(s.eta, s.p) : s.eta;
    const double lo = std::pow(std::log(nd), 5.0) / nd;
    const double hi = std::pow(nd, -s.delta);
    if (!(e >= lo && e <= hi)) {
      throw DomainError("risk bound: eta^p = " + std::to_string(e) + " lies outside [" +
                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
  }
}

// P(|Y| > t) for Y ~ N(m, 1).
double two_sided_exceed(double m, double t) { return std_sf(t - m) + std_cdf(-t - m); }

}  // namespace

const char* space_name(SparsitySpace s) {
  switch (s) {
    case SparsitySpace::L0: return "l0";
    case SparsitySpace::WeakLp: return "weak_lp";
    case SparsitySpace::StrongLp: return "strong_lp";
  }
  return "unknown";
}

SparsitySpace parse_space(const std::string& s) {
  for (SparsitySpace v : {SparsitySpace::L0, SparsitySpace::WeakLp, SparsitySpace::StrongLp}) {
    if (s == space_name(v)) return v;
  }
  throw DomainError("unknown sparsity space '" + s + "'");
}

RiskConstants risk_constants(const RiskBoundSpec& s, std::size_t n) {
  validate(s, n);
  const double nd = static_cast<double>(n);
  RiskConstants c;
  // sqrt(2 log eta^-p) vanishes at p = 0, so the nearly black space uses
  // sqrt(2 log eta^-1).
  c.tau = is_lp(s.space) ? std::sqrt(2.0 * s.p * std::log(1.0 / s.eta))
                         : std::sqrt(2.0 * std::log(1.0 / s.eta));
  c.alpha_n = 4.0 / ((1.0 - s.q) * c.tau);
  c.u = s.space == SparsitySpace::WeakLp ? 1.0 - s.p / s.r : 1.0;
  if (s.r < 2.0) {
    c.w = std::max(s.r - 1.0, 0.0);
    c.v = 1.0 + c.u / (1.0 - s.q);
  } else {
    c.w = 0.0;
    c.v = 2.0;
  }
  switch (s.space) {
    case SparsitySpace::L0:
      c.k_n = std::floor(nd * s.eta);
      c.minimax = nd * s.eta * std::pow(c.tau, s.r);
      break;
    case SparsitySpace::StrongLp:
    case SparsitySpace::WeakLp:
      c.k_n = nd * std::pow(s.eta, s.p) * std::pow(c.tau, -s.p);
      c.minimax = nd * std::pow(s.eta, s.p) * std::pow(c.tau, s.r - s.p);
      if (s.space == SparsitySpace::WeakLp) c.minimax *= s.r / (s.r - s.p);
      break;
  }
  c.bound = std::pow(2.0, c.w) * c.minimax *
            (c.v + c.u * std::max(2.0 * s.q - 1.0, 0.0) / (1.0 - s.q));
  return c;
}

std::vector<double> risk_configuration(const RiskBoundSpec& s, std::size_t n) {
  const RiskConstants c = risk_constants(s, n);
  const double nd = static_cast<double>(n);
  std::vector<double> mu(n, 0.0);
  switch (s.space) {
    case SparsitySpace::L0: {
      const auto k = std::min(n, std::max<std::size_t>(1, static_cast<std::size_t>(c.k_n)));
      std::fill(mu.begin(), mu.begin() + static_cast<std::ptrdiff_t>(k), c.tau);
      break;
    }
    case SparsitySpace::StrongLp: {
      // k equal spikes with sum |mu|^p = n eta^p.
      const auto k = std::min(n, std::max<std::size_t>(1, static_cast<std::size_t>(c.k_n)));
      const double h = std::pow(nd * std::pow(s.eta, s.p) / static_cast<double>(k), 1.0 / s.p);
      std::fill(mu.begin(), mu.begin() + static_cast<std::ptrdiff_t>(k), h);
      break;
    }
    case SparsitySpace::WeakLp:
      for (std::size_t k = 1; k <= n; ++k) {
        mu[k - 1] = s.C * s.eta * std::pow(nd / static_cast<double>(k), 1.0 / s.p);
      }
      break;
  }
  return mu;
}

double k_of_mu(std::span<const double> mu, double q) {
  if (mu.empty()) throw DomainError("k_of_mu: empty mean vector");
  if (!(q > 0.0 && q < 1.0)) throw DomainError("k_of_mu: q must lie in (0, 1)");
  std::map<double, double> groups;
  for (double m : mu) groups[std::abs(m)] += 1.0;
  const double nd = static_cast<double>(mu.size());
  const auto g = [&](double k) {
    const double t = std_quantile_upper(q * k / (2.0 * nd));
    double s = 0.0;
    for (const auto& [m, cnt] : groups) s += cnt * two_sided_exceed(m, t);
    return s - k;
  };
  // g > 0 for small k unless the signals are too weak to beat the null
  // rate, in which case the infimum is 0. Scan a geometric grid for the first
  // sign change, then bisect.
  constexpr int kGrid = 2000;
  const double k_lo = 1e-6;
  const double ratio = std::pow(nd / k_lo, 1.0 / kGrid);
  double prev = k_lo;
  if (g(prev) <= 0.0) return 0.0;
  for (int j = 1; j <= kGrid; ++j) {
    const double k = k_lo * std::pow(ratio, j);
    if (g(k) <= 0.0) {
      double lo = prev, hi = k;
      for (int it = 0; it < 100 && hi - lo > 1e-10 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    prev = k;
  }
  return nd;
}

RiskBoundReport risk_bound_check(const RiskBoundSpec& spec, std::size_t n, std::size_t mc,
                                 std::uint64_t seed, std::size_t threads) {
  if (mc < 1) throw DomainError("risk bound: need at least one Monte Carlo draw");
  RiskBoundReport rep;
  rep.spec = spec;
  rep.n = n;
  rep.mc = mc;
  rep.constants = risk_constants(spec, n);
  const std::vector<double> mu = risk_configuration(spec, n);
  const double r = spec.r;
  const double factor = std::pow(2.0, std::max(r - 1.0, 0.0));

  struct Draw {
    double tn = 0, ht = 0, st = 0, diff = 0, allowance = 0;
    std::size_t k_hat = 0;
  };
  std::vector<Draw> draws(mc);
  parallel_for(mc, threads == 0 ? default_threads() : threads, [&](std::size_t d) {
    Rng rng = Rng::substream(seed, {static_cast<std::uint64_t>(StreamTag::Risk), d});
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = mu[i] + rng.normal();
    const SelectionOutcome out = select_bh(y, spec.q);
    Draw& w = draws[d];
    w.k_hat = out.selected.size();
    const double t = out.threshold;
    std::vector<char> sel(n, 0);
    for (std::size_t i : out.selected) sel[i] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (!sel[i]) {
        const double e = std::pow(std::abs(mu[i]), r);
        w.tn += e;
        w.ht += e;
        w.st += e;
        continue;
      }
      const double tn = est_tn(y[i], t);
      const double st = est_st(y[i], t);
      w.tn += std::pow(std::abs(tn - mu[i]), r);
      w.ht += std::pow(std::abs(y[i] - mu[i]), r);
      w.st += std::pow(std::abs(st - mu[i]), r);
      w.diff += std::pow(std::abs(tn - y[i]), r);
    }
    w.allowance = static_cast<double>(w.k_hat) * std::pow(t, r);
  });

  rep.k_mu = k_of_mu(mu, spec.q);
  const double ak = rep.constants.alpha_n * rep.constants.k_n;
  rep.k_minus = rep.k_mu > 2.0 * ak ? rep.k_mu - ak : 0.0;
  rep.k_plus = ak + std::max(rep.k_mu, ak);

  std::size_t inside = 0;
  double k_sum = 0.0;
  for (const Draw& w : draws) {
    rep.risk_tn += w.tn;
    rep.risk_ht += w.ht;
    rep.risk_st += w.st;
    k_sum += static_cast<double>(w.k_hat);
    if (w.diff > w.allowance * (1.0 + 1e-9)) ++rep.decomposition_violations;
    if (w.allowance > 0.0) {
      rep.max_decomposition_ratio = std::max(rep.max_decomposition_ratio, w.diff / w.allowance);
    }
    if (w.tn > factor * (w.allowance + w.ht) * (1.0 + 1e-9)) ++rep.paired_violations;
    const double k = static_cast<double>(w.k_hat);
    if (k >= rep.k_minus && k <= rep.k_plus) ++inside;
  }
  const double m = static_cast<double>(mc);
  rep.risk_tn /= m;
  rep.risk_ht /= m;
  rep.risk_st /= m;
  rep.mean_k_hat = k_sum / m;
  rep.sandwich_fraction = static_cast<double>(inside) / m;
  rep.ratio = rep.risk_tn / rep.constants.bound;
  rep.pass = rep.ratio <= 1.0 + spec.slack;
  return rep;
}

SqueezeReport squeeze_audit(std::size_t ny, std::size_t nt, double y_lo, double y_hi,
                            double t_hi, double slack) {
  if (ny < 2 || nt < 2) throw DomainError("squeeze_audit: grid needs at least 2 points per axis");
  if (!(y_hi > y_lo) || !(t_hi > 0.0)) throw DomainError("squeeze_audit: empty grid range");
  SqueezeReport rep;
  for (std::size_t a = 0; a < ny; ++a) {
    const double y = y_lo + (y_hi - y_lo) * static_cast<double>(a) / static_cast<double>(ny - 1);
    for (std::size_t b = 0; b < nt; ++b) {
      const double t = t_hi * static_cast<double>(b) / static_cast<double>(nt - 1);
      ++rep.points;
      if (std::abs(y) < t) continue;
      ++rep.evaluated;
      const double ht = std::abs(y);
      const double st = std::abs(est_st(y, t));
      const double tn = std::abs(est_tn(y, t));
      const double v = std::max(st - tn, tn - ht);
      if (v > slack) ++rep.violations;
      if (v > rep.max_violation) {
        rep.max_violation = v;
        rep.worst_y = y;
        rep.worst_t = t;
      }
    }
  }
  return rep;
}

}  // namespace postsel
