#include "postsel/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "postsel/ebayes.hpp"
#include "postsel/errors.hpp"
#include "postsel/normal.hpp"
#include "postsel/rng.hpp"
#include "postsel/simd/kernels.hpp"
#include "postsel/truncnorm.hpp"

namespace postsel {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t resolve_threads(std::size_t t) { return t == 0 ? default_threads() : t; }

std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

// Squared error of `est` (aligned with E) against mu over E.
double mse_on(std::span<const std::size_t> E, std::span<const double> est,
              std::span<const double> mu) {
  double s = 0.0;
  for (std::size_t j = 0; j < E.size(); ++j) {
    const double d = est[j] - mu[E[j]];
    s += d * d;
  }
  return s / static_cast<double>(E.size());
}

// Per replicate: [axis point][method] MSE, NaN for an empty selection.
using ReplicateTable = std::vector<std::vector<double>>;

MSEReport aggregate(const std::string& axis, std::vector<double> axis_values,
                    const SimConfig& cfg, const std::vector<ReplicateTable>& reps,
                    const std::vector<std::vector<std::size_t>>& sizes) {
  MSEReport rep;
  rep.axis = axis;
  rep.axis_values = std::move(axis_values);
  rep.methods = cfg.methods;
  rep.replications = cfg.S;
  const std::size_t A = rep.axis_values.size();
  const std::size_t M = cfg.methods.size();
  rep.median.assign(A, std::vector<double>(M, kNaN));
  rep.mean.assign(A, std::vector<double>(M, kNaN));
  rep.values.assign(A, std::vector<std::vector<double>>(M));
  rep.empty.assign(A, 0);
  rep.selected.assign(A, std::vector<std::size_t>(cfg.S, 0));
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t r = 0; r < cfg.S; ++r) {
      rep.selected[a][r] = sizes[r][a];
      if (sizes[r][a] == 0) ++rep.empty[a];
      for (std::size_t m = 0; m < M; ++m) {
        if (std::isfinite(reps[r][a][m])) rep.values[a][m].push_back(reps[r][a][m]);
      }
    }
    for (std::size_t m = 0; m < M; ++m) {
      if (rep.values[a][m].empty()) continue;
      rep.median[a][m] = median(rep.values[a][m]);
      rep.mean[a][m] = mean(rep.values[a][m]);
    }
  }
  return rep;
}

// Shared body of the top-K and BH experiments. `select` maps (y, axis point)
// to an outcome.
template <typename Select>
MSEReport run_mse_experiment(const SimConfig& cfg, const std::string& axis,
                             std::vector<double> axis_values, Select select) {
  validate(cfg);
  const std::size_t A = axis_values.size();
  const std::size_t M = cfg.methods.size();
  std::vector<ReplicateTable> reps(cfg.S);
  std::vector<std::vector<std::size_t>> sizes(cfg.S);
  parallel_for(cfg.S, resolve_threads(cfg.threads), [&](std::size_t r) {
    const SparseSample s = gen_sparse_sample(cfg, r);
    EstimateOptions opt = cfg.estimate;
    opt.sigma = cfg.sigma;
    opt.seed = derive_seed(cfg.seed, {tag(StreamTag::Bootstrap), r});
    opt.true_mu = s.mu;
    // Selection-free methods are computed once per replicate.
    std::vector<std::vector<double>> full(M);
    for (std::size_t m = 0; m < M; ++m) {
      if (!method_uses_threshold(cfg.methods[m])) full[m] = estimate_full(s.y, cfg.methods[m], opt);
    }
    reps[r].assign(A, std::vector<double>(M, kNaN));
    sizes[r].assign(A, 0);
    std::vector<double> est;
    for (std::size_t a = 0; a < A; ++a) {
      const SelectionOutcome out = select(s.y, a);
      const auto& E = out.selected;
      sizes[r][a] = E.size();
      if (E.empty()) continue;
      const double t = out.threshold;
      for (std::size_t m = 0; m < M; ++m) {
        est.assign(E.size(), 0.0);
        for (std::size_t j = 0; j < E.size(); ++j) {
          const double yi = s.y[E[j]];
          switch (cfg.methods[m]) {
            case Method::TN: est[j] = est_tn(yi, t, cfg.sigma); break;
            case Method::HT: est[j] = yi; break;
            case Method::ST: est[j] = est_st(yi, t); break;
            default: est[j] = full[m][E[j]]; break;
          }
        }
        reps[r][a][m] = mse_on(E, est, s.mu);
      }
    }
  });
  return aggregate(axis, std::move(axis_values), cfg, reps, sizes);
}

}  // namespace

void validate(const SimConfig& cfg) {
  if (cfg.n < 2) throw DomainError("n must be at least 2");
  if (!(cfg.alpha >= 0.0 && cfg.alpha < 1.0)) throw DomainError("alpha must lie in [0, 1)");
  if (!(cfg.sigma > 0.0)) throw DomainError("sigma must be positive");
  if (cfg.S < 1) throw DomainError("S must be at least 1");
  if (!std::isfinite(cfg.nu)) throw DomainError("nu must be finite");
  if (cfg.methods.empty()) throw DomainError("method list is empty");
}

std::size_t signal_count(std::size_t n, double alpha) {
  const double x = std::pow(static_cast<double>(n), alpha);
  const double r = std::round(x);
  // pow() can return k + 1 ulp for exact powers; treat those as k.
  const double c = std::abs(x - r) <= 1e-9 * r ? r : std::ceil(x);
  return std::min(n, static_cast<std::size_t>(c));
}

SparseSample gen_sparse_sample(const SimConfig& cfg, std::size_t replicate) {
  validate(cfg);
  Rng rng = Rng::substream(cfg.seed, {tag(StreamTag::Data), replicate});
  SparseSample s;
  s.mu.assign(cfg.n, 0.0);
  if (!cfg.global_null) {
    const std::size_t k = signal_count(cfg.n, cfg.alpha);
    for (std::size_t i = 0; i < k; ++i) s.mu[i] = cfg.nu + rng.normal();
    for (std::size_t i = cfg.n - 1; i > 0; --i) {
      std::swap(s.mu[i], s.mu[rng.below(i + 1)]);
    }
  }
  s.y.resize(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) s.y[i] = s.mu[i] + cfg.sigma * rng.normal();
  return s;
}

double partial_mse(std::span<const double> estimates, std::span<const double> mu,
                   std::span<const std::size_t> ranks, std::size_t K) {
  if (K == 0) throw DomainError("partial_mse: K must be positive");
  if (K > ranks.size()) throw DomainError("partial_mse: K exceeds the number of ranks");
  if (estimates.size() != mu.size()) throw DomainError("partial_mse: size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double d = estimates[ranks[k]] - mu[ranks[k]];
    s += d * d;
  }
  return s / static_cast<double>(K);
}

WinnersCurseReport winners_curse_demo(std::size_t n, std::size_t S, std::uint64_t seed,
                                      std::size_t threads) {
  if (n < 10) throw DomainError("winners_curse_demo: n must be at least 10");
  if (S < 1) throw DomainError("winners_curse_demo: S must be at least 1");
  // curves[r][e][K - 1] for estimator e in raw, js, bc.
  std::vector<std::array<std::vector<double>, 3>> curves(S);
  parallel_for(S, resolve_threads(threads), [&](std::size_t r) {
    Rng rng = Rng::substream(seed, {tag(StreamTag::Data), r});
    std::vector<double> y(n);
    for (double& v : y) v = rng.normal();
    const auto ranks = abs_order(y);
    const std::array<std::vector<double>, 3> est{y, est_js(y), est_bias_corrected(y)};
    for (std::size_t e = 0; e < 3; ++e) {
      auto& c = curves[r][e];
      c.resize(n);
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double d = est[e][ranks[k]];
        s += d * d;
        c[k] = s / static_cast<double>(k + 1);
      }
    }
  });
  WinnersCurseReport rep;
  rep.n = n;
  rep.S = S;
  std::array<std::vector<double>*, 3> means{&rep.mean_raw, &rep.mean_js, &rep.mean_bc};
  std::array<std::vector<double>*, 3> medians{&rep.median_raw, &rep.median_js, &rep.median_bc};
  std::vector<double> col(S);
  for (std::size_t e = 0; e < 3; ++e) {
    means[e]->resize(n);
    medians[e]->resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t r = 0; r < S; ++r) col[r] = curves[r][e][k];
      (*means[e])[k] = mean(col);
      (*medians[e])[k] = median(col);
    }
  }
  rep.approx_mean.resize(n);
  for (std::size_t k = 0; k < n; ++k) rep.approx_mean[k] = approx_abs_orderstat_mean(k + 1, n);
  return rep;
}

MSEReport run_topk_experiment(const SimConfig& cfg) {
  if (cfg.K_grid.empty()) throw DomainError("top-K experiment needs a K grid");
  std::vector<std::size_t> grid = cfg.K_grid;
  std::sort(grid.begin(), grid.end());
  for (std::size_t K : grid) {
    if (K < 1 || K >= cfg.n) throw DomainError("K grid values must lie in [1, n - 1]");
  }
  std::vector<double> axis(grid.begin(), grid.end());
  return run_mse_experiment(cfg, "K", axis, [&](std::span<const double> y, std::size_t a) {
    return select_topk(y, grid[a]);
  });
}

MSEReport run_bh_experiment(const SimConfig& cfg) {
  if (cfg.q_grid.empty()) throw DomainError("BH experiment needs a q grid");
  std::vector<double> grid = cfg.q_grid;
  std::sort(grid.begin(), grid.end());
  for (double q : grid) {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("q grid values must lie in (0, 1)");
  }
  return run_mse_experiment(cfg, "q", grid, [&](std::span<const double> y, std::size_t a) {
    return select_bh(y, grid[a], cfg.sigma);
  });
}

IntegratedCurve integrated_mse(std::span<const MSEReport> reports) {
  if (reports.empty()) throw DomainError("integrated_mse: no reports");
  const MSEReport& first = reports.front();
  for (const MSEReport& r : reports) {
    if (r.axis != first.axis || r.axis_values != first.axis_values || r.methods != first.methods) {
      throw DomainError("integrated_mse: reports do not share an axis grid and method list");
    }
  }
  IntegratedCurve out;
  out.axis = first.axis;
  out.axis_values = first.axis_values;
  out.methods = first.methods;
  out.values.assign(first.axis_values.size(), std::vector<double>(first.methods.size(), 0.0));
  const double w = 1.0 / static_cast<double>(reports.size());
  for (const MSEReport& r : reports) {
    for (std::size_t a = 0; a < r.axis_values.size(); ++a) {
      for (std::size_t m = 0; m < r.methods.size(); ++m) out.values[a][m] += w * r.median[a][m];
    }
  }
  return out;
}

EfronReport run_efron_experiment(const EfronConfig& cfg) {
  if (cfg.n < 2 || cfg.signals > cfg.n) throw DomainError("efron experiment: need signals <= n");
  if (cfg.S < 1) throw DomainError("efron experiment: S must be at least 1");
  if (!(cfg.p > 0.0 && cfg.p < 1.0)) throw DomainError("efron experiment: p must lie in (0, 1)");
  if (cfg.methods.empty()) throw DomainError("efron experiment: method list is empty");
  EfronReport report;
  report.config = cfg;
  report.replicates.resize(cfg.S);
  parallel_for(cfg.S, resolve_threads(cfg.threads), [&](std::size_t r) {
    Rng rng = Rng::substream(cfg.seed, {tag(StreamTag::Data), r});
    std::vector<double> mu(cfg.n, 0.0);
    for (std::size_t i = 0; i < cfg.signals; ++i) mu[i] = cfg.nu + rng.normal();
    std::vector<double> y(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) y[i] = mu[i] + rng.normal();

    EfronReplicate& rep = report.replicates[r];
    const SelectionOutcome out = select_bh(y, cfg.q);
    rep.selected = out.selected.size();
    std::vector<double> mu_sel;
    for (std::size_t i : out.selected) mu_sel.push_back(mu[i]);

    std::optional<DensityFit> fit;
    try {
      fit = fit_lindsay(y, cfg.lindsay_df, cfg.lindsay_nbins);
    } catch (const FitError& e) {
      rep.fit_failed = true;
      rep.fit_error = e.what();
    }

    IntervalOptions io;
    io.pi0 = cfg.pi0;
    io.row_errors = true;
    if (fit) io.marginal = &*fit;
    for (CiMethod m : cfg.methods) {
      IntervalReport ir;
      if (m == CiMethod::Efron && !fit) {
        ir.method = m;
        ir.level = cfg.p;
        ir.indices = out.selected;
        ir.lower.assign(rep.selected, kNaN);
        ir.upper.assign(rep.selected, kNaN);
        ir.valid.assign(rep.selected, false);
        ir.failures = rep.selected;
      } else {
        ir = intervals_selected(y, out, m, cfg.p, io);
      }
      rep.metrics.push_back(interval_metrics(ir, mu_sel));
      rep.row_failures.push_back(ir.failures);
    }

    // Var1 over the selected points and a grid on each side of the
    // selected range.
    rep.min_var1 = kNaN;
    if (!fit || out.selected.empty()) return;
    std::vector<double> xs;
    double neg_lo = 0.0, neg_hi = -std::numeric_limits<double>::infinity();
    double pos_lo = std::numeric_limits<double>::infinity(), pos_hi = 0.0;
    for (std::size_t i : out.selected) {
      xs.push_back(y[i]);
      if (y[i] < 0.0) {
        neg_lo = std::min(neg_lo, y[i]);
        neg_hi = std::max(neg_hi, y[i]);
      } else {
        pos_lo = std::min(pos_lo, y[i]);
        pos_hi = std::max(pos_hi, y[i]);
      }
    }
    const auto add_grid = [&](double lo, double hi) {
      if (!(lo <= hi) || cfg.var_grid < 2) return;
      for (std::size_t g = 0; g < cfg.var_grid; ++g) {
        xs.push_back(lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(cfg.var_grid - 1));
      }
    };
    add_grid(neg_lo, neg_hi);
    add_grid(pos_lo, pos_hi);
    double mn = std::numeric_limits<double>::infinity();
    for (double x : xs) {
      try {
        const EfronMoments em = efron_moments(*fit, x, cfg.pi0);
        ++rep.var1_points;
        mn = std::min(mn, em.var);
      } catch (const DomainError&) {
        ++rep.fdr_one_points;
      }
    }
    if (rep.var1_points > 0) {
      rep.min_var1 = mn;
      rep.negative_var1 = mn <= 0.0;
    }
  });
  return report;
}

std::pair<double, double> polyhedral_bounds(const AffineConstraint& c, std::span<const double> y,
                                            std::size_t i) {
  if (y.size() != c.cols || i >= c.cols) throw DomainError("polyhedral_bounds: size mismatch");
  std::vector<double> Ay(c.rows);
  simd::gemv(c.A, c.rows, c.cols, y, Ay);
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < c.rows; ++j) {
    const double a = c.at(j, i);
    if (a == 0.0) continue;
    // a y_i <= b_j - (A y)_j + a y_i
    const double bound = (c.b[j] - (Ay[j] - a * y[i])) / a;
    if (a > 0.0) {
      hi = std::min(hi, bound);
    } else {
      lo = std::max(lo, bound);
    }
  }
  return {lo, hi};
}

PivotReport pivot_uniformity(const PivotConfig& cfg) {
  if (cfg.S < 1000) throw DomainError("pivot_uniformity: S must be at least 1000");
  if (cfg.n < 2 || !(cfg.sigma > 0.0)) throw DomainError("pivot_uniformity: bad n or sigma");
  if (!cfg.mu.empty() && cfg.mu.size() != cfg.n) throw DomainError("pivot_uniformity: mu size");
  std::vector<std::vector<double>> piv(cfg.S), naive(cfg.S);
  parallel_for(cfg.S, resolve_threads(cfg.threads), [&](std::size_t r) {
    Rng rng = Rng::substream(cfg.seed, {tag(StreamTag::Pivot), r});
    std::vector<double> mu = cfg.mu.empty() ? std::vector<double>(cfg.n, 0.0) : cfg.mu;
    std::vector<double> y(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) y[i] = mu[i] + cfg.sigma * rng.normal();
    SelectionOutcome out;
    switch (cfg.procedure) {
      case Procedure::TopK: out = select_topk(y, cfg.K); break;
      case Procedure::BH: out = select_bh(y, cfg.q, cfg.sigma); break;
      case Procedure::FixedThreshold: out = select_fixed(y, cfg.lambda); break;
    }
    if (out.selected.empty()) return;
    const AffineConstraint c = affine_build(out, y);
    for (std::size_t i : out.selected) {
      const auto [lo, hi] = polyhedral_bounds(c, y, i);
      piv[r].push_back(selective_pivot(y[i], mu[i], cfg.sigma * cfg.sigma, lo, hi));
      naive[r].push_back(std_cdf((y[i] - mu[i]) / cfg.sigma));
    }
  });
  std::vector<double> all, all_naive;
  for (std::size_t r = 0; r < cfg.S; ++r) {
    all.insert(all.end(), piv[r].begin(), piv[r].end());
    all_naive.insert(all_naive.end(), naive[r].begin(), naive[r].end());
  }
  if (all.size() < 100) {
    throw InsufficientData("pivot_uniformity: fewer than 100 pooled pivots (" +
                           std::to_string(all.size()) + ")");
  }
  PivotReport rep;
  rep.pooled = all.size();
  rep.ks = ks_uniform(std::move(all));
  rep.naive = ks_uniform(std::move(all_naive));
  return rep;
}

}  // namespace postsel
