#pragma once

// Seeded simulation experiments. Every result is a pure function of the
// configuration and seed: replicate r draws from the substream (seed, r), and
// replicates may run on several threads without changing any output.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "postsel/estimators.hpp"
#include "postsel/intervals.hpp"
#include "postsel/selection.hpp"
#include "postsel/stats.hpp"

namespace postsel {

/// Substream tags, so that data, bootstrap and Monte Carlo draws of one
/// replicate never share a stream.
enum class StreamTag : std::uint64_t { Data = 11, Bootstrap = 12, Risk = 13, Pivot = 14 };

struct SimConfig {
  std::size_t n = 1000;
  /// ceil(n^alpha) signals.
  double alpha = 0.15;
  double nu = 6.0;
  double sigma = 1.0;
  std::size_t S = 55;
  std::uint64_t seed = 0;
  std::vector<std::size_t> K_grid;
  std::vector<double> q_grid;
  std::vector<Method> methods{Method::TN, Method::HT, Method::ST};
  /// All means zero instead of the sparse design.
  bool global_null = false;
  /// Bootstrap sizes and fit settings; sigma and seed are set per replicate.
  EstimateOptions estimate;
  /// 0 means default_threads().
  std::size_t threads = 0;
};

/// Throws DomainError on an unusable configuration.
void validate(const SimConfig& cfg);

/// ceil(n^alpha), guarded against pow() landing just above an integer.
std::size_t signal_count(std::size_t n, double alpha);

struct SparseSample {
  std::vector<double> y;
  std::vector<double> mu;
};

/// ceil(n^alpha) means drawn N(nu, 1), placed at shuffled positions, plus
/// N(0, sigma^2) noise. Deterministic in (cfg.seed, replicate).
SparseSample gen_sparse_sample(const SimConfig& cfg, std::size_t replicate);

/// (1/K) sum_{k<=K} (est[r(k)] - mu[r(k)])^2. Throws DomainError for K = 0
/// or K > ranks.size().
double partial_mse(std::span<const double> estimates, std::span<const double> mu,
                   std::span<const std::size_t> ranks, std::size_t K);

struct WinnersCurseReport {
  std::size_t n = 0;
  std::size_t S = 0;
  /// Indexed by K - 1.
  std::vector<double> mean_raw, mean_js, mean_bc;
  std::vector<double> median_raw, median_js, median_bc;
  std::vector<double> approx_mean;
};

/// Global null: partial MSE of the raw order statistics, James-Stein and
/// the bias-corrected estimator over the first K absolute order statistics.
WinnersCurseReport winners_curse_demo(std::size_t n, std::size_t S, std::uint64_t seed,
                                      std::size_t threads = 0);

struct MSEReport {
  /// "K" or "q".
  std::string axis;
  std::vector<double> axis_values;
  std::vector<Method> methods;
  std::size_t replications = 0;
  /// [axis point][method]; NaN when every replicate was empty.
  std::vector<std::vector<double>> median;
  std::vector<std::vector<double>> mean;
  /// [axis point][method][replicate], empty replicates omitted.
  std::vector<std::vector<std::vector<double>>> values;
  /// Replicates with an empty selection, per axis point.
  std::vector<std::size_t> empty;
  /// Realized selection size per axis point and replicate.
  std::vector<std::vector<std::size_t>> selected;
};

/// MSE(K) over the top-K selection for every K in cfg.K_grid.
MSEReport run_topk_experiment(const SimConfig& cfg);
/// MSE(k_hat) over the BH(q) selection for every q in cfg.q_grid.
MSEReport run_bh_experiment(const SimConfig& cfg);

struct IntegratedCurve {
  std::string axis;
  std::vector<double> axis_values;
  std::vector<Method> methods;
  /// [axis point][method]: mean of the per-report medians.
  std::vector<std::vector<double>> values;
};

/// Pointwise mean of median curves. Throws DomainError on an empty list or
/// when axis grids or method lists differ.
IntegratedCurve integrated_mse(std::span<const MSEReport> reports);

struct EfronConfig {
  std::size_t n = 10000;
  std::size_t signals = 1000;
  double nu = -3.0;
  std::size_t S = 30;
  double q = 0.1;
  double p = 0.1;
  std::vector<CiMethod> methods{CiMethod::TN, CiMethod::BY, CiMethod::Fisher, CiMethod::Efron};
  std::uint64_t seed = 0;
  int lindsay_df = 7;
  int lindsay_nbins = 120;
  double pi0 = 0.9;
  /// Var1 is also scanned on this many grid points per side of the
  /// selected range.
  std::size_t var_grid = 200;
  std::size_t threads = 0;
};

struct EfronReplicate {
  std::size_t selected = 0;
  /// Aligned with EfronConfig::methods.
  std::vector<IntervalMetrics> metrics;
  std::vector<std::size_t> row_failures;
  bool fit_failed = false;
  std::string fit_error;
  /// Smallest Var1 over selected points and the scan grid.
  double min_var1 = 0.0;
  bool negative_var1 = false;
  std::size_t var1_points = 0;
  /// Points skipped because the fitted fdr was 1.
  std::size_t fdr_one_points = 0;
};

struct EfronReport {
  EfronConfig config;
  std::vector<EfronReplicate> replicates;
};

/// mu_i ~ N(nu, 1) for the first `signals` coordinates, zero elsewhere,
/// BH(q) selection and level-p intervals for each method.
EfronReport run_efron_experiment(const EfronConfig& cfg);

struct PivotConfig {
  std::size_t n = 100;
  Procedure procedure = Procedure::TopK;
  std::size_t K = 10;
  double q = 0.1;
  double lambda = 2.0;
  double sigma = 1.0;
  std::size_t S = 1000;
  std::uint64_t seed = 0;
  /// Means; empty is the global null.
  std::vector<double> mu;
  std::size_t threads = 0;
};

struct PivotReport {
  std::size_t pooled = 0;
  /// Pivots from the polyhedral (V-, V+) of the selection event.
  KsResult ks;
  /// Negative control: Phi((y - mu) / sigma), truncation ignored.
  KsResult naive;
};

/// (V-, V+) for coordinate i of y within {A y <= b}, direction e_i.
std::pair<double, double> polyhedral_bounds(const AffineConstraint& c, std::span<const double> y,
                                            std::size_t i);

/// Pools selective pivots at the true means over S replicates. Throws
/// DomainError if S < 1000 and InsufficientData below 100 pivots.
PivotReport pivot_uniformity(const PivotConfig& cfg);

enum class SparsitySpace { L0, WeakLp, StrongLp };

const char* space_name(SparsitySpace s);
SparsitySpace parse_space(const std::string& s);

struct RiskBoundSpec {
  SparsitySpace space = SparsitySpace::L0;
  double p = 0.0;
  double eta = 0.01;
  double q = 0.1;
  double r = 2.0;
  /// Weak-lp envelope constant.
  double C = 1.0;
  double slack = 0.25;
  /// Reject specs outside eta^p in [log^5 n / n, n^-delta] when set.
  bool enforce_window = false;
  double delta = 0.1;
};

struct RiskConstants {
  double tau = 0.0;
  double k_n = 0.0;
  double alpha_n = 0.0;
  double u = 1.0;
  double v = 2.0;
  double w = 0.0;
  double minimax = 0.0;
  double bound = 0.0;
};

/// Asymptotic minimax risk and the bound
/// 2^w R_n [v + u (2q - 1)_+ / (1 - q)].
RiskConstants risk_constants(const RiskBoundSpec& spec, std::size_t n);

/// The candidate configuration on the boundary of the space.
std::vector<double> risk_configuration(const RiskBoundSpec& spec, std::size_t n);

/// inf{k > 0 : sum_l P(|y_l| > t_k) = k} for y ~ N(mu, I), t_k the BH
/// thresholds extended to real k.
double k_of_mu(std::span<const double> mu, double q);

struct RiskBoundReport {
  RiskBoundSpec spec;
  std::size_t n = 0;
  std::size_t mc = 0;
  RiskConstants constants;
  double risk_tn = 0.0;
  double risk_ht = 0.0;
  double risk_st = 0.0;
  double ratio = 0.0;
  bool pass = false;
  /// Draws with ||TN - HT||_r^r > k_hat t_hat^r (1 + 1e-9).
  std::size_t decomposition_violations = 0;
  double max_decomposition_ratio = 0.0;
  /// Draws with ||TN - mu||^r > 2^{(r-1)_+} (k_hat t_hat^r + ||HT - mu||^r).
  std::size_t paired_violations = 0;
  double k_mu = 0.0;
  double k_minus = 0.0;
  double k_plus = 0.0;
  double sandwich_fraction = 0.0;
  double mean_k_hat = 0.0;
};

/// Monte Carlo l_r risk of the TN estimator at the BH(q) threshold
/// sigma t_{k_hat} on the configuration of `spec`, with sigma = 1.
RiskBoundReport risk_bound_check(const RiskBoundSpec& spec, std::size_t n, std::size_t mc,
                                 std::uint64_t seed, std::size_t threads = 0);

struct SqueezeReport {
  std::size_t points = 0;
  std::size_t evaluated = 0;
  std::size_t violations = 0;
  double max_violation = 0.0;
  double worst_y = 0.0;
  double worst_t = 0.0;
};

/// |ST| <= |TN| <= |HT| on a grid over y in [y_lo, y_hi], t in [0, t_hi]
/// for every point with |y| >= t. HT is taken as y at the boundary |y| = t,
/// where the coordinate is selected. A violation exceeds `slack`.
SqueezeReport squeeze_audit(std::size_t ny = 500, std::size_t nt = 500, double y_lo = -12.0,
                            double y_hi = 12.0, double t_hi = 10.0, double slack = 1e-9);

}  // namespace postsel
