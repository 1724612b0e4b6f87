#pragma once

// Point estimators of signal size after selection: the truncated-Gaussian
// conditional MLE and the competitors it is compared against.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "postsel/selection.hpp"

namespace postsel {

/// y if |y| > t else 0.
double est_ht(double y, double t);
/// sign(y) max(|y| - t, 0).
double est_st(double y, double t);

struct TnSolution {
  double mu = 0.0;
  int iterations = 0;
  /// |E[Y | mu, region] - y| at the returned mu.
  double residual = 0.0;
};

/// Solves E[Y | mu, sigma, |Y| >= t] = y for mu. Requires |y| >= t >= 0.
TnSolution est_tn_solve(double y, double t, double sigma = 1.0);
double est_tn(double y, double t, double sigma = 1.0);

/// (1 - (n-2) sigma^2 / ||y||^2) y, no positive-part truncation.
std::vector<double> est_js(std::span<const double> y, double sigma = 1.0);

/// Second-order approximation to E|Y|_(k) for n standard normals, k = 1
/// being the largest.
double approx_abs_orderstat_mean(std::size_t k, std::size_t n);
/// sign(y_i) (|y_i| - approx E|Y|_(rank of i)), aligned with y.
std::vector<double> est_bias_corrected(std::span<const double> y);

/// SURE for soft thresholding at t on the unit-variance scale.
double sure_risk(std::span<const double> y, double t);
/// Minimizer of sure_risk over [0, sqrt(2 log n)] for y / sigma, returned on
/// the data scale. The smallest minimizer wins ties.
double sure_threshold(std::span<const double> y, double sigma = 1.0);
std::vector<double> est_sure(std::span<const double> y, double sigma = 1.0);

enum class BootOrder { First, Second, Oracle };

struct BootstrapOptions {
  BootOrder order = BootOrder::First;
  std::size_t B = 1000;
  /// Outer and inner replicate counts of the second-order layer.
  std::size_t B2_outer = 200;
  std::size_t B2_inner = 200;
  double sigma = 1.0;
  /// Rank by signed values instead of absolute values.
  bool signed_ranks = false;
  std::uint64_t seed = 0;
};

/// Parametric bootstrap bias correction of the order statistics, aligned
/// with y. `true_mu` is required for BootOrder::Oracle.
std::vector<double> est_bootstrap(std::span<const double> y, const BootstrapOptions& opt,
                                  std::optional<std::span<const double>> true_mu = std::nullopt);

enum class Method { TN, HT, ST, JS, SURE, Boot1, Boot2, BootOracle, GMLEB, Tweedie, BC };

const char* method_name(Method m);
/// Parses the CLI spelling (tn, ht, st, js, sure, boot1, boot2, oracle,
/// gmleb, tweedie, bc). Throws DomainError on unknown names.
Method parse_method(const std::string& s);

struct EstimateOptions {
  double sigma = 1.0;
  std::optional<std::uint64_t> seed;
  std::size_t B = 1000;
  std::size_t B2_outer = 200;
  std::size_t B2_inner = 200;
  bool signed_ranks = false;
  /// Needed by BootOracle.
  std::vector<double> true_mu;
  int lindsay_df = 7;
  int lindsay_nbins = 120;
  /// GMLEB grid step as a fraction of sigma.
  double gmleb_step = 0.2;
  int gmleb_max_iter = 2000;
};

struct EstimateReport {
  Method method = Method::TN;
  /// Selected indices in selection order (decreasing |y|).
  std::vector<std::size_t> indices;
  std::vector<double> estimates;
  std::optional<double> threshold_used;
  /// Solver diagnostics, filled for TN only.
  std::vector<int> iterations;
  std::vector<double> residuals;
};

/// True for the methods that need a selection threshold (TN, HT, ST).
bool method_uses_threshold(Method m);

/// Full-length estimate vector for a method that does not depend on the
/// selection. Throws DomainError for TN, HT and ST.
std::vector<double> estimate_full(std::span<const double> y, Method method,
                                  const EstimateOptions& opt = {});

/// Estimates for the selected indices. Vector-valued methods run on the
/// full vector and are then restricted to the selection.
EstimateReport estimate_selected(std::span<const double> y, const SelectionOutcome& outcome,
                                 Method method, const EstimateOptions& opt = {});

}  // namespace postsel
