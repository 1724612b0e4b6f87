#pragma once

// Confidence intervals for selected means and the false-coverage, width and
// skew summaries used to compare them.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "postsel/ebayes.hpp"
#include "postsel/selection.hpp"

namespace postsel {

struct Ci {
  double lower;
  double upper;
};

/// Inverts the truncated-Gaussian CDF in mu: F_L(y) = 1 - p/2 and
/// F_R(y) = p/2. The region is the two-sided tail |Y| >= t by default, or
/// the one-sided tail on the side of y when sign_conditioned is set.
/// Throws SolverError if no bracket exists within y +- 50 sigma.
Ci ci_tn(double y, double t, double sigma, double p, bool sign_conditioned = false);

/// mu-hat_TN -+ z_{p/2} / sqrt(I(mu-hat)), I = Var_trunc / sigma^4.
/// Throws InstabilityError when I < 1e-12.
Ci ci_fisher(double y, double t, double sigma, double p);

struct EfronCi {
  double lower;
  double upper;
  bool valid;
};

/// E1 -+ z_{p/2} sqrt(Var1). Invalid (NaN bounds) when Var1 <= 0.
EfronCi ci_efron(double x, const MarginalDensity& f, double pi0, double p);

enum class CiMethod { TN, BY, Fisher, Efron };

const char* ci_method_name(CiMethod m);
CiMethod parse_ci_method(const std::string& s);

struct IntervalReport {
  CiMethod method = CiMethod::TN;
  double level = 0.1;
  std::vector<std::size_t> indices;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<bool> valid;
  /// Rows whose computation threw (only with IntervalOptions::row_errors).
  std::vector<std::string> errors;
  std::size_t failures = 0;
};

/// Constant-width Bonferroni-style intervals y_i -+ sigma z_{p/(2|E|)}.
IntervalReport ci_by(std::span<const double> y, std::span<const std::size_t> E, double sigma,
                     double p);

struct IntervalOptions {
  double sigma = 1.0;
  bool sign_conditioned = false;
  /// Required by CiMethod::Efron.
  const MarginalDensity* marginal = nullptr;
  double pi0 = 0.9;
  /// Record per-row failures as invalid NaN rows instead of throwing.
  bool row_errors = false;
};

/// Intervals for every selected index of `outcome`.
IntervalReport intervals_selected(std::span<const double> y, const SelectionOutcome& outcome,
                                  CiMethod method, double p, const IntervalOptions& opt = {});

/// Min, octiles and max.
using NineNumber = std::array<double, 9>;
NineNumber nine_number_summary(std::vector<double> v);

struct IntervalMetrics {
  std::size_t count = 0;
  std::size_t valid = 0;
  std::size_t misses = 0;
  std::size_t upward_misses = 0;
  double invalid_rate = 0.0;
  double mean_width = 0.0;
  /// Share of valid intervals that miss their parameter.
  double fcp = 0.0;
  /// Share of misses with mu above the interval; absent without misses.
  std::optional<double> upward_miss_share;
  NineNumber width_summary{};
  NineNumber skew_summary{};
};

/// `mu` is aligned with report.indices. Invalid intervals are excluded from
/// every statistic except invalid_rate.
IntervalMetrics interval_metrics(const IntervalReport& report, std::span<const double> mu);

}  // namespace postsel
