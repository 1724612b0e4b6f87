#pragma once

// Selection procedures on a vector of Gaussian observations and the affine
// descriptions {A y <= b} of the events they produce. Indices are 0-based.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "postsel/truncnorm.hpp"

namespace postsel {

enum class Procedure { FixedThreshold, TopK, BH };

const char* procedure_name(Procedure p);

struct SelectionOutcome {
  Procedure procedure = Procedure::FixedThreshold;
  std::size_t n = 0;
  // Procedure parameters. Only the field for `procedure` is meaningful.
  double lambda = 0.0;
  std::size_t K = 0;
  double q = 0.0;
  double sigma = 1.0;

  /// Selected indices, ordered by decreasing |y|.
  std::vector<std::size_t> selected;
  /// sign(y_i) for each selected index, aligned with `selected`.
  std::vector<int> signs;
  /// Realized truncation threshold on the data scale.
  double threshold = 0.0;
  /// TopK: index of the (K+1)-th largest |y| and its sign.
  std::optional<std::size_t> boundary_index;
  int boundary_sign = 0;
  /// BH: unselected indices ordered by decreasing |y|.
  std::vector<std::size_t> null_order;
  std::size_t k_hat = 0;

  bool contains(std::size_t i) const;
};

/// Indices sorted by decreasing |y|; equal values keep index order.
std::vector<std::size_t> abs_order(std::span<const double> y);

/// E = {i : |y_i| > lambda}.
SelectionOutcome select_fixed(std::span<const double> y, double lambda);
/// The K largest |y_i|. Throws TieAtBoundary if |y|_(K) == |y|_(K+1).
SelectionOutcome select_topk(std::span<const double> y, std::size_t K);
/// t_k = Phi^{-1}(1 - q k / (2n)) for k = 1..n (returned 0-based).
std::vector<double> bh_thresholds(std::size_t n, double q);
/// Two-sided BH step-up on y / sigma with closed comparison |y|_(k) >= t_k.
SelectionOutcome select_bh(std::span<const double> y, double q, double sigma = 1.0);

/// Dense row-major constraint matrix.
struct AffineConstraint {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> A;
  std::vector<double> b;

  double at(std::size_t r, std::size_t c) const { return A[r * cols + c]; }
};

/// Builds {A y <= b} for the event that produced `outcome`. Throws
/// ConsistencyError if `outcome` does not describe `y`.
AffineConstraint affine_build(const SelectionOutcome& outcome, std::span<const double> y);
/// A y <= b elementwise, exact comparison.
bool affine_verify(const AffineConstraint& c, std::span<const double> y);

/// True iff re-running the procedure of `outcome` on y reproduces its
/// conditioning tuple: (E, z_E) for every procedure, plus the boundary
/// index and sign for TopK, plus k_hat for BH with the recorded null order
/// admissible (|y_{pi(j)}| <= sigma t_{K+j}).
bool same_event(const SelectionOutcome& outcome, std::span<const double> y);
/// Stricter BH variant that also demands the sorted null order to match.
bool same_event_strict_order(const SelectionOutcome& outcome, std::span<const double> y);

/// Sign-unioned truncation region for a selected index.
TruncRegion truncation_for(const SelectionOutcome& outcome, std::size_t i);
/// Sign-conditioned bounds: [threshold, inf) for z_i = +1, (-inf, -threshold] otherwise.
Interval sign_conditioned_bounds(const SelectionOutcome& outcome, std::size_t i);

/// S_k = sum_{l<=k} t_l^r + sum_{l>k} |y|_(l)^r for k = 0..n.
std::vector<double> sk_profile(std::span<const double> y, double q, double r);
/// A local minimum k satisfies S_k <= S_{k-1} (or k = 0) and S_k < S_{k+1}
/// (or k = n).
std::size_t leftmost_local_min(std::span<const double> s);
std::size_t rightmost_local_min(std::span<const double> s);

}  // namespace postsel
