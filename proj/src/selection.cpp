#include "postsel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "postsel/errors.hpp"
#include "postsel/normal.hpp"
#include "postsel/simd/kernels.hpp"

namespace postsel {
namespace {

int sign_of(double v) { return v < 0.0 ? -1 : 1; }

void fill_selected(SelectionOutcome& out, std::span<const double> y,
                   const std::vector<std::size_t>& order, std::size_t k) {
  out.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  out.signs.clear();
  for (std::size_t i : out.selected) out.signs.push_back(sign_of(y[i]));
  out.k_hat = k;
}

// (index, sign) pairs sorted by index, for set comparison.
std::vector<std::pair<std::size_t, int>> keyed(const SelectionOutcome& o) {
  std::vector<std::pair<std::size_t, int>> v;
  v.reserve(o.selected.size());
  for (std::size_t j = 0; j < o.selected.size(); ++j) v.emplace_back(o.selected[j], o.signs[j]);
  std::sort(v.begin(), v.end());
  return v;
}

SelectionOutcome rerun(const SelectionOutcome& o, std::span<const double> y) {
  switch (o.procedure) {
    case Procedure::FixedThreshold: return select_fixed(y, o.lambda);
    case Procedure::TopK: return select_topk(y, o.K);
    case Procedure::BH: return select_bh(y, o.q, o.sigma);
  }
  throw InternalError("unknown procedure");
}

void add_row(AffineConstraint& c, std::size_t col, double coef, double rhs) {
  c.A.resize(c.A.size() + c.cols, 0.0);
  c.A[c.rows * c.cols + col] = coef;
  c.b.push_back(rhs);
  ++c.rows;
}

void add_row2(AffineConstraint& c, std::size_t col1, double coef1, std::size_t col2, double coef2,
              double rhs) {
  add_row(c, col1, coef1, rhs);
  c.A[(c.rows - 1) * c.cols + col2] += coef2;
}

}  // namespace

const char* procedure_name(Procedure p) {
  switch (p) {
    case Procedure::FixedThreshold: return "fixed";
    case Procedure::TopK: return "topk";
    case Procedure::BH: return "bh";
  }
  return "unknown";
}

bool SelectionOutcome::contains(std::size_t i) const {
  return std::find(selected.begin(), selected.end(), i) != selected.end();
}

std::vector<std::size_t> abs_order(std::span<const double> y) {
  std::vector<std::size_t> idx(y.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(y[a]) > std::abs(y[b]); });
  return idx;
}

SelectionOutcome select_fixed(std::span<const double> y, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("select_fixed: lambda must be >= 0");
  SelectionOutcome out;
  out.procedure = Procedure::FixedThreshold;
  out.n = y.size();
  out.lambda = lambda;
  out.threshold = lambda;
  const auto order = abs_order(y);
  std::size_t k = 0;
  while (k < order.size() && std::abs(y[order[k]]) > lambda) ++k;
  fill_selected(out, y, order, k);
  return out;
}

SelectionOutcome select_topk(std::span<const double> y, std::size_t K) {
  const std::size_t n = y.size();
  if (K < 1 || K >= n) throw DomainError("select_topk: need 1 <= K <= n - 1");
  const auto order = abs_order(y);
  if (std::abs(y[order[K - 1]]) == std::abs(y[order[K]])) {
    throw TieAtBoundary("select_topk: |y|_(K) equals |y|_(K+1)");
  }
  SelectionOutcome out;
  out.procedure = Procedure::TopK;
  out.n = n;
  out.K = K;
  fill_selected(out, y, order, K);
  out.boundary_index = order[K];
  out.boundary_sign = sign_of(y[order[K]]);
  out.threshold = std::abs(y[order[K]]);
  return out;
}

std::vector<double> bh_thresholds(std::size_t n, double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("bh_thresholds: q must lie in (0, 1)");
  std::vector<double> t(n);
  for (std::size_t k = 1; k <= n; ++k) {
    const double tail = q * static_cast<double>(k) / (2.0 * static_cast<double>(n));
    t[k - 1] = tail >= 0.5 ? 0.0 : std_quantile_upper(tail);
  }
  return t;
}

SelectionOutcome select_bh(std::span<const double> y, double q, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("select_bh: sigma must be positive");
  const std::size_t n = y.size();
  if (n == 0) throw DomainError("select_bh: empty input");
  const auto t = bh_thresholds(n, q);
  const auto order = abs_order(y);
  std::size_t k_hat = 0;
  for (std::size_t k = n; k >= 1; --k) {
    if (std::abs(y[order[k - 1]]) / sigma >= t[k - 1]) {
      k_hat = k;
      break;
    }
  }
  SelectionOutcome out;
  out.procedure = Procedure::BH;
  out.n = n;
  out.q = q;
  out.sigma = sigma;
  fill_selected(out, y, order, k_hat);
  out.threshold = sigma * t[k_hat == 0 ? 0 : k_hat - 1];
  out.null_order.assign(order.begin() + static_cast<std::ptrdiff_t>(k_hat), order.end());
  return out;
}

bool same_event(const SelectionOutcome& o, std::span<const double> y) {
  if (y.size() != o.n) return false;
  SelectionOutcome r;
  try {
    r = rerun(o, y);
  } catch (const TieAtBoundary&) {
    return false;
  }
  if (keyed(r) != keyed(o)) return false;
  switch (o.procedure) {
    case Procedure::FixedThreshold: return true;
    case Procedure::TopK:
      return r.boundary_index == o.boundary_index && r.boundary_sign == o.boundary_sign;
    case Procedure::BH: {
      if (r.k_hat != o.k_hat) return false;
      const auto t = bh_thresholds(o.n, o.q);
      for (std::size_t j = 0; j < o.null_order.size(); ++j) {
        const double bound = o.sigma * t[o.k_hat + j];
        const double v = y[o.null_order[j]];
        if (!(v <= bound && -v <= bound)) return false;
      }
      return true;
    }
  }
  return false;
}

bool same_event_strict_order(const SelectionOutcome& o, std::span<const double> y) {
  if (!same_event(o, y)) return false;
  if (o.procedure != Procedure::BH) return true;
  return select_bh(y, o.q, o.sigma).null_order == o.null_order;
}

AffineConstraint affine_build(const SelectionOutcome& o, std::span<const double> y) {
  if (y.size() != o.n || o.selected.size() != o.signs.size() || !same_event(o, y)) {
    throw ConsistencyError("affine_build: outcome was not produced from this y");
  }
  const std::size_t n = o.n;
  AffineConstraint c;
  c.cols = n;
  switch (o.procedure) {
    case Procedure::FixedThreshold: {
      std::vector<std::size_t> rest;
      for (std::size_t j = 0; j < n; ++j) {
        if (!o.contains(j)) rest.push_back(j);
      }
      // |y_j| <= lambda as y_j / lambda <= 1; lambda = 0 pins y_j = 0.
      const double coef = o.lambda > 0.0 ? 1.0 / o.lambda : 1.0;
      const double rhs = o.lambda > 0.0 ? 1.0 : 0.0;
      for (std::size_t j : rest) add_row(c, j, coef, rhs);
      for (std::size_t j : rest) add_row(c, j, -coef, rhs);
      for (std::size_t k = 0; k < o.selected.size(); ++k) {
        add_row(c, o.selected[k], -static_cast<double>(o.signs[k]), -o.lambda);
      }
      break;
    }
    case Procedure::TopK: {
      const std::size_t r = *o.boundary_index;
      const double zg = o.boundary_sign;
      const auto order = abs_order(y);
      std::vector<std::size_t> h(order.begin() + static_cast<std::ptrdiff_t>(o.K + 1), order.end());
      for (std::size_t j : h) add_row2(c, j, 1.0, r, -zg, 0.0);
      for (std::size_t j : h) add_row2(c, j, -1.0, r, -zg, 0.0);
      for (std::size_t k = 0; k < o.selected.size(); ++k) {
        add_row2(c, o.selected[k], -static_cast<double>(o.signs[k]), r, zg, 0.0);
      }
      // With H empty nothing above fixes the sign of y_r.
      if (h.empty()) add_row(c, r, -zg, 0.0);
      break;
    }
    case Procedure::BH: {
      const auto t = bh_thresholds(n, o.q);
      for (std::size_t j = 0; j < o.null_order.size(); ++j) {
        add_row(c, o.null_order[j], 1.0, o.sigma * t[o.k_hat + j]);
      }
      for (std::size_t j = 0; j < o.null_order.size(); ++j) {
        add_row(c, o.null_order[j], -1.0, o.sigma * t[o.k_hat + j]);
      }
      for (std::size_t k = 0; k < o.selected.size(); ++k) {
        add_row(c, o.selected[k], -static_cast<double>(o.signs[k]), -o.threshold);
      }
      break;
    }
  }
  return c;
}

bool affine_verify(const AffineConstraint& c, std::span<const double> y) {
  if (y.size() != c.cols || c.b.size() != c.rows || c.A.size() != c.rows * c.cols) {
    throw DomainError("affine_verify: dimension mismatch");
  }
  std::vector<double> ay(c.rows);
  simd::gemv(c.A, c.rows, c.cols, y, ay);
  return simd::all_leq(ay, c.b);
}

TruncRegion truncation_for(const SelectionOutcome& o, std::size_t i) {
  if (!o.contains(i)) throw DomainError("truncation_for: index is not selected");
  return TruncRegion::two_sided(o.threshold);
}

Interval sign_conditioned_bounds(const SelectionOutcome& o, std::size_t i) {
  const auto it = std::find(o.selected.begin(), o.selected.end(), i);
  if (it == o.selected.end()) throw DomainError("sign_conditioned_bounds: index is not selected");
  const int z = o.signs[static_cast<std::size_t>(it - o.selected.begin())];
  constexpr double inf = std::numeric_limits<double>::infinity();
  return z > 0 ? Interval{o.threshold, inf} : Interval{-inf, -o.threshold};
}

std::vector<double> sk_profile(std::span<const double> y, double q, double r) {
  if (!(r > 0.0 && r <= 2.0)) throw DomainError("sk_profile: r must lie in (0, 2]");
  const std::size_t n = y.size();
  const auto t = bh_thresholds(n, q);
  const auto order = abs_order(y);
  std::vector<double> s(n + 1);
  double total = 0.0;
  for (std::size_t k = n; k-- > 0;) total += std::pow(std::abs(y[order[k]]), r);
  s[0] = total;
  for (std::size_t k = 1; k <= n; ++k) {
    s[k] = s[k - 1] + std::pow(t[k - 1], r) - std::pow(std::abs(y[order[k - 1]]), r);
  }
  return s;
}

namespace {
bool is_local_min(std::span<const double> s, std::size_t k) {
  const bool left = k == 0 || s[k] <= s[k - 1];
  const bool right = k + 1 == s.size() || s[k] < s[k + 1];
  return left && right;
}
}  // namespace

std::size_t leftmost_local_min(std::span<const double> s) {
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (is_local_min(s, k)) return k;
  }
  throw InternalError("profile has no local minimum");
}

std::size_t rightmost_local_min(std::span<const double> s) {
  for (std::size_t k = s.size(); k-- > 0;) {
    if (is_local_min(s, k)) return k;
  }
  throw InternalError("profile has no local minimum");
}

}  // namespace postsel
