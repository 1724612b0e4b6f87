// Parametric bootstrap bias correction of ranked observations.
//
// For rank k the bias of the k-th largest |Y| as an estimate of its own
// mean is estimated by resampling Y* ~ N(c, sigma^2 I) around a centre c:
//   bias_k = mean_b [ sign(Y*_i) (Y*_i - c_i) ],  i = index of rank k in Y*.
// The first-order estimate uses c = y, the oracle uses c = mu. The second
// order layer resamples around the first-order estimate and corrects the
// bias estimate by its own estimated bias.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "postsel/errors.hpp"
#include "postsel/estimators.hpp"
#include "postsel/rng.hpp"

namespace postsel {
namespace {

enum Stream : std::uint64_t { kFirst = 1, kOuter = 2, kInner = 3 };

std::vector<std::size_t> rank_order(std::span<const double> v, bool signed_ranks) {
  if (!signed_ranks) return abs_order(v);
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  return idx;
}

// Per-rank bias of the ranked sample around `centre`; replicate b draws from
// the substream derive(stream_seed, b).
std::vector<double> rank_bias(std::span<const double> centre, double sigma, std::size_t B,
                              bool signed_ranks, std::uint64_t stream_seed) {
  const std::size_t n = centre.size();
  std::vector<double> acc(n, 0.0);
  std::vector<double> ystar(n);
  for (std::size_t b = 0; b < B; ++b) {
    Rng rng = Rng::substream(stream_seed, {b});
    for (std::size_t i = 0; i < n; ++i) ystar[i] = centre[i] + sigma * rng.normal();
    const auto order = rank_order(ystar, signed_ranks);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = order[k];
      const double dev = ystar[i] - centre[i];
      acc[k] += signed_ranks ? dev : std::copysign(1.0, ystar[i]) * dev;
    }
  }
  for (double& a : acc) a /= static_cast<double>(B);
  return acc;
}

// Applies per-rank biases to y, returning values aligned with y.
std::vector<double> correct(std::span<const double> y, std::span<const double> bias,
                            bool signed_ranks) {
  const auto order = rank_order(y, signed_ranks);
  std::vector<double> out(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    const std::size_t i = order[k];
    out[i] = signed_ranks ? y[i] - bias[k] : std::copysign(std::abs(y[i]) - bias[k], y[i]);
  }
  return out;
}

}  // namespace

std::vector<double> est_bootstrap(std::span<const double> y, const BootstrapOptions& opt,
                                  std::optional<std::span<const double>> true_mu) {
  if (!(opt.sigma > 0.0)) throw DomainError("est_bootstrap: sigma must be positive");
  if (opt.order == BootOrder::Oracle && (!true_mu || true_mu->size() != y.size())) {
    throw DomainError("est_bootstrap: the oracle bootstrap needs true_mu of length n");
  }
  const bool sr = opt.signed_ranks;
  switch (opt.order) {
    case BootOrder::First:
    case BootOrder::Oracle: {
      if (opt.B < 100) throw DomainError("est_bootstrap: need B >= 100");
      const std::span<const double> centre = opt.order == BootOrder::First ? y : *true_mu;
      const auto bias = rank_bias(centre, opt.sigma, opt.B, sr, derive_seed(opt.seed, {kFirst}));
      return correct(y, bias, sr);
    }
    case BootOrder::Second: {
      if (opt.B2_outer < 1 || opt.B2_inner < 100) {
        throw DomainError("est_bootstrap: second order needs outer >= 1 and inner >= 100");
      }
      const auto b1 = rank_bias(y, opt.sigma, opt.B2_inner, sr, derive_seed(opt.seed, {kFirst}));
      const auto mu1 = correct(y, b1, sr);
      const std::size_t n = y.size();
      std::vector<double> mean_b2(n, 0.0);
      std::vector<double> ystar(n);
      for (std::size_t ob = 0; ob < opt.B2_outer; ++ob) {
        Rng rng = Rng::substream(opt.seed, {kOuter, ob});
        for (std::size_t i = 0; i < n; ++i) ystar[i] = mu1[i] + opt.sigma * rng.normal();
        const auto b2 =
            rank_bias(ystar, opt.sigma, opt.B2_inner, sr, derive_seed(opt.seed, {kInner, ob}));
        for (std::size_t k = 0; k < n; ++k) mean_b2[k] += b2[k];
      }
      // The bias estimate b1 is itself biased by about (mean b* - b1), so the
      // corrected bias is 2 b1 - mean b*.
      std::vector<double> bias(n);
      for (std::size_t k = 0; k < n; ++k) {
        bias[k] = 2.0 * b1[k] - mean_b2[k] / static_cast<double>(opt.B2_outer);
      }
      return correct(y, bias, sr);
    }
  }
  throw InternalError("unknown bootstrap order");
}

}  // namespace postsel
