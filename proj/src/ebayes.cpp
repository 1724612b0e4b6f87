#include "postsel/ebayes.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "postsel/errors.hpp"
#include "postsel/normal.hpp"
#include "postsel/simd/kernels.hpp"

namespace postsel {
namespace {

constexpr int kIrlsMaxIter = 100;
constexpr double kIrlsGradTol = 1e-8;

// Type-7 sample quantile of sorted data.
double quantile_sorted(const std::vector<double>& s, double p) {
  const double h = p * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

// 5-point Gauss-Legendre nodes and weights on [-1, 1].
constexpr std::array<double, 5> kGlNodes{-0.9061798459386640, -0.5384693101056831, 0.0,
                                         0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGlWeights{0.2369268850561891, 0.4786286704993665,
                                           0.5688888888888889, 0.4786286704993665,
                                           0.2369268850561891};

}  // namespace

double DensityFit::eta(double x, int deriv) const {
  std::vector<double> basis(spline.size());
  spline.eval(x, deriv, basis);
  double v = deriv == 0 ? coeffs[0] : 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) v += coeffs[k + 1] * basis[k] / col_scale[k];
  return v;
}

double DensityFit::log_density(double x) const { return eta(x, 0) + log_normalizer; }
double DensityFit::dlog(double x) const { return eta(x, 1); }
double DensityFit::d2log(double x) const { return eta(x, 2); }

std::vector<double> DensityFit::fitted_counts() const {
  std::vector<double> mu(bin_midpoints.size());
  for (std::size_t j = 0; j < mu.size(); ++j) mu[j] = std::exp(eta(bin_midpoints[j], 0));
  return mu;
}

DensityFit fit_lindsay(std::span<const double> y, int df, int nbins) {
  if (y.empty()) throw DomainError("fit_lindsay: empty sample");
  const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  return fit_lindsay(y, df, nbins, *mn - 0.5, *mx + 0.5);
}

DensityFit fit_lindsay(std::span<const double> y, int df, int nbins, double lo, double hi) {
  if (df < 3) throw DomainError("fit_lindsay: df must be >= 3");
  if (nbins < df + 2) throw DomainError("fit_lindsay: need nbins >= df + 2");
  if (y.empty()) throw DomainError("fit_lindsay: empty sample");
  if (!(lo < hi)) throw DomainError("fit_lindsay: empty range");
  for (double v : y) {
    if (!(v >= lo && v <= hi)) throw DomainError("fit_lindsay: range does not cover the data");
  }

  DensityFit fit;
  fit.df = df;
  const auto nb = static_cast<std::size_t>(nbins);
  const double width = (hi - lo) / nbins;
  fit.bin_edges.resize(nb + 1);
  for (std::size_t j = 0; j <= nb; ++j) fit.bin_edges[j] = lo + width * static_cast<double>(j);
  fit.bin_edges[nb] = hi;
  fit.bin_midpoints.resize(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    fit.bin_midpoints[j] = 0.5 * (fit.bin_edges[j] + fit.bin_edges[j + 1]);
  }
  fit.counts.assign(nb, 0.0);
  for (double v : y) {
    const auto j = static_cast<std::size_t>(std::min<double>(std::floor((v - lo) / width), nb - 1));
    fit.counts[j] += 1.0;
  }

  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> knots(static_cast<std::size_t>(df) + 1);
  for (int k = 0; k <= df; ++k) knots[static_cast<std::size_t>(k)] = quantile_sorted(sorted, double(k) / df);
  fit.spline = NaturalCubicSpline(knots);

  const std::size_t p = fit.spline.size();
  Eigen::MatrixXd X(nb, p + 1);
  std::vector<double> basis(p);
  for (std::size_t j = 0; j < nb; ++j) {
    X(j, 0) = 1.0;
    fit.spline.eval(fit.bin_midpoints[j], 0, basis);
    for (std::size_t k = 0; k < p; ++k) X(j, k + 1) = basis[k];
  }
  fit.col_scale.resize(p);
  for (std::size_t k = 0; k < p; ++k) {
    const double s = X.col(k + 1).cwiseAbs().maxCoeff();
    if (!(s > 0.0)) throw FitError("fit_lindsay: spline column vanishes on the bins");
    fit.col_scale[k] = s;
    X.col(k + 1) /= s;
  }

  const Eigen::Map<const Eigen::VectorXd> c(fit.counts.data(), static_cast<Eigen::Index>(nb));
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p + 1));
  const auto loglik = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = X * b;
    return c.dot(eta) - eta.array().exp().sum();
  };
  double ll = loglik(beta);
  bool converged = false;
  for (int it = 0; it < kIrlsMaxIter; ++it) {
    const Eigen::VectorXd mu = (X * beta).array().exp();
    const Eigen::VectorXd grad = X.transpose() * (c - mu);
    fit.irls_iterations = it;
    fit.gradient_norm = grad.lpNorm<Eigen::Infinity>();
    if (fit.gradient_norm <= kIrlsGradTol) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd H = X.transpose() * mu.asDiagonal() * X;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    const Eigen::VectorXd step = ldlt.solve(grad);
    if (!step.allFinite()) break;
    // Step halving keeps the early iterations from overflowing exp().
    double s = 1.0;
    Eigen::VectorXd next = beta + step;
    double ll_next = loglik(next);
    while (!(ll_next >= ll) && s > 1e-12) {
      s *= 0.5;
      next = beta + s * step;
      ll_next = loglik(next);
    }
    if (!(ll_next >= ll)) break;
    beta = next;
    ll = ll_next;
  }
  if (!converged) throw FitError("fit_lindsay: IRLS did not converge");
  fit.coeffs.assign(beta.data(), beta.data() + beta.size());

  // Normalize over the binned range by composite Gauss-Legendre quadrature.
  const std::size_t panels = 4 * nb;
  const double h = (hi - lo) / static_cast<double>(panels);
  std::vector<double> etas;
  std::vector<double> wts;
  etas.reserve(panels * kGlNodes.size());
  wts.reserve(panels * kGlNodes.size());
  fit.log_normalizer = 0.0;
  for (std::size_t j = 0; j < panels; ++j) {
    const double mid = lo + (static_cast<double>(j) + 0.5) * h;
    for (std::size_t g = 0; g < kGlNodes.size(); ++g) {
      etas.push_back(fit.log_density(mid + 0.5 * h * kGlNodes[g]));
      wts.push_back(0.5 * h * kGlWeights[g]);
    }
  }
  const double emax = *std::max_element(etas.begin(), etas.end());
  double total = 0.0;
  for (std::size_t i = 0; i < etas.size(); ++i) total += wts[i] * std::exp(etas[i] - emax);
  fit.log_normalizer = -(emax + std::log(total));
  return fit;
}

GaussianMixtureMarginal::GaussianMixtureMarginal(std::vector<Component> prior, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("mixture marginal: sigma must be positive");
  for (const auto& c : prior) {
    if (!(c.weight > 0.0) || !(c.var >= 0.0)) throw DomainError("mixture marginal: bad component");
    marg_.push_back({c.weight, c.mean, c.var + sigma * sigma});
  }
  if (marg_.empty()) throw DomainError("mixture marginal: no components");
}

GaussianMixtureMarginal GaussianMixtureMarginal::efron_example() {
  return GaussianMixtureMarginal({{0.9, 0.0, 0.0}, {0.1, -3.0, 1.0}}, 1.0);
}

double GaussianMixtureMarginal::derivs(double x, double* d1, double* d2) const {
  std::vector<double> lt(marg_.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < marg_.size(); ++j) {
    const auto& c = marg_[j];
    const double z = x - c.mean;
    lt[j] = std::log(c.weight) - 0.5 * std::log(c.var) - kLogSqrt2Pi - 0.5 * z * z / c.var;
    top = std::max(top, lt[j]);
  }
  double f0 = 0.0;
  double f1 = 0.0;
  double f2 = 0.0;
  for (std::size_t j = 0; j < marg_.size(); ++j) {
    const auto& c = marg_[j];
    const double e = std::exp(lt[j] - top);
    const double g = -(x - c.mean) / c.var;
    f0 += e;
    f1 += e * g;
    f2 += e * (g * g - 1.0 / c.var);
  }
  if (d1 != nullptr) *d1 = f1 / f0;
  if (d2 != nullptr) *d2 = f2 / f0;
  return top + std::log(f0);
}

double GaussianMixtureMarginal::log_density(double x) const { return derivs(x, nullptr, nullptr); }

double GaussianMixtureMarginal::dlog(double x) const {
  double d1;
  derivs(x, &d1, nullptr);
  return d1;
}

double GaussianMixtureMarginal::d2log(double x) const {
  double d1;
  double d2;
  derivs(x, &d1, &d2);
  return d2 - d1 * d1;
}

double tweedie_mean(const MarginalDensity& f, double x, double sigma) {
  return x + sigma * sigma * f.dlog(x);
}

double local_fdr(const MarginalDensity& f, double x, double pi0) {
  if (!(pi0 > 0.0 && pi0 <= 1.0)) throw DomainError("local_fdr: pi0 must lie in (0, 1]");
  const double r = std::exp(std::log(pi0) + std_log_pdf(x) - f.log_density(x));
  return std::isnan(r) ? 1.0 : std::min(1.0, r);
}

EfronMoments efron_moments(const MarginalDensity& f, double x, double pi0) {
  const double fdr = local_fdr(f, x, pi0);
  if (!(fdr < 1.0)) throw DomainError("efron_moments: fdr(x) = 1");
  EfronMoments m;
  m.fdr = fdr;
  m.mean = (x + f.dlog(x)) / (1.0 - fdr);
  m.var = (1.0 + f.d2log(x)) / (1.0 - fdr) - fdr * m.mean * m.mean;
  m.valid = m.var > 0.0;
  return m;
}

GridPrior gmleb_fit(std::span<const double> y, double sigma, double grid_step, double pad,
                    int max_iter, GmlebTrace* trace) {
  if (y.empty()) throw DomainError("gmleb_fit: empty sample");
  if (!(sigma > 0.0) || !(grid_step > 0.0) || !(pad >= 0.0)) {
    throw DomainError("gmleb_fit: sigma, grid step and pad must be positive");
  }
  const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  const double lo = *mn - pad;
  const auto m = static_cast<std::size_t>(std::ceil((*mx + pad - lo) / grid_step)) + 1;
  GridPrior prior;
  prior.support.resize(m);
  for (std::size_t j = 0; j < m; ++j) prior.support[j] = lo + grid_step * static_cast<double>(j);
  prior.weights.assign(m, 1.0 / static_cast<double>(m));

  const std::size_t n = y.size();
  std::vector<double> K(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) K[i * m + j] = std_pdf((y[i] - prior.support[j]) / sigma);
  }
  std::vector<double> denom(n);
  std::vector<double> inv(n);
  std::vector<double> acc(m);
  const double inv_n = 1.0 / static_cast<double>(n);
  double ll_prev = -std::numeric_limits<double>::infinity();
  int it = 0;
  for (;; ++it) {
    simd::gemv(K, n, m, prior.weights, denom);
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ll += std::log(denom[i]);
      inv[i] = 1.0 / denom[i];
    }
    if (trace != nullptr) trace->loglik.push_back(ll);
    if (it > 0) {
      const double gain = ll - ll_prev;
      if (gain < -1e-12 * std::max(1.0, std::abs(ll))) {
        throw InternalError("gmleb_fit: EM step decreased the log-likelihood");
      }
      if (gain < 1e-8) break;
    }
    if (it >= max_iter) break;
    ll_prev = ll;
    std::fill(acc.begin(), acc.end(), 0.0);
    simd::gemv_t_acc(K, n, m, inv, acc);
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      prior.weights[j] *= acc[j] * inv_n;
      total += prior.weights[j];
    }
    for (double& w : prior.weights) w /= total;
  }
  if (trace != nullptr) trace->iterations = it;
  return prior;
}

double gmleb_mean(const GridPrior& prior, double x, double sigma) {
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> lt(prior.support.size());
  for (std::size_t j = 0; j < lt.size(); ++j) {
    const double z = (x - prior.support[j]) / sigma;
    lt[j] = prior.weights[j] > 0.0 ? std::log(prior.weights[j]) - 0.5 * z * z
                                   : -std::numeric_limits<double>::infinity();
    top = std::max(top, lt[j]);
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < lt.size(); ++j) {
    const double e = std::exp(lt[j] - top);
    num += e * prior.support[j];
    den += e;
  }
  return num / den;
}

}  // namespace postsel
