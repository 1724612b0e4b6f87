#pragma once

// Empirical Bayes pieces for the normal means problem: Lindsay's method
// (Poisson regression of binned counts on a natural cubic spline basis),
// Tweedie's formula, local fdr, Efron's posterior moments and the GMLEB
// grid prior fitted by EM.

#include <cstddef>
#include <span>
#include <vector>

namespace postsel {

/// Natural cubic spline basis in the truncated-power form: x and
/// d_k(x) - d_{K-1}(x), k = 1..K-2, for K knots. No intercept column.
class NaturalCubicSpline {
 public:
  NaturalCubicSpline() = default;
  /// Knots must be strictly increasing, at least 3 of them.
  explicit NaturalCubicSpline(std::vector<double> knots);

  std::size_t size() const { return knots_.size() - 1; }
  const std::vector<double>& knots() const { return knots_; }

  /// Writes the size() basis values (deriv = 0), first or second derivatives.
  void eval(double x, int deriv, std::span<double> out) const;

 private:
  std::vector<double> knots_;
};

/// Log marginal density with analytic first and second derivatives.
class MarginalDensity {
 public:
  virtual ~MarginalDensity() = default;
  virtual double log_density(double x) const = 0;
  virtual double dlog(double x) const = 0;
  virtual double d2log(double x) const = 0;
};

class DensityFit : public MarginalDensity {
 public:
  std::vector<double> bin_edges;
  std::vector<double> bin_midpoints;
  std::vector<double> counts;
  /// Intercept followed by the spline coefficients (on scaled columns).
  std::vector<double> coeffs;
  /// Scale applied to each spline column before fitting.
  std::vector<double> col_scale;
  int df = 7;
  double log_normalizer = 0.0;
  NaturalCubicSpline spline;
  int irls_iterations = 0;
  double gradient_norm = 0.0;

  double lower() const { return bin_edges.front(); }
  double upper() const { return bin_edges.back(); }
  /// False when x lies outside the fitted range (the spline is then
  /// extrapolated linearly).
  bool in_range(double x) const { return x >= lower() && x <= upper(); }

  double log_density(double x) const override;
  double dlog(double x) const override;
  double d2log(double x) const override;

  /// Fitted Poisson means at the bin midpoints.
  std::vector<double> fitted_counts() const;

 private:
  double eta(double x, int deriv) const;
};

/// Lindsay's method. Range defaults to [min y - 0.5, max y + 0.5]. Knots sit
/// at equally spaced data quantiles. Throws FitError on degenerate knots or
/// if IRLS does not converge in 100 iterations.
DensityFit fit_lindsay(std::span<const double> y, int df = 7, int nbins = 120);
DensityFit fit_lindsay(std::span<const double> y, int df, int nbins, double lo, double hi);

/// Marginal of x = mu + N(0, sigma^2) under a finite Gaussian mixture prior
/// (variance 0 components are point masses).
class GaussianMixtureMarginal : public MarginalDensity {
 public:
  struct Component {
    double weight;
    double mean;
    double var;
  };
  GaussianMixtureMarginal(std::vector<Component> prior, double sigma);

  /// Prior 0.9 delta_0 + 0.1 N(-3, 1) with sigma = 1.
  static GaussianMixtureMarginal efron_example();

  double log_density(double x) const override;
  double dlog(double x) const override;
  double d2log(double x) const override;

 private:
  // Returns log f and writes f'/f and f''/f.
  double derivs(double x, double* d1, double* d2) const;
  std::vector<Component> marg_;
};

/// x + sigma^2 l'(x).
double tweedie_mean(const MarginalDensity& f, double x, double sigma);
/// min(1, pi0 phi(x) / f(x)) for unit noise.
double local_fdr(const MarginalDensity& f, double x, double pi0);

struct EfronMoments {
  double fdr;
  double mean;
  double var;
  /// var > 0; non-positive variances are data, not errors.
  bool valid;
};

/// Posterior mean and variance of mu given x and mu != 0. Throws DomainError
/// when fdr(x) = 1.
EfronMoments efron_moments(const MarginalDensity& f, double x, double pi0);

struct GridPrior {
  std::vector<double> support;
  std::vector<double> weights;
};

struct GmlebTrace {
  std::vector<double> loglik;
  int iterations = 0;
};

/// EM for mixing weights on an equally spaced grid covering
/// [min y - pad, max y + pad]. Stops when the log-likelihood gain drops
/// below 1e-8 or after max_iter. Throws InternalError if a step lowers the
/// log-likelihood by more than 1e-12 (relative).
GridPrior gmleb_fit(std::span<const double> y, double sigma, double grid_step, double pad = 1.0,
                    int max_iter = 2000, GmlebTrace* trace = nullptr);
/// Posterior mean of mu given x under the grid prior.
double gmleb_mean(const GridPrior& prior, double x, double sigma);

}  // namespace postsel
