#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace postsel {

double mean(std::span<const double> v);
/// Sample standard deviation (n - 1 denominator).
double sample_sd(std::span<const double> v);
double median(std::vector<double> v);

/// P(K > x) for the Kolmogorov limit distribution.
double kolmogorov_sf(double x);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// One-sample KS test against Unif(0, 1), with Stephens' small-sample
/// correction of the asymptotic p-value.
KsResult ks_uniform(std::vector<double> u);

/// Thread count from POSTSEL_THREADS, else the hardware concurrency.
std::size_t default_threads();

/// Runs f(0..count-1) on up to `threads` workers, each index at most once.
/// After the first exception, workers stop taking new indices and that
/// exception is rethrown once they have all joined.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& f);

}  // namespace postsel
