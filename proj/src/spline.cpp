#include <cmath>

#include "postsel/ebayes.hpp"
#include "postsel/errors.hpp"

namespace postsel {
namespace {

// Derivatives of (x - k)_+^3.
double cube_plus(double x, double k, int deriv) {
  const double u = x - k;
  if (u <= 0.0) return 0.0;
  switch (deriv) {
    case 0: return u * u * u;
    case 1: return 3.0 * u * u;
    default: return 6.0 * u;
  }
}

}  // namespace

NaturalCubicSpline::NaturalCubicSpline(std::vector<double> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 3) throw FitError("natural spline needs at least 3 knots");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1])) throw FitError("spline knots must be strictly increasing");
  }
}

void NaturalCubicSpline::eval(double x, int deriv, std::span<double> out) const {
  const std::size_t K = knots_.size();
  const double last = knots_[K - 1];
  const auto d = [&](std::size_t k) {
    return (cube_plus(x, knots_[k], deriv) - cube_plus(x, last, deriv)) / (last - knots_[k]);
  };
  out[0] = deriv == 0 ? x : (deriv == 1 ? 1.0 : 0.0);
  const double dk1 = d(K - 2);
  for (std::size_t k = 0; k + 2 < K; ++k) out[k + 1] = d(k) - dk1;
}

}  // namespace postsel
