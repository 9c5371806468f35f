#pragma once

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>

namespace kinetic_brw::numerics {

/// Adaptive tanh-sinh integral over [a, b]. The double-exponential rule
/// clusters nodes at the endpoints, so integrable endpoint singularities
/// such as log²(sin v) at v = 0 converge at the full tolerance.
template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-10, double* error = nullptr) {
  // The rule extends its node tables lazily, hence one instance per thread.
  thread_local boost::math::quadrature::tanh_sinh<double> rule;
  double err = 0.0;
  const double value = rule.integrate(f, a, b, tol, &err);
  if (error) *error = err;
  return value;
}

}  // namespace kinetic_brw::numerics
