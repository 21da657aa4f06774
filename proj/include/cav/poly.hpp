#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

namespace cav::poly {

/// Cubic c3*x^3 + c2*x^2 + c1*x + c0, evaluated with Horner's rule.
struct Cubic {
  double c3 = 0.0, c2 = 0.0, c1 = 0.0, c0 = 0.0;

  double operator()(double x) const { return ((c3 * x + c2) * x + c1) * x + c0; }
  double derivative(double x) const { return (3.0 * c3 * x + 2.0 * c2) * x + c1; }
  double second_derivative(double x) const { return 6.0 * c3 * x + 2.0 * c2; }
};

/// Real roots of a*x^2 + b*x + c in ascending order. Uses the cancellation-free
/// form of the quadratic formula; with |a| below `linear_tol` the equation is
/// solved as linear. A double root is reported once.
std::vector<double> quadratic_roots(double a, double b, double c,
                                    double linear_tol = 1e-12);

/// Smallest x in [lo, hi] with f(x) == 0 for the cubic, or nullopt. The
/// interval is split at the cubic's stationary points so each bracket is
/// monotone, then bisected to full double precision.
std::optional<double> smallest_root_in(const Cubic& f, double lo, double hi);

/// Bisection on a sign change of `f` over [lo, hi]; returns the end of the
/// final bracket where `f` has the sign of f(hi).
double bisect(const std::function<double(double)>& f, double lo, double hi,
              int iterations = 200);

}  // namespace cav::poly
