#include "cav/poly.hpp"

#include <algorithm>
#include <cmath>

namespace cav::poly {

std::vector<double> quadratic_roots(double a, double b, double c,
                                    double linear_tol) {
  std::vector<double> roots;
  if (a == 0.0 || std::abs(a) < linear_tol) {
    if (b != 0.0) roots.push_back(-c / b);
    return roots;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return roots;
  if (disc == 0.0) {
    roots.push_back(-b / (2.0 * a));
    return roots;
  }
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  roots.push_back(q / a);
  if (q != 0.0) roots.push_back(c / q);
  std::sort(roots.begin(), roots.end());
  return roots;
}

double bisect(const std::function<double(double)>& f, double lo, double hi,
              int iterations) {
  double flo = f(lo);
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return hi;
}

std::optional<double> smallest_root_in(const Cubic& f, double lo, double hi) {
  if (hi < lo) return std::nullopt;
  std::vector<double> knots{lo};
  for (double r : quadratic_roots(3.0 * f.c3, 2.0 * f.c2, f.c1))
    if (r > lo && r < hi) knots.push_back(r);
  knots.push_back(hi);

  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double a = knots[k], b = knots[k + 1];
    const double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa < 0.0) != (fb < 0.0)) {
      const double r = bisect([&f](double x) { return f(x); }, a, b);
      return std::abs(f(r)) <= std::abs(f(std::nextafter(r, a))) ? r
                                                                 : std::nextafter(r, a);
    }
  }
  return std::nullopt;
}

}  // namespace cav::poly
