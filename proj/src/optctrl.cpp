#include "cav/optctrl.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cav {

namespace {
constexpr double kMinHorizon = 1e-9;
constexpr double kBoundSlack = 1e-9;
}  // namespace

double OptimalProfile::c() const {
  return 0.5 * jerk_ * t0_ * t0_ - accel0_ * t0_ + v0_;
}

double OptimalProfile::d() const {
  return -jerk_ * t0_ * t0_ * t0_ / 6.0 + 0.5 * accel0_ * t0_ * t0_ - v0_ * t0_;
}

KinematicState OptimalProfile::eval_cubic(double t) const {
  const double x = t - t0_;
  return {((jerk_ / 6.0 * x + 0.5 * accel0_) * x + v0_) * x,
          (0.5 * jerk_ * x + accel0_) * x + v0_, jerk_ * x + accel0_};
}

KinematicState OptimalProfile::eval(double t) const {
  if (!(t >= t0_ && t <= tf_))
    throw OutOfDomain("profile evaluated at t=" + std::to_string(t) +
                      " outside [" + std::to_string(t0_) + ", " +
                      std::to_string(tf_) + "]");
  if (t <= tm_) return eval_cubic(t);
  return {L_ + vm_ * (t - tm_), vm_, 0.0};
}

poly::Cubic OptimalProfile::position_shifted() const {
  return {jerk_ / 6.0, 0.5 * accel0_, v0_, 0.0};
}

OptimalProfile solve_profile(double t0, double v0, double tm, double vm,
                             double L, double S) {
  if (!(v0 > 0.0) || !(vm > 0.0) || !(L > 0.0) || !(S >= 0.0))
    throw ParameterError("solve_profile requires v0, vm, L > 0 and S >= 0");
  const double T = tm - t0;
  if (!(T >= kMinHorizon))
    throw DegenerateHorizon("horizon tm - t0 = " + std::to_string(T) +
                            " s is too short");
  // Shifted unknowns: u(t0 + x) = jerk*x + accel0. The t0 rows of the 4x4
  // system fix c and d directly, leaving a 2x2 system in (jerk, accel0).
  const double dv = vm - v0;
  const double dp = L - v0 * T;
  const double jerk = 6.0 * (dv * T - 2.0 * dp) / (T * T * T);
  const double accel0 = (dv - 0.5 * jerk * T * T) / T;
  return profile_from_coefficients(jerk, accel0, t0, v0, tm, vm, L, S);
}

OptimalProfile profile_from_coefficients(double jerk, double accel0, double t0,
                                         double v0, double tm, double vm,
                                         double L, double S) {
  OptimalProfile p;
  p.jerk_ = jerk;
  p.accel0_ = accel0;
  p.t0_ = t0;
  p.v0_ = v0;
  p.tm_ = tm;
  p.vm_ = vm;
  p.L_ = L;
  p.S_ = S;
  p.tf_ = tm + S / vm;
  return p;
}

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::kVMin: return "V_MIN";
    case ViolationKind::kVMax: return "V_MAX";
    case ViolationKind::kUMin: return "U_MIN";
    case ViolationKind::kUMax: return "U_MAX";
  }
  return "?";
}

namespace {

// Sub-intervals of [0, T] where g(x) > 0, for g of degree <= 2 given by its
// coefficients. Sign changes are located analytically and each sub-interval is
// classified at its midpoint.
std::vector<std::pair<double, double>> positive_intervals(double a2, double a1,
                                                          double a0, double T) {
  std::vector<double> knots{0.0};
  for (double r : poly::quadratic_roots(a2, a1, a0, 0.0))
    if (r > 0.0 && r < T) knots.push_back(r);
  knots.push_back(T);
  auto g = [&](double x) { return (a2 * x + a1) * x + a0; };

  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double lo = knots[k], hi = knots[k + 1];
    bool positive = g(0.5 * (lo + hi)) > 0.0;
    if (lo == hi) positive = g(lo) > 0.0;
    if (!positive) continue;
    if (!out.empty() && out.back().second == lo)
      out.back().second = hi;
    else
      out.emplace_back(lo, hi);
  }
  // Degenerate horizon edge: a strict violation exactly at an endpoint only.
  if (out.empty()) {
    if (g(0.0) > 0.0) out.emplace_back(0.0, 0.0);
    else if (g(T) > 0.0) out.emplace_back(T, T);
  }
  return out;
}

}  // namespace

std::vector<ConstraintViolation> check_constraints(const OptimalProfile& profile,
                                                   const SystemParams& params) {
  const double T = profile.tm() - profile.t0();
  const double t0 = profile.t0();
  const double j = profile.a();
  const double u0 = profile.initial_control();
  const double v0 = profile.v0();

  std::vector<ConstraintViolation> out;
  auto emit = [&](ViolationKind kind, double a2, double a1, double a0) {
    for (auto [lo, hi] : positive_intervals(a2, a1, a0, T))
      out.push_back({kind, t0 + lo, t0 + hi});
  };
  // v(x) - (v_max + slack) > 0
  emit(ViolationKind::kVMax, 0.5 * j, u0, v0 - params.v_max - kBoundSlack);
  // (v_min - slack) - v(x) > 0
  emit(ViolationKind::kVMin, -0.5 * j, -u0, params.v_min - kBoundSlack - v0);
  emit(ViolationKind::kUMax, 0.0, j, u0 - params.u_max - kBoundSlack);
  emit(ViolationKind::kUMin, 0.0, -j, params.u_min - kBoundSlack - u0);
  return out;
}

double control_effort(const OptimalProfile& profile, double K) {
  // integral_0^T (j x + u0)^2 dx
  const double T = profile.tm() - profile.t0();
  const double j = profile.a();
  const double u0 = profile.initial_control();
  return 0.5 * K * (j * j * T * T * T / 3.0 + j * u0 * T * T + u0 * u0 * T);
}

}  // namespace cav
