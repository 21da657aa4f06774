#pragma once

#include <vector>

#include "cav/poly.hpp"
#include "cav/types.hpp"

namespace cav {

struct KinematicState {
  double p = 0.0;  // [m] since CZ entry
  double v = 0.0;  // [m/s]
  double u = 0.0;  // [m/s^2]
};

/// Energy-optimal CZ trajectory followed by constant-speed MZ traversal.
///
/// On [t0, tm] the control is affine, u(t) = a*t + b, so
///   v(t) = a/2 t^2 + b t + c,   p(t) = a/6 t^3 + b/2 t^2 + c t + d.
/// The absolute-time coefficients (a, b, c, d) are kept for reporting and for
/// the gap analysis; evaluation goes through the form shifted to t0, which is
/// much better conditioned when t0 is large.
class OptimalProfile {
 public:
  OptimalProfile() = default;

  double a() const { return jerk_; }
  double b() const { return accel0_ - jerk_ * t0_; }
  double c() const;
  double d() const;

  double t0() const { return t0_; }
  double v0() const { return v0_; }
  double tm() const { return tm_; }
  double tf() const { return tf_; }
  double vm() const { return vm_; }
  double L() const { return L_; }
  double S() const { return S_; }

  /// u(t0); the shifted control is u(t0 + x) = jerk*x + accel0.
  double initial_control() const { return accel0_; }

  /// State at t in [t0, tf]; throws OutOfDomain otherwise.
  KinematicState eval(double t) const;

  /// Polynomial branch evaluated at any t, ignoring the MZ cruise and the
  /// domain. Used to re-centre the leader cubic for gap construction.
  KinematicState eval_cubic(double t) const;

  /// Position on [t0, tm] as a cubic in (t - t0).
  poly::Cubic position_shifted() const;

  friend OptimalProfile solve_profile(double t0, double v0, double tm, double vm,
                                      double L, double S);
  friend OptimalProfile profile_from_coefficients(double jerk, double accel0,
                                                  double t0, double v0,
                                                  double tm, double vm,
                                                  double L, double S);

 private:
  double jerk_ = 0.0;    // a
  double accel0_ = 0.0;  // u(t0)
  double t0_ = 0.0, v0_ = 0.0, tm_ = 0.0, tf_ = 0.0, vm_ = 0.0;
  double L_ = 0.0, S_ = 0.0;
};

/// Boundary-value solve: p(t0)=0, v(t0)=v0, p(tm)=L, v(tm)=vm. The MZ exit is
/// tf = tm + S/vm. Throws DegenerateHorizon when tm - t0 < 1e-9 s and
/// ParameterError for non-positive speeds or lengths.
OptimalProfile solve_profile(double t0, double v0, double tm, double vm,
                             double L, double S);

/// Rebuilds a profile from stored shifted coefficients (JSON replay).
OptimalProfile profile_from_coefficients(double jerk, double accel0, double t0,
                                         double v0, double tm, double vm,
                                         double L, double S);

enum class ViolationKind { kVMin, kVMax, kUMin, kUMax };

std::string_view to_string(ViolationKind k);

struct ConstraintViolation {
  ViolationKind kind;
  double t_begin;
  double t_end;
};

/// Maximal intervals of [t0, tm] on which the unconstrained solution leaves the
/// speed or control box. Empty means the profile is admissible. Bounds are
/// compared with an absolute slack of 1e-9 so a profile that ends exactly on
/// v_max is not reported.
std::vector<ConstraintViolation> check_constraints(const OptimalProfile& profile,
                                                   const SystemParams& params);

/// 1/2 * K * integral of u^2 over [t0, tm].
double control_effort(const OptimalProfile& profile, double K = 1.0);

}  // namespace cav
