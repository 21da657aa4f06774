#pragma once

#include <optional>
#include <vector>

#include "cav/feasibility.hpp"
#include "cav/types.hpp"

namespace cav {

/// True iff (v_min - v_max)/u_B >= delta/v_min.
bool check_parameter_condition(double v_min, double v_max, double u_B, double delta);
bool check_parameter_condition(const SystemParams& params);

/// (v_min^2 - v_max^2) / (2 u_B). Throws ParameterError unless u_B < 0.
double fez_length(double v_min, double v_max, double u_B);
double fez_length(const SystemParams& params);

/// Distance covered while the speed changes from v_F to upsilon under the
/// constant control u. Throws InvalidManeuver when u cannot produce that
/// change (zero control or wrong sign).
double entry_distance(double v_F, double upsilon, double u);

struct FezDesign {
  double f_bar = 0.0;
  bool condition_ok = false;
  double worst_case_lag = 0.0;  // (v_min - v_max)/u_B
  double worst_case_speed = 0.0;

  /// Guaranteed-feasible CZ entry behind a leader that entered at tk0.
  std::pair<double, double> worst_case_target(double tk0) const {
    return {tk0 + worst_case_lag, worst_case_speed};
  }
};

FezDesign design_fez(const SystemParams& params);

struct FezSegment {
  double u = 0.0;         // [m/s^2]
  double duration = 0.0;  // [s]
};

struct FezPlan {
  VehicleId id = 0;
  double t_F = 0.0;
  double v_F = 0.0;
  double length = 0.0;
  std::vector<FezSegment> segments;
  double tau = 0.0;      // achieved CZ entry time
  double upsilon = 0.0;  // achieved CZ entry speed
  bool feasible = false;     // achieved entry keeps s_i >= delta
  bool constrained = false;  // the resulting CZ solution activates a bound
  bool fallback = false;     // worst-case manoeuvre was used
  std::optional<GapMinimum> minimum;

  struct State {
    double distance;  // since FEZ entry
    double v;
    double u;
  };
  /// State at t in [t_F, tau]; clamped to the end points outside.
  State state_at(double t) const;
};

/// Constant control followed by cruise: reach `upsilon` after `adjust_distance`
/// metres, then hold it to the end of the FEZ.
FezPlan two_segment_plan(double t_F, double v_F, double upsilon,
                         double adjust_distance, double length);

/// Decelerate at u_B down to v_min, then cruise at v_min to the CZ.
FezPlan worst_case_plan(double t_F, double v_F, double length,
                        const SystemParams& params);

struct FezRequest {
  VehicleId id = 0;
  double t_F = 0.0;
  double v_F = 0.0;
};

struct PlannerOptions {
  std::size_t n_upsilon = 50;
  std::size_t n_tau = 50;
  int refine_iterations = 40;
};

/// Chooses the FEZ manoeuvre for one vehicle given the committed state of
/// the vehicles ahead of it. Cruising through untouched is kept whenever it
/// already yields a feasible entry. Otherwise a lattice of reachable
/// (tau, upsilon) pairs is searched for the earliest feasible entry (ties:
/// fastest), refined by bisection on tau; if nothing qualifies the worst-case
/// manoeuvre is used. Throws CannotGuarantee if the parameter condition fails.
FezPlan plan_fez_control(const FezRequest& request, const FeasibilityContext& ctx,
                         PlannerOptions options = {});

}  // namespace cav
