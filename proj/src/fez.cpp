#include "cav/fez.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

namespace cav {

bool check_parameter_condition(double v_min, double v_max, double u_B, double delta) {
  return (v_min - v_max) / u_B >= delta / v_min;
}

bool check_parameter_condition(const SystemParams& params) {
  return check_parameter_condition(params.v_min, params.v_max, params.u_B,
                                   params.delta);
}

double fez_length(double v_min, double v_max, double u_B) {
  if (!(u_B < 0.0)) throw ParameterError("u_B must be negative");
  return (v_min * v_min - v_max * v_max) / (2.0 * u_B);
}

double fez_length(const SystemParams& params) {
  return fez_length(params.v_min, params.v_max, params.u_B);
}

double entry_distance(double v_F, double upsilon, double u) {
  if (upsilon == v_F) return 0.0;
  if (u == 0.0 || (upsilon > v_F) != (u > 0.0))
    throw InvalidManeuver("control " + std::to_string(u) +
                          " cannot change speed from " + std::to_string(v_F) +
                          " to " + std::to_string(upsilon));
  return (upsilon * upsilon - v_F * v_F) / (2.0 * u);
}

FezDesign design_fez(const SystemParams& params) {
  FezDesign d;
  d.f_bar = fez_length(params);
  d.condition_ok = check_parameter_condition(params);
  d.worst_case_lag = (params.v_min - params.v_max) / params.u_B;
  d.worst_case_speed = params.v_min;
  return d;
}

FezPlan::State FezPlan::state_at(double t) const {
  double clock = t_F, dist = 0.0, v = v_F;
  if (t <= t_F) return {0.0, v_F, segments.empty() ? 0.0 : segments.front().u};
  for (const FezSegment& s : segments) {
    if (t <= clock + s.duration) {
      const double x = t - clock;
      return {dist + v * x + 0.5 * s.u * x * x, v + s.u * x, s.u};
    }
    dist += v * s.duration + 0.5 * s.u * s.duration * s.duration;
    v += s.u * s.duration;
    clock += s.duration;
  }
  return {length, upsilon, 0.0};
}

FezPlan two_segment_plan(double t_F, double v_F, double upsilon,
                         double adjust_distance, double length) {
  FezPlan plan;
  plan.t_F = t_F;
  plan.v_F = v_F;
  plan.length = length;
  plan.upsilon = upsilon;
  double elapsed = 0.0;
  if (upsilon != v_F && adjust_distance > 0.0) {
    const double u = (upsilon * upsilon - v_F * v_F) / (2.0 * adjust_distance);
    const double dur = 2.0 * adjust_distance / (upsilon + v_F);
    plan.segments.push_back({u, dur});
    elapsed += dur;
  } else {
    adjust_distance = 0.0;
    plan.upsilon = upsilon = v_F;
  }
  const double rest = length - adjust_distance;
  if (rest > 0.0) {
    plan.segments.push_back({0.0, rest / upsilon});
    elapsed += rest / upsilon;
  }
  plan.tau = t_F + elapsed;
  return plan;
}

FezPlan worst_case_plan(double t_F, double v_F, double length,
                        const SystemParams& params) {
  if (v_F <= params.v_min) return two_segment_plan(t_F, v_F, v_F, 0.0, length);
  const double d = entry_distance(v_F, params.v_min, params.u_B);
  if (d > length * (1.0 + 1e-12))
    throw CannotGuarantee("v_min is not reachable within the FEZ at u_B");
  FezPlan plan = two_segment_plan(t_F, v_F, params.v_min, std::min(d, length), length);
  plan.fallback = true;
  return plan;
}

namespace {

struct Candidate {
  double tau;
  double upsilon;
};

// CZ entry time of the two-segment plan reaching `upsilon` after distance d.
double entry_time(double t_F, double v_F, double upsilon, double d, double f) {
  return t_F + 2.0 * d / (upsilon + v_F) + (f - d) / upsilon;
}

double adjust_distance_for(double t_F, double v_F, double upsilon, double tau,
                           double f) {
  const double slope = 2.0 / (upsilon + v_F) - 1.0 / upsilon;
  return (tau - t_F - f / upsilon) / slope;
}

void attach_verdict(FezPlan& plan, const FeasibilityContext& ctx) {
  const FeasibilityVerdict v = is_feasible(plan.tau, plan.upsilon, ctx);
  plan.feasible = v.status() != FeasibilityVerdict::Status::kError && v.gap_ok;
  plan.constrained = v.constrained;
  plan.minimum = v.minimum;
}

}  // namespace

FezPlan plan_fez_control(const FezRequest& request, const FeasibilityContext& ctx,
                         PlannerOptions options) {
  const SystemParams& prm = ctx.params;
  if (!check_parameter_condition(prm))
    throw CannotGuarantee("parameter condition (v_min - v_max)/u_B >= delta/v_min fails");
  const double f = prm.fez_length;
  const double t_F = request.t_F, v_F = request.v_F;

  auto admissible = [&](double tau, double upsilon) {
    const FeasibilityVerdict v = is_feasible(tau, upsilon, ctx);
    return v.status() != FeasibilityVerdict::Status::kError && v.gap_ok;
  };
  auto finish = [&](FezPlan plan) {
    plan.id = request.id;
    attach_verdict(plan, ctx);
    return plan;
  };

  const FezPlan cruise = two_segment_plan(t_F, v_F, v_F, 0.0, f);
  if (admissible(cruise.tau, cruise.upsilon)) return finish(cruise);

  const double up_lo =
      std::max(prm.v_min, std::sqrt(std::max(0.0, v_F * v_F + 2.0 * prm.u_B * f)));
  const double up_hi = std::min(prm.v_max, std::sqrt(v_F * v_F + 2.0 * prm.u_max * f));

  std::optional<Candidate> best;
  std::optional<double> best_below;  // previous lattice tau on the winning row
  const std::size_t nu = std::max<std::size_t>(options.n_upsilon, 2);
  const std::size_t nt = std::max<std::size_t>(options.n_tau, 2);
  for (std::size_t iu = 0; iu < nu; ++iu) {
    const double up = up_lo + (up_hi - up_lo) * static_cast<double>(iu) /
                                  static_cast<double>(nu - 1);
    if (std::abs(up - v_F) < 1e-9) continue;  // covered by the cruise plan
    const double u_lim = up > v_F ? prm.u_max : prm.u_B;
    const double d_min = std::min(f, entry_distance(v_F, up, u_lim));
    const double tau_a = entry_time(t_F, v_F, up, d_min, f);
    const double tau_b = entry_time(t_F, v_F, up, f, f);
    const double lo = std::min(tau_a, tau_b), hi = std::max(tau_a, tau_b);
    std::optional<double> prev;
    for (std::size_t it = 0; it < nt; ++it) {
      const double tau =
          lo + (hi - lo) * static_cast<double>(it) / static_cast<double>(nt - 1);
      if (best && tau > best->tau) break;
      if (admissible(tau, up)) {
        const bool better = !best || tau < best->tau ||
                            (tau == best->tau && up > best->upsilon);
        if (better) {
          best = Candidate{tau, up};
          best_below = prev;
        }
        break;
      }
      prev = tau;
    }
  }

  if (best) {
    double tau = best->tau;
    if (best_below) {
      double lo = *best_below, hi = tau;
      for (int k = 0; k < options.refine_iterations; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (admissible(mid, best->upsilon)) hi = mid;
        else lo = mid;
      }
      tau = hi;
    }
    const double d = std::clamp(adjust_distance_for(t_F, v_F, best->upsilon, tau, f),
                                0.0, f);
    FezPlan plan = two_segment_plan(t_F, v_F, best->upsilon, d, f);
    plan = finish(plan);
    if (plan.feasible) return plan;
    // Rounding in the manoeuvre reconstruction moved the entry off the
    // verified point; fall back to the lattice node itself.
    const double d_node = std::clamp(
        adjust_distance_for(t_F, v_F, best->upsilon, best->tau, f), 0.0, f);
    FezPlan node = finish(two_segment_plan(t_F, v_F, best->upsilon, d_node, f));
    if (node.feasible) return node;
  }

  spdlog::debug("vehicle {}: no feasible entry on the lattice, using the worst-case manoeuvre",
                request.id);
  return finish(worst_case_plan(t_F, v_F, f, prm));
}

}  // namespace cav
