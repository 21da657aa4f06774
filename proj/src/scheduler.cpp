#include "cav/scheduler.hpp"

#include <cmath>
#include <string>

namespace cav {

std::string_view to_string(CaseTag c) {
  switch (c) {
    case CaseTag::kFirst: return "FIRST";
    case CaseTag::kRO: return "RO";
    case CaseTag::kL: return "L";
    case CaseTag::kC: return "C";
  }
  return "?";
}

ExitLowerBound exit_lower_bound(double t0, double v0, const SystemParams& params) {
  const double reach_sq = 2.0 * params.L * params.u_max + v0 * v0;
  const double vmax = params.v_max;
  if (reach_sq >= vmax * vmax) {
    const double dv = vmax - v0;
    return {t0 + (params.L + params.S) / vmax +
                dv * dv / (2.0 * params.u_max * vmax),
            vmax, true};
  }
  const double vm = std::sqrt(reach_sq);
  return {t0 + (vm - v0) / params.u_max + params.S / vm, vm, false};
}

ScheduleAssignment assign(std::optional<SubsetLabel> label,
                          const std::optional<ScheduleAssignment>& pred,
                          double t0, double v0, const SystemParams& params,
                          const std::optional<ScheduleAssignment>& lane_leader) {
  const ExitLowerBound bound = exit_lower_bound(t0, v0, params);
  ScheduleAssignment out;

  if (!pred || !label) {
    out.case_tag = CaseTag::kFirst;
    out.tf = bound.tc;
    out.vm = bound.vm;
    out.bound_active = true;
  } else {
    double candidate = pred->tf;
    switch (*label) {
      case SubsetLabel::kR:
      case SubsetLabel::kO:
        out.case_tag = CaseTag::kRO;
        break;
      case SubsetLabel::kL:
        out.case_tag = CaseTag::kL;
        candidate += params.delta / pred->vm;
        break;
      case SubsetLabel::kC:
        out.case_tag = CaseTag::kC;
        candidate += params.S / pred->vm;
        break;
    }
    if (candidate >= bound.tc) {
      out.tf = candidate;
      out.vm = pred->vm;
      out.bound_active = false;
    } else {
      out.tf = bound.tc;
      out.vm = bound.vm;
      out.bound_active = true;
    }
  }

  if (lane_leader) {
    const double t_lead = lane_leader->tf + params.delta / lane_leader->vm;
    if (t_lead > out.tf) {
      out.tf = t_lead;
      out.vm = lane_leader->vm;
      out.case_tag = CaseTag::kL;
      out.bound_active = false;
      out.leader_active = true;
    }
  }

  if (!(out.vm >= params.v_min && out.vm <= params.v_max))
    throw ScheduleInfeasible("assigned MZ speed " + std::to_string(out.vm) +
                             " m/s outside [v_min, v_max]");
  out.tm = out.tf - params.S / out.vm;
  return out;
}

}  // namespace cav
