#pragma once

#include <optional>
#include <string_view>

#include "cav/types.hpp"

namespace cav {

enum class CaseTag : std::uint8_t { kFirst, kRO, kL, kC };

std::string_view to_string(CaseTag c);

struct ScheduleAssignment {
  double tf = 0.0;  // MZ exit [s]
  double tm = 0.0;  // MZ entry [s]
  double vm = 0.0;  // MZ speed [m/s]
  CaseTag case_tag = CaseTag::kFirst;
  bool bound_active = false;  // the physical lower bound won the max
  bool leader_active = false;  // the same-lane leader's separation won the max
};

/// Earliest possible MZ exit: full acceleration from v0 up to v_max (or up to
/// whatever speed is reachable within L), then cruise to the MZ exit.
struct ExitLowerBound {
  double tc = 0.0;
  double vm = 0.0;
  bool reaches_v_max = false;
};

ExitLowerBound exit_lower_bound(double t0, double v0, const SystemParams& params);

/// Recursive MZ exit-time rule. `pred` is the FIFO predecessor's final
/// assignment and `label` its relation to this vehicle; both absent for the
/// first vehicle in the queue. The predecessor's exit speed is used as the
/// divisor speed for the L and C separations.
///
/// `lane_leader` is the physically-ahead vehicle on the same lane when that is
/// not i-1. Its exit plus delta/v^m is one more term of the max, so a vehicle
/// never reaches the MZ together with the car in front of it; the tag is L
/// when this term binds.
///
/// Throws ScheduleInfeasible if the resulting MZ speed leaves [v_min, v_max].
ScheduleAssignment assign(std::optional<SubsetLabel> label,
                          const std::optional<ScheduleAssignment>& pred,
                          double t0, double v0, const SystemParams& params,
                          const std::optional<ScheduleAssignment>& lane_leader = std::nullopt);

}  // namespace cav
