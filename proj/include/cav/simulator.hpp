#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cav/feasibility.hpp"
#include "cav/fez.hpp"
#include "cav/optctrl.hpp"
#include "cav/scheduler.hpp"
#include "cav/types.hpp"

namespace cav {

struct ScenarioConfig {
  SystemParams params;
  double lambda = 1.0;           // arrivals per second, all lanes together
  bool lambda_per_lane = false;  // when set, lambda is the rate of each lane
  std::size_t n_vehicles = 20;
  std::uint64_t seed = 1;
  bool fez_enabled = true;
  double dt = 0.1;  // logging step [s]
  int intersections = 1;
  std::optional<double> corridor_gap;  // MZ-1 exit to CZ-2 entry; D - L - S if unset

  double effective_corridor_gap() const;
  /// Throws ParameterError naming the first bad field.
  void validate() const;
};

/// A vehicle reaching the upstream end of the approach (FEZ entry).
struct ArrivalSample {
  double t = 0.0;
  Heading heading = Heading::kEast;
  double v = 0.0;
};

/// Independent Poisson streams, one per approach, with speeds uniform on
/// [v_min, v_max]; the first n_vehicles arrivals overall, sorted by time.
std::vector<ArrivalSample> sample_arrivals(const ScenarioConfig& config);

struct Crossing {
  int intersection = 1;
  std::size_t index = 0;  // FIFO position in that intersection's queue
  std::optional<SubsetLabel> label;
  ScheduleAssignment schedule;
  OptimalProfile profile;
  std::vector<ConstraintViolation> constraints;
  std::optional<VehicleId> leader;
};

struct VehicleRecord {
  VehicleId id = 0;
  Lane lane;
  double t_F = 0.0;  // approach entry, after spawn deferral
  double v_F = 0.0;
  FezPlan approach;   // FEZ manoeuvre, or plain cruise without a FEZ
  bool planned = false;
  std::vector<Crossing> crossings;

  /// Flagged when the unconstrained CZ solution leaves the speed/control box.
  bool unconstrained_solution_invalid() const;
};

/// Rear-end check of one follower against its physically-ahead vehicle over
/// the follower's [t0, tm].
struct SafetyRecord {
  int intersection = 1;
  VehicleId follower = 0;
  VehicleId leader = 0;
  double t_begin = 0.0;
  double t_end = 0.0;
  GapMinimum minimum;
  bool violation = false;  // s < delta - 1e-6 somewhere on the interval
  std::vector<std::pair<double, double>> below;  // where s < delta
};

struct TrajectorySample {
  double t;
  VehicleId id;
  double p, v, u;
  Phase phase;
};

struct GapSample {
  double t;
  VehicleId follower;
  VehicleId leader;
  double s;
};

struct SimLog {
  ScenarioConfig config;
  std::vector<VehicleRecord> vehicles;  // ordered by id
  std::vector<SafetyRecord> safety;
  std::vector<TrajectorySample> trajectories;  // sorted by (t, id)
  std::vector<GapSample> gaps;                 // sorted by (t, follower)

  std::size_t violation_count() const;
};

inline constexpr double kViolationSlack = 1e-6;

SimLog run(const ScenarioConfig& config);

/// Same as run() but with caller-supplied arrivals (approach entries).
SimLog run_with_arrivals(const ScenarioConfig& config,
                         std::vector<ArrivalSample> arrivals);

struct SafetySummary {
  std::vector<std::pair<VehicleId, double>> min_gap;  // per follower, by id
  std::size_t violations = 0;
  double bin_width = 5.0;
  double histogram_origin = 0.0;
  std::vector<std::size_t> histogram;
};

SafetySummary safety_report(const SimLog& log, double bin_width = 5.0);

}  // namespace cav
