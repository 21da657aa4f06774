#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "cav/optctrl.hpp"
#include "cav/scheduler.hpp"
#include "cav/types.hpp"

namespace cav {

/// Classification of `pred` relative to `self` for straight-through routes.
/// Total over all lane pairs: exactly one label is returned.
SubsetLabel classify(const Lane& self, const Lane& pred);

struct InformationSet {
  double p = 0.0;
  double v = 0.0;
  SubsetLabel subset_label = SubsetLabel::kL;  // meaningless when first in queue
  bool has_predecessor = false;
  std::optional<double> gap;                    // s_i = p_k - p_i
  std::optional<VehicleId> leader_id;           // physically-ahead vehicle k
  double tm = 0.0;
  std::optional<double> pred_tf;                // t_{i-1}^f
  std::optional<double> pred_exit_speed;        // v_{i-1}(t_{i-1}^f)
};

/// FIFO queue of one intersection's control zone.
///
/// Indices are 1-based and assigned in CZ-entry order. Vehicles entering at
/// the same instant are ordered by a draw from the coordinator's seeded RNG.
/// Each lane keeps its vehicles in entry order; a vehicle stops being anyone's
/// physical leader once it has left the MZ.
///
/// Queries are const and may run concurrently between mutations.
class Coordinator {
 public:
  struct Arrival {
    VehicleId id = 0;
    Lane lane;
    Heading route = Heading::kEast;
    double v0 = 0.0;
  };

  struct Entry {
    std::size_t index = 0;
    VehicleId id = 0;
    Lane lane;
    double t0 = 0.0;
    double v0 = 0.0;
    std::optional<ScheduleAssignment> schedule;
    std::optional<OptimalProfile> profile;
  };

  /// kCzEntry: indices follow CZ entry times (registration must be in time
  /// order). kFezEntry: vehicles are indexed when they enter the FEZ, before
  /// their CZ entry is known, so CZ entries on different lanes may interleave.
  enum class Ordering { kCzEntry, kFezEntry };

  explicit Coordinator(int intersection = 1, std::uint64_t seed = 0,
                       Ordering ordering = Ordering::kCzEntry);

  int intersection() const { return intersection_; }

  /// Appends one vehicle entering the CZ at time t; returns its index
  /// M_z(t) + 1. Throws DuplicateRegistration for a known id, UnsupportedRoute
  /// for a turning route, and std::invalid_argument if t precedes the previous
  /// entry under kCzEntry ordering.
  std::size_t register_arrival(double t, const Arrival& vehicle);

  /// Registers vehicles that reach the CZ at the same instant, in an order
  /// drawn from the seeded RNG. Returned indices follow the input order.
  std::vector<std::size_t> register_simultaneous(double t,
                                                 std::span<const Arrival> vehicles);

  /// Relation of i-1 to i, or nullopt for the first vehicle in the queue.
  std::optional<SubsetLabel> classify_predecessor(std::size_t i) const;

  /// Stores the final schedule and profile of vehicle i.
  void commit(std::size_t i, const ScheduleAssignment& schedule,
              const OptimalProfile& profile);

  /// Physically-ahead vehicle on the same lane that has not left the MZ by
  /// the time i enters the CZ.
  std::optional<std::size_t> leader_of(std::size_t i) const;

  /// Information available to vehicle i at time t, or nullopt when i is not
  /// between its CZ entry and MZ exit (or is not yet committed).
  std::optional<InformationSet> info_set(std::size_t i, double t) const;

  std::size_t size() const { return entries_.size(); }
  const Entry& entry(std::size_t i) const { return entries_.at(i - 1); }
  const Entry* last() const { return entries_.empty() ? nullptr : &entries_.back(); }
  std::optional<std::size_t> index_of(VehicleId id) const;

 private:
  int intersection_;
  Ordering ordering_;
  std::mt19937_64 rng_;
  std::vector<Entry> entries_;
  std::unordered_map<VehicleId, std::size_t> by_id_;
};

}  // namespace cav
