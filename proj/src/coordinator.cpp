#include "cav/coordinator.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cav {

SubsetLabel classify(const Lane& self, const Lane& pred) {
  if (road_of(self.heading) != road_of(pred.heading)) return SubsetLabel::kC;
  if (self.heading != pred.heading) return SubsetLabel::kO;
  return self.number == pred.number ? SubsetLabel::kL : SubsetLabel::kR;
}

Coordinator::Coordinator(int intersection, std::uint64_t seed, Ordering ordering)
    : intersection_(intersection), ordering_(ordering), rng_(seed) {}

std::size_t Coordinator::register_arrival(double t, const Arrival& vehicle) {
  if (by_id_.count(vehicle.id))
    throw DuplicateRegistration("vehicle " + std::to_string(vehicle.id) +
                                " already registered at intersection " +
                                std::to_string(intersection_));
  if (vehicle.route != vehicle.lane.heading)
    throw UnsupportedRoute("only straight-through routes are supported");
  if (ordering_ == Ordering::kCzEntry && !entries_.empty() && t < entries_.back().t0)
    throw std::invalid_argument("CZ entries must be registered in time order");

  Entry e;
  e.index = entries_.size() + 1;
  e.id = vehicle.id;
  e.lane = vehicle.lane;
  e.t0 = t;
  e.v0 = vehicle.v0;
  entries_.push_back(e);
  by_id_.emplace(vehicle.id, e.index);
  return e.index;
}

std::vector<std::size_t> Coordinator::register_simultaneous(
    double t, std::span<const Arrival> vehicles) {
  for (std::size_t a = 0; a < vehicles.size(); ++a) {
    if (by_id_.count(vehicles[a].id))
      throw DuplicateRegistration("vehicle " + std::to_string(vehicles[a].id) +
                                  " already registered");
    for (std::size_t b = 0; b < a; ++b)
      if (vehicles[a].id == vehicles[b].id)
        throw DuplicateRegistration("vehicle " + std::to_string(vehicles[a].id) +
                                    " listed twice");
  }
  std::vector<std::size_t> order(vehicles.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);

  std::vector<std::size_t> indices(vehicles.size());
  for (std::size_t k : order) indices[k] = register_arrival(t, vehicles[k]);
  return indices;
}

std::optional<SubsetLabel> Coordinator::classify_predecessor(std::size_t i) const {
  if (i <= 1 || i > entries_.size()) return std::nullopt;
  return classify(entry(i).lane, entry(i - 1).lane);
}

void Coordinator::commit(std::size_t i, const ScheduleAssignment& schedule,
                         const OptimalProfile& profile) {
  Entry& e = entries_.at(i - 1);
  e.schedule = schedule;
  e.profile = profile;
}

std::optional<std::size_t> Coordinator::leader_of(std::size_t i) const {
  const Entry& me = entry(i);
  for (std::size_t j = i - 1; j >= 1; --j) {
    const Entry& other = entry(j);
    if (!(other.lane == me.lane)) continue;
    if (other.schedule && other.schedule->tf <= me.t0) return std::nullopt;
    return j;
  }
  return std::nullopt;
}

std::optional<InformationSet> Coordinator::info_set(std::size_t i, double t) const {
  if (i < 1 || i > entries_.size()) return std::nullopt;
  const Entry& me = entry(i);
  if (!me.schedule || !me.profile) return std::nullopt;
  if (t < me.t0 || t > me.schedule->tf) return std::nullopt;

  InformationSet info;
  const KinematicState s = me.profile->eval(t);
  info.p = s.p;
  info.v = s.v;
  info.tm = me.schedule->tm;
  if (auto label = classify_predecessor(i)) {
    info.has_predecessor = true;
    info.subset_label = *label;
    const Entry& pred = entry(i - 1);
    if (pred.schedule) {
      info.pred_tf = pred.schedule->tf;
      info.pred_exit_speed = pred.schedule->vm;
    }
  }
  if (auto k = leader_of(i)) {
    const Entry& lead = entry(*k);
    info.leader_id = lead.id;
    if (lead.profile && t <= lead.profile->tf()) {
      info.gap = lead.profile->eval(t).p - s.p;
    } else if (lead.profile) {
      // Leader already past the MZ exit; it keeps cruising at its exit speed.
      info.gap = lead.profile->L() + lead.profile->S() +
                 lead.profile->vm() * (t - lead.profile->tf()) - s.p;
    }
  }
  return info;
}

std::optional<std::size_t> Coordinator::index_of(VehicleId id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

}  // namespace cav
