#include "cav/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>

#include <spdlog/spdlog.h>

#include "cav/coordinator.hpp"

namespace cav {

double ScenarioConfig::effective_corridor_gap() const {
  return corridor_gap ? *corridor_gap : params.D - params.L - params.S;
}

void ScenarioConfig::validate() const {
  params.validate();
  if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
  if (n_vehicles < 1) throw ParameterError("n_vehicles must be at least 1");
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  if (intersections != 1 && intersections != 2)
    throw ParameterError("intersections must be 1 or 2");
  if (intersections == 2 && !(effective_corridor_gap() >= 0.0))
    throw ParameterError("corridor_gap must be non-negative");
}

namespace {

constexpr std::array<Heading, 4> kHeadings{Heading::kEast, Heading::kWest,
                                           Heading::kNorth, Heading::kSouth};

// Uniform [0, 1) from the top 53 bits, so the stream is the same on every
// standard library.
double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t lane_slot(Heading h) { return static_cast<std::size_t>(h); }

double position_in(const Crossing& c, double t) {
  const OptimalProfile& p = c.profile;
  if (t <= p.tf()) return p.eval(std::max(t, p.t0())).p;
  return p.L() + p.S() + p.vm() * (t - p.tf());
}

struct Sim {
  const ScenarioConfig& cfg;
  const SystemParams& prm;
  std::vector<VehicleRecord> records;
  std::vector<SafetyRecord> safety;

  explicit Sim(const ScenarioConfig& c) : cfg(c), prm(c.params) {}

  // Earliest spawn time behind the previous vehicle on the same approach.
  double spawn_floor(const VehicleRecord& ahead, double v) const {
    const FezPlan& a = ahead.approach;
    // A FEZ shapes one vehicle per lane at a time: the next one enters once
    // the previous has reached the CZ.
    if (cfg.fez_enabled) return a.tau;
    double t;
    if (prm.delta <= a.length) {
      t = poly::bisect([&](double x) { return a.state_at(x).distance - prm.delta; },
                       a.t_F, a.tau);
    } else {
      t = a.tau + (prm.delta - a.length) / a.upsilon;
    }
    // Both cruise through the approach; keep the follower at least delta
    // behind when the leader reaches the CZ.
    return std::max(t, a.tau - (a.length - prm.delta) / v);
  }

  void enter_cz(Coordinator& coord, std::size_t idx, VehicleRecord& rec) {
    const Coordinator::Entry& e = coord.entry(idx);
    Crossing c;
    c.intersection = coord.intersection();
    c.index = idx;
    c.label = coord.classify_predecessor(idx);
    std::optional<ScheduleAssignment> pred;
    if (idx > 1) pred = coord.entry(idx - 1).schedule;
    const auto k = coord.leader_of(idx);
    std::optional<ScheduleAssignment> lead;
    if (k && *k != idx - 1) lead = coord.entry(*k).schedule;
    c.schedule = assign(c.label, pred, e.t0, e.v0, prm, lead);
    c.profile = solve_profile(e.t0, e.v0, c.schedule.tm, c.schedule.vm, prm.L, prm.S);
    c.constraints = check_constraints(c.profile, prm);
    coord.commit(idx, c.schedule, c.profile);
    if (!c.constraints.empty())
      spdlog::debug("vehicle {} at intersection {}: unconstrained solution invalid ({} "
                    "intervals)",
                    rec.id, c.intersection, c.constraints.size());

    if (k) {
      const Coordinator::Entry& lead = coord.entry(*k);
      c.leader = lead.id;
      const auto pieces = gap_pieces(*lead.profile, c.profile);
      SafetyRecord s;
      s.intersection = c.intersection;
      s.follower = rec.id;
      s.leader = lead.id;
      s.t_begin = c.profile.t0();
      s.t_end = c.profile.tm();
      s.minimum = min_gap(pieces);
      s.below = intervals_below(pieces, prm.delta);
      s.violation = s.minimum.s_star < prm.delta - kViolationSlack;
      if (s.violation)
        spdlog::info("intersection {}: vehicle {} comes within {:.3f} m of {} at t={:.3f}",
                     s.intersection, s.follower, s.minimum.s_star, s.leader,
                     s.minimum.t_star);
      safety.push_back(std::move(s));
    }
    rec.crossings.push_back(std::move(c));
  }

  // Registers (time, record) pairs in time order; exact ties go through the
  // coordinator's random tie-break.
  void register_in_order(Coordinator& coord,
                         std::vector<std::pair<double, std::size_t>> arrivals) {
    std::sort(arrivals.begin(), arrivals.end());
    for (std::size_t a = 0; a < arrivals.size();) {
      std::size_t b = a;
      while (b < arrivals.size() && arrivals[b].first == arrivals[a].first) ++b;
      std::vector<Coordinator::Arrival> group;
      for (std::size_t k = a; k < b; ++k) {
        const VehicleRecord& r = records[arrivals[k].second];
        const double v0 = r.crossings.empty() ? r.approach.upsilon
                                              : r.crossings.back().schedule.vm;
        group.push_back({r.id, r.lane, r.lane.heading, v0});
      }
      std::vector<std::size_t> idx;
      if (group.size() == 1) idx.push_back(coord.register_arrival(arrivals[a].first, group[0]));
      else idx = coord.register_simultaneous(arrivals[a].first, group);
      std::vector<std::pair<std::size_t, std::size_t>> order;
      for (std::size_t k = 0; k < idx.size(); ++k) order.emplace_back(idx[k], arrivals[a + k].second);
      std::sort(order.begin(), order.end());
      for (auto [i, r] : order) enter_cz(coord, i, records[r]);
      a = b;
    }
  }
};

std::vector<TrajectorySample> sample_vehicle(const VehicleRecord& r, double dt) {
  std::vector<TrajectorySample> out;
  if (r.crossings.empty()) return out;
  const double t_end = r.crossings.back().profile.tf();
  auto k = static_cast<long long>(std::ceil(r.t_F / dt));
  if (static_cast<double>(k) * dt < r.t_F) ++k;
  for (;; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (t > t_end) break;
    TrajectorySample s{t, r.id, 0.0, 0.0, 0.0, Phase::kFez};
    if (t < r.approach.tau) {
      const FezPlan::State st = r.approach.state_at(t);
      s.p = st.distance - r.approach.length;
      s.v = st.v;
      s.u = st.u;
    } else {
      std::size_t c = 0;
      while (c + 1 < r.crossings.size() && t >= r.crossings[c + 1].profile.t0()) ++c;
      const OptimalProfile& p = r.crossings[c].profile;
      if (t <= p.tf()) {
        const KinematicState st = p.eval(t);
        s.p = st.p;
        s.v = st.v;
        s.u = st.u;
        s.phase = t <= p.tm() ? Phase::kCz : Phase::kMz;
      } else {
        s.p = p.L() + p.S() + p.vm() * (t - p.tf());
        s.v = p.vm();
        s.phase = Phase::kPostMz;
      }
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace

bool VehicleRecord::unconstrained_solution_invalid() const {
  return std::any_of(crossings.begin(), crossings.end(),
                     [](const Crossing& c) { return !c.constraints.empty(); });
}

std::size_t SimLog::violation_count() const {
  return static_cast<std::size_t>(std::count_if(
      safety.begin(), safety.end(), [](const SafetyRecord& s) { return s.violation; }));
}

std::vector<ArrivalSample> sample_arrivals(const ScenarioConfig& config) {
  const SystemParams& prm = config.params;
  const double rate = config.lambda_per_lane ? config.lambda : config.lambda / 4.0;
  std::vector<ArrivalSample> all;
  for (Heading h : kHeadings) {
    // One engine per approach, so a longer run extends a shorter one.
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(lane_slot(h))};
    std::mt19937_64 rng(seq);
    double t = 0.0;
    for (std::size_t j = 0; j < config.n_vehicles; ++j) {
      t += -std::log1p(-unit(rng)) / rate;
      const double v = prm.v_min + (prm.v_max - prm.v_min) * unit(rng);
      all.push_back({t, h, v});
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const ArrivalSample& a, const ArrivalSample& b) { return a.t < b.t; });
  all.resize(config.n_vehicles);
  return all;
}

SimLog run(const ScenarioConfig& config) {
  config.validate();
  return run_with_arrivals(config, sample_arrivals(config));
}

SimLog run_with_arrivals(const ScenarioConfig& config,
                         std::vector<ArrivalSample> arrivals) {
  config.validate();
  const SystemParams& prm = config.params;
  if (config.fez_enabled && !check_parameter_condition(prm))
    throw CannotGuarantee("FEZ enabled but the parameter condition fails");

  Sim sim(config);
  std::array<std::vector<ArrivalSample>, 4> queues;
  std::stable_sort(arrivals.begin(), arrivals.end(),
                   [](const ArrivalSample& a, const ArrivalSample& b) { return a.t < b.t; });
  for (const ArrivalSample& a : arrivals) queues[lane_slot(a.heading)].push_back(a);
  std::array<std::size_t, 4> head{};
  std::array<std::optional<std::size_t>, 4> lane_last;

  Coordinator cz1(1, config.seed,
                  config.fez_enabled ? Coordinator::Ordering::kFezEntry
                                     : Coordinator::Ordering::kCzEntry);
  sim.records.reserve(arrivals.size());

  for (std::size_t n = 0; n < arrivals.size(); ++n) {
    std::size_t best_lane = 4;
    double best_t = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < 4; ++l) {
      if (head[l] >= queues[l].size()) continue;
      const ArrivalSample& a = queues[l][head[l]];
      double t = a.t;
      if (lane_last[l]) t = std::max(t, sim.spawn_floor(sim.records[*lane_last[l]], a.v));
      if (t < best_t) {
        best_t = t;
        best_lane = l;
      }
    }
    const ArrivalSample a = queues[best_lane][head[best_lane]++];
    VehicleRecord rec;
    rec.id = static_cast<VehicleId>(sim.records.size() + 1);
    rec.lane = Lane{a.heading, 0};
    rec.t_F = best_t;
    rec.v_F = a.v;
    if (best_t > a.t)
      spdlog::debug("vehicle {} spawn deferred by {:.3f} s", rec.id, best_t - a.t);

    if (config.fez_enabled) {
      FeasibilityContext ctx;
      ctx.params = prm;
      const FezRequest req{rec.id, rec.t_F, rec.v_F};
      if (const Coordinator::Entry* last = cz1.last()) {
        ctx.predecessor = last->schedule;
        ctx.label = classify(rec.lane, last->lane);
      }
      if (lane_last[best_lane])
        ctx.leader = sim.records[*lane_last[best_lane]].crossings.front().profile;
      rec.approach = plan_fez_control(req, ctx);
      rec.planned = true;
      if (!rec.approach.feasible)
        spdlog::warn("vehicle {}: no feasible CZ entry found in the FEZ", rec.id);
      sim.records.push_back(rec);
      const std::size_t r = sim.records.size() - 1;
      const std::size_t idx = cz1.register_arrival(
          rec.approach.tau, {rec.id, rec.lane, rec.lane.heading, rec.approach.upsilon});
      sim.enter_cz(cz1, idx, sim.records[r]);
    } else {
      rec.approach = two_segment_plan(rec.t_F, rec.v_F, rec.v_F, 0.0, prm.fez_length);
      rec.approach.id = rec.id;
      sim.records.push_back(rec);
    }
    lane_last[best_lane] = sim.records.size() - 1;
  }

  if (!config.fez_enabled) {
    std::vector<std::pair<double, std::size_t>> entries;
    for (std::size_t r = 0; r < sim.records.size(); ++r)
      entries.emplace_back(sim.records[r].approach.tau, r);
    sim.register_in_order(cz1, std::move(entries));
  }

  if (config.intersections == 2) {
    Coordinator cz2(2, config.seed ^ 0x9e3779b97f4a7c15ULL);
    const double gap = config.effective_corridor_gap();
    std::vector<std::pair<double, std::size_t>> entries;
    for (std::size_t r = 0; r < sim.records.size(); ++r) {
      const VehicleRecord& rec = sim.records[r];
      if (rec.lane.heading != Heading::kEast) continue;
      const ScheduleAssignment& s = rec.crossings.front().schedule;
      entries.emplace_back(s.tf + gap / s.vm, r);
    }
    sim.register_in_order(cz2, std::move(entries));
  }

  SimLog log;
  log.config = config;
  log.vehicles = std::move(sim.records);
  log.safety = std::move(sim.safety);

  for (const VehicleRecord& r : log.vehicles) {
    auto s = sample_vehicle(r, config.dt);
    log.trajectories.insert(log.trajectories.end(), s.begin(), s.end());
  }
  std::sort(log.trajectories.begin(), log.trajectories.end(),
            [](const TrajectorySample& a, const TrajectorySample& b) {
              return a.t != b.t ? a.t < b.t : a.id < b.id;
            });

  for (const SafetyRecord& s : log.safety) {
    const Crossing* fc = nullptr;
    const Crossing* lc = nullptr;
    for (const Crossing& c : log.vehicles[s.follower - 1].crossings)
      if (c.intersection == s.intersection) fc = &c;
    for (const Crossing& c : log.vehicles[s.leader - 1].crossings)
      if (c.intersection == s.intersection) lc = &c;
    auto k = static_cast<long long>(std::ceil(s.t_begin / config.dt));
    if (static_cast<double>(k) * config.dt < s.t_begin) ++k;
    for (;; ++k) {
      const double t = static_cast<double>(k) * config.dt;
      if (t > s.t_end) break;
      log.gaps.push_back({t, s.follower, s.leader, position_in(*lc, t) - position_in(*fc, t)});
    }
  }
  std::sort(log.gaps.begin(), log.gaps.end(), [](const GapSample& a, const GapSample& b) {
    return a.t != b.t ? a.t < b.t : a.follower < b.follower;
  });
  return log;
}

SafetySummary safety_report(const SimLog& log, double bin_width) {
  SafetySummary out;
  out.bin_width = bin_width;
  std::map<VehicleId, double> per_vehicle;
  for (const SafetyRecord& s : log.safety) {
    auto [it, fresh] = per_vehicle.emplace(s.follower, s.minimum.s_star);
    if (!fresh) it->second = std::min(it->second, s.minimum.s_star);
    if (s.violation) ++out.violations;
  }
  out.min_gap.assign(per_vehicle.begin(), per_vehicle.end());
  if (out.min_gap.empty()) return out;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (auto& [id, g] : out.min_gap) {
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  out.histogram_origin = std::floor(lo / bin_width) * bin_width;
  out.histogram.assign(
      static_cast<std::size_t>(std::floor((hi - out.histogram_origin) / bin_width)) + 1, 0);
  for (auto& [id, g] : out.min_gap)
    ++out.histogram[static_cast<std::size_t>(
        std::floor((g - out.histogram_origin) / bin_width))];
  return out;
}

}  // namespace cav
