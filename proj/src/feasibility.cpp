#include "cav/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

namespace cav {

double GapPiece::operator()(double t) const { return local()(t - t_ref); }
double GapPiece::rate(double t) const { return local().derivative(t - t_ref); }
double GapPiece::acceleration(double t) const {
  return local().second_derivative(t - t_ref);
}

GapPiece GapPiece::absolute() const {
  const double r = t_ref;
  GapPiece g = *this;
  g.t_ref = 0.0;
  g.A = A;
  g.B = B - 3.0 * A * r;
  g.C = (3.0 * A * r - 2.0 * B) * r + C;
  g.D = ((-A * r + B) * r - C) * r + D;
  return g;
}

std::string_view to_string(GapCase c) {
  switch (c) {
    case GapCase::kAtTau: return "AT_TAU";
    case GapCase::kAtTkm: return "AT_TKM";
    case GapCase::kInteriorCz: return "INTERIOR_CZ";
    case GapCase::kInteriorMz: return "INTERIOR_MZ";
    case GapCase::kAtTim: return "AT_TIM";
  }
  return "?";
}

std::vector<GapPiece> gap_pieces(const OptimalProfile& leader,
                                 const OptimalProfile& follower) {
  if (follower.t0() < leader.t0())
    throw std::invalid_argument("follower enters the CZ before its leader");
  if (follower.tm() <= leader.t0())
    throw EmptyOverlap("follower reaches the MZ before the leader enters the CZ");

  const double r = follower.t0();
  const double ui = follower.initial_control();
  const double vi = follower.v0();
  const double ai = follower.a();

  std::vector<GapPiece> pieces;
  if (r < leader.tm()) {
    const KinematicState k = leader.eval_cubic(r);
    GapPiece g;
    g.A = (leader.a() - ai) / 6.0;
    g.B = 0.5 * (k.u - ui);
    g.C = k.v - vi;
    g.D = k.p;
    g.t_ref = r;
    g.t_lo = r;
    g.t_hi = std::min(leader.tm(), follower.tm());
    g.phase = GapPhase::kCz;
    pieces.push_back(g);
  }
  if (leader.tm() < follower.tm()) {
    GapPiece g;
    g.A = -ai / 6.0;
    g.B = -0.5 * ui;
    g.C = leader.vm() - vi;
    g.D = leader.L() + leader.vm() * (r - leader.tm());
    g.t_ref = r;
    g.t_lo = std::max(r, leader.tm());
    g.t_hi = follower.tm();
    g.phase = GapPhase::kMz;
    pieces.push_back(g);
  }
  return pieces;
}

GapMinimum min_gap(const std::vector<GapPiece>& pieces) {
  if (pieces.empty()) throw std::invalid_argument("min_gap needs at least one piece");

  const double t_first = pieces.front().t_lo;
  const double t_last = pieces.back().t_hi;

  GapMinimum best{std::numeric_limits<double>::infinity(), t_first, GapCase::kAtTau};
  auto consider = [&](const GapPiece& g, double t, bool interior) {
    const double s = g(t);
    if (!(s < best.s_star)) return;
    best.s_star = s;
    best.t_star = t;
    if (!interior && t == t_first)
      best.case_tag = GapCase::kAtTau;
    else if (!interior && t == t_last)
      best.case_tag = GapCase::kAtTim;
    else if (!interior)
      best.case_tag = GapCase::kAtTkm;
    else
      best.case_tag = g.phase == GapPhase::kCz ? GapCase::kInteriorCz
                                               : GapCase::kInteriorMz;
  };

  for (const GapPiece& g : pieces) {
    consider(g, g.t_lo, false);
    // Stationary points: 3A x^2 + 2B x + C = 0 with 6A x + 2B >= 0.
    for (double x : poly::quadratic_roots(3.0 * g.A, 2.0 * g.B, g.C)) {
      const double t = g.t_ref + x;
      if (!(t > g.t_lo && t < g.t_hi)) continue;
      if (g.acceleration(t) < 0.0) continue;
      consider(g, t, true);
    }
    consider(g, g.t_hi, false);
  }
  return best;
}

std::vector<std::pair<double, double>> intervals_below(
    const std::vector<GapPiece>& pieces, double level) {
  std::vector<std::pair<double, double>> out;
  for (const GapPiece& g : pieces) {
    // Break points: ends plus stationary points, so s is monotone in between.
    std::vector<double> cuts{g.t_lo};
    for (double x : poly::quadratic_roots(3.0 * g.A, 2.0 * g.B, g.C)) {
      const double t = g.t_ref + x;
      if (t > g.t_lo && t < g.t_hi) cuts.push_back(t);
    }
    cuts.push_back(g.t_hi);
    std::sort(cuts.begin(), cuts.end());
    auto f = [&](double t) { return g(t) - level; };
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double a = cuts[k], b = cuts[k + 1];
      const double fa = f(a), fb = f(b);
      double lo = a, hi = b;
      if (fa >= 0.0 && fb >= 0.0) continue;
      if (fa >= 0.0) lo = poly::bisect(f, a, b);
      if (fb >= 0.0) hi = poly::bisect([&](double t) { return -f(t); }, a, b);
      if (!out.empty() && lo <= out.back().second + 1e-12)
        out.back().second = std::max(out.back().second, hi);
      else
        out.emplace_back(lo, hi);
    }
  }
  return out;
}

double t_k_delta(const OptimalProfile& leader, double delta) {
  if (delta <= 0.0) return leader.t0();
  if (delta > leader.L()) return leader.tm() + (delta - leader.L()) / leader.vm();
  poly::Cubic f = leader.position_shifted();
  f.c0 -= delta;
  auto root = poly::smallest_root_in(f, 0.0, leader.tm() - leader.t0());
  if (!root) throw std::logic_error("leader position never reaches delta on [t0, tm]");
  return leader.t0() + *root;
}

FeasibilityContext same_lane_context(double tk0, double vk0, double tkm,
                                     double vkm, const SystemParams& params) {
  FeasibilityContext ctx;
  ctx.params = params;
  ctx.leader = solve_profile(tk0, vk0, tkm, vkm, params.L, params.S);
  ScheduleAssignment pred;
  pred.tm = tkm;
  pred.vm = vkm;
  pred.tf = ctx.leader->tf();
  pred.case_tag = CaseTag::kFirst;
  ctx.predecessor = pred;
  ctx.label = SubsetLabel::kL;
  return ctx;
}

FeasibilityVerdict::Status FeasibilityVerdict::status() const {
  if (!reason.empty()) return Status::kError;
  if (constrained) return Status::kConstrainedUnsupported;
  return gap_ok ? Status::kFeasible : Status::kInfeasible;
}

std::string_view to_string(FeasibilityVerdict::Status s) {
  using S = FeasibilityVerdict::Status;
  switch (s) {
    case S::kFeasible: return "feasible";
    case S::kInfeasible: return "infeasible";
    case S::kConstrainedUnsupported: return "constrained-case unsupported";
    case S::kError: return "error";
  }
  return "?";
}

FeasibilityVerdict is_feasible(double tau, double upsilon,
                               const FeasibilityContext& ctx) {
  const SystemParams& prm = ctx.params;
  FeasibilityVerdict out;
  if (!(upsilon >= prm.v_min - 1e-12 && upsilon <= prm.v_max + 1e-12)) {
    out.reason = "entry speed outside [v_min, v_max]";
    return out;
  }
  if (ctx.leader && tau < ctx.leader->t0()) {
    out.reason = "follower would enter the CZ before its leader";
    return out;
  }
  try {
    std::optional<ScheduleAssignment> lead;
    if (ctx.leader) {
      lead = ScheduleAssignment{};
      lead->tf = ctx.leader->tf();
      lead->tm = ctx.leader->tm();
      lead->vm = ctx.leader->vm();
    }
    out.schedule = assign(ctx.label, ctx.predecessor, tau, upsilon, prm, lead);
    out.profile = solve_profile(tau, upsilon, out.schedule->tm, out.schedule->vm,
                                prm.L, prm.S);
  } catch (const ScheduleInfeasible& e) {
    out.reason = e.what();
    return out;
  } catch (const DegenerateHorizon& e) {
    out.reason = e.what();
    return out;
  }

  out.constrained = !check_constraints(*out.profile, prm).empty() ||
                    (ctx.leader && !check_constraints(*ctx.leader, prm).empty());
  if (!ctx.leader) {
    out.gap_ok = true;
    return out;
  }
  out.minimum = min_gap(gap_pieces(*ctx.leader, *out.profile));
  out.gap_ok = out.minimum->s_star >= prm.delta - kGapTolerance;
  return out;
}

bool FeasibilityGrid::feasible(std::size_t iu, std::size_t it) const {
  const double s = value(iu, it);
  return !std::isnan(s) && s >= delta - kGapTolerance;
}

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t k = 0; k < n; ++k)
    out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  return out;
}

// Signed level value used for the boundary: s_star - delta + tolerance, NaN
// when masked. Shifting keeps the L-case plateau at s_star == delta inside.
double level_value(const FeasibilityVerdict& v, const SystemParams& prm,
                   bool mask_constrained) {
  using S = FeasibilityVerdict::Status;
  const S st = v.status();
  if (st == S::kError) return std::numeric_limits<double>::quiet_NaN();
  if (mask_constrained && st == S::kConstrainedUnsupported)
    return std::numeric_limits<double>::quiet_NaN();
  // Without a leader every entry is feasible; report an unbounded gap.
  if (!v.minimum) return std::numeric_limits<double>::infinity();
  return v.minimum->s_star - prm.delta + kGapTolerance;
}

struct EdgeKey {
  int dir;  // 0: along tau (fixed upsilon row), 1: along upsilon (fixed tau column)
  std::size_t iu, it;
  auto operator<=>(const EdgeKey&) const = default;
};

}  // namespace

FeasibilityGrid feasibility_grid(const FeasibilityContext& ctx, double tau_lo,
                                 double tau_hi, double upsilon_lo,
                                 double upsilon_hi, std::size_t n_tau,
                                 std::size_t n_upsilon, GridOptions options) {
  if (n_tau == 0 || n_upsilon == 0)
    throw std::invalid_argument("feasibility grid needs at least one node per axis");
  const SystemParams& prm = ctx.params;
  FeasibilityGrid grid;
  grid.delta = prm.delta;
  grid.tau = linspace(tau_lo, tau_hi, n_tau);
  grid.upsilon = linspace(upsilon_lo, upsilon_hi, n_upsilon);
  const std::size_t cells = n_tau * n_upsilon;
  grid.s_star.assign(cells, std::numeric_limits<double>::quiet_NaN());
  grid.status.assign(cells, FeasibilityVerdict::Status::kError);
  std::vector<double> level(cells);

  auto eval_row = [&](std::size_t iu) {
    for (std::size_t it = 0; it < n_tau; ++it) {
      const FeasibilityVerdict v = is_feasible(grid.tau[it], grid.upsilon[iu], ctx);
      const std::size_t k = iu * n_tau + it;
      grid.status[k] = v.status();
      level[k] = level_value(v, prm, options.mask_constrained);
      grid.s_star[k] = std::isnan(level[k]) ? level[k] : level[k] + prm.delta - kGapTolerance;
    }
  };

  // Rows are independent; each thread writes disjoint slots, so the result
  // does not depend on scheduling.
  const std::size_t workers =
      cells < 4096 ? 1 : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (workers == 1) {
    for (std::size_t iu = 0; iu < n_upsilon; ++iu) eval_row(iu);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t iu = w; iu < n_upsilon; iu += workers) eval_row(iu);
      });
    for (auto& th : pool) th.join();
  }
  for (auto st : grid.status) {
    if (st == FeasibilityVerdict::Status::kConstrainedUnsupported) ++grid.constrained_cells;
    if (st == FeasibilityVerdict::Status::kError) ++grid.error_cells;
  }

  // Marching squares on level = s_star - delta.
  auto at = [&](std::size_t iu, std::size_t it) { return level[iu * n_tau + it]; };
  auto node = [&](std::size_t iu, std::size_t it) {
    return std::pair{grid.tau[it], grid.upsilon[iu]};
  };
  auto polished = [&](std::pair<double, double> a, std::pair<double, double> b,
                      double fa, double fb) {
    double lam = fa / (fa - fb);
    if (std::isinf(fa) || std::isinf(fb)) lam = std::isinf(fa) ? 1.0 : 0.0;
    auto lerp = [&](double x) {
      return std::pair{a.first + x * (b.first - a.first),
                       a.second + x * (b.second - a.second)};
    };
    // Refine on the edge with the exact s_star; give up on masked samples.
    double lo = 0.0, hi = 1.0, flo = fa;
    bool ok = true;
    for (int it = 0; it < 60 && ok; ++it) {
      const double mid = 0.5 * (lo + hi);
      const auto p = lerp(mid);
      const double fm = level_value(is_feasible(p.first, p.second, ctx), prm,
                                    options.mask_constrained);
      if (std::isnan(fm)) {
        ok = false;
        break;
      }
      if ((fm >= 0.0) == (flo >= 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    if (ok) lam = 0.5 * (lo + hi);
    return lerp(lam);
  };

  std::map<EdgeKey, std::pair<double, double>> crossings;
  auto crossing = [&](const EdgeKey& e) {
    auto it = crossings.find(e);
    if (it != crossings.end()) return it->second;
    std::size_t iu0 = e.iu, it0 = e.it, iu1 = e.iu, it1 = e.it;
    if (e.dir == 0) ++it1;
    else ++iu1;
    const auto p = polished(node(iu0, it0), node(iu1, it1), at(iu0, it0), at(iu1, it1));
    crossings.emplace(e, p);
    return p;
  };

  std::vector<std::pair<EdgeKey, EdgeKey>> segments;
  for (std::size_t iu = 0; iu + 1 < n_upsilon; ++iu) {
    for (std::size_t it = 0; it + 1 < n_tau; ++it) {
      const double f00 = at(iu, it), f01 = at(iu, it + 1);
      const double f10 = at(iu + 1, it), f11 = at(iu + 1, it + 1);
      if (std::isnan(f00) || std::isnan(f01) || std::isnan(f10) || std::isnan(f11))
        continue;
      const EdgeKey bottom{0, iu, it}, top{0, iu + 1, it};
      const EdgeKey left{1, iu, it}, right{1, iu, it + 1};
      std::vector<EdgeKey> cut;
      if ((f00 >= 0.0) != (f01 >= 0.0)) cut.push_back(bottom);
      if ((f01 >= 0.0) != (f11 >= 0.0)) cut.push_back(right);
      if ((f11 >= 0.0) != (f10 >= 0.0)) cut.push_back(top);
      if ((f10 >= 0.0) != (f00 >= 0.0)) cut.push_back(left);
      if (cut.size() == 2) {
        segments.emplace_back(cut[0], cut[1]);
      } else if (cut.size() == 4) {
        // Saddle: decide connectivity from the finite cell mean.
        const double mean = 0.25 * (f00 + f01 + f10 + f11);
        const bool centre_in = std::isfinite(mean) ? mean >= 0.0 : true;
        if (centre_in == (f00 >= 0.0)) {
          segments.emplace_back(bottom, right);
          segments.emplace_back(top, left);
        } else {
          segments.emplace_back(bottom, left);
          segments.emplace_back(top, right);
        }
      }
    }
  }

  // Chain segments sharing an edge crossing into polylines.
  std::map<EdgeKey, std::vector<std::size_t>> touching;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    touching[segments[s].first].push_back(s);
    touching[segments[s].second].push_back(s);
  }
  std::vector<bool> used(segments.size(), false);
  auto next_from = [&](const EdgeKey& e, std::size_t from) -> std::optional<std::size_t> {
    for (std::size_t s : touching[e])
      if (s != from && !used[s]) return s;
    return std::nullopt;
  };
  auto walk = [&](std::size_t s, EdgeKey from_end, std::vector<EdgeKey>& chain) {
    EdgeKey cur = from_end;
    std::size_t seg = s;
    while (true) {
      const auto nxt = next_from(cur, seg);
      if (!nxt) break;
      used[*nxt] = true;
      cur = segments[*nxt].first == cur ? segments[*nxt].second : segments[*nxt].first;
      seg = *nxt;
      chain.push_back(cur);
    }
  };
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (used[s]) continue;
    used[s] = true;
    std::vector<EdgeKey> forward{segments[s].first, segments[s].second};
    walk(s, segments[s].second, forward);
    std::vector<EdgeKey> backward;
    walk(s, segments[s].first, backward);
    std::vector<std::pair<double, double>> line;
    for (auto it = backward.rbegin(); it != backward.rend(); ++it)
      line.push_back(crossing(*it));
    for (const EdgeKey& e : forward) line.push_back(crossing(e));
    grid.boundary.push_back(std::move(line));
  }
  return grid;
}

}  // namespace cav
