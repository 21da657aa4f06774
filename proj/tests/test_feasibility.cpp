#include <doctest.h>

#include <random>

#include "cav/feasibility.hpp"
#include "oracles.hpp"

using namespace cav;

namespace {

struct Pair {
  oracle::Endpoints k, i;
};

// Leader and follower with overlapping CZ horizons and plausible timings.
Pair random_pair(std::mt19937_64& rng, double L) {
  std::uniform_real_distribution<double> sp(7, 15), avg(8, 14), lag(0.2, 8), extra(0.5, 6);
  Pair p;
  p.k.t0 = std::uniform_real_distribution<double>(0, 50)(rng);
  p.k.v0 = sp(rng);
  p.k.tm = p.k.t0 + L / avg(rng);
  p.k.vm = sp(rng);
  p.i.t0 = p.k.t0 + lag(rng);
  p.i.v0 = sp(rng);
  p.i.tm = std::max(p.k.tm, p.i.t0 + L / 15.0) + extra(rng);
  p.i.vm = sp(rng);
  return p;
}

OptimalProfile profile(const oracle::Endpoints& e, double L, double S) {
  return solve_profile(e.t0, e.v0, e.tm, e.vm, L, S);
}

}  // namespace

TEST_CASE("identical kinematics give a constant gap") {
  const auto k = solve_profile(0, 10, 40, 10, 400, 30);
  const auto i = solve_profile(2.5, 10, 42.5, 10, 400, 30);
  const auto pieces = gap_pieces(k, i);
  REQUIRE(pieces.size() == 2);
  for (const auto& g : pieces) {
    CHECK(std::fabs(g.A) < 1e-15);
    CHECK(std::fabs(g.B) < 1e-14);
    CHECK(std::fabs(g.C) < 1e-12);
    CHECK(g.D == doctest::Approx(25.0));
  }
  const GapMinimum m = min_gap(pieces);
  CHECK(m.s_star == doctest::Approx(25.0));
  CHECK(m.t_star == 2.5);
  CHECK(m.case_tag == GapCase::kAtTau);
}

TEST_CASE("MZ piece against a cruising leader") {
  const double L = 400;
  const oracle::Endpoints k{0, 10, 40, 10}, i{3, 12, 44, 9};
  const auto pieces = gap_pieces(profile(k, L, 30), profile(i, L, 30));
  REQUIRE(pieces.size() == 2);
  CHECK(pieces[1].phase == GapPhase::kMz);
  CHECK(pieces[1].t_lo == 40.0);
  const GapPiece abs = pieces[1].absolute();
  // Leader part of the coefficients is (0, 0, 10, 400 - 10*40).
  const oracle::Cubic4 fol = oracle::position_closed_form(i.t0, i.v0, i.tm, i.vm, L);
  CHECK(abs.A + fol.A == doctest::Approx(0.0).scale(1).epsilon(1e-12));
  CHECK(abs.B + fol.B == doctest::Approx(0.0).scale(1).epsilon(1e-10));
  CHECK(abs.C + fol.C == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(abs.D + fol.D == doctest::Approx(0.0).scale(1e3).epsilon(1e-9));
}

TEST_CASE("piece coefficients equal the closed forms") {
  std::mt19937_64 rng(21);
  const double L = 400;
  for (int n = 0; n < 100; ++n) {
    const Pair p = random_pair(rng, L);
    const auto pieces = gap_pieces(profile(p.k, L, 30), profile(p.i, L, 30));
    for (const auto& g : pieces) {
      const GapPiece a = g.absolute();
      const oracle::Cubic4 ref = g.phase == GapPhase::kCz ? oracle::gap_cz(p.k, p.i, L)
                                                          : oracle::gap_mz(p.k, p.i, L);
      CHECK(oracle::rel_err(a.A, ref.A) < 1e-9);
      CHECK(oracle::rel_err(a.B, ref.B) < 1e-9);
      CHECK(oracle::rel_err(a.C, ref.C) < 1e-9);
      CHECK(oracle::rel_err(a.D, ref.D) < 1e-9);
    }
  }
}

TEST_CASE("pieces are continuous and differentiate to speed and control gaps") {
  std::mt19937_64 rng(8);
  const double L = 400;
  for (int n = 0; n < 100; ++n) {
    const Pair p = random_pair(rng, L);
    const auto k = profile(p.k, L, 30), i = profile(p.i, L, 30);
    const auto pieces = gap_pieces(k, i);
    if (pieces.size() == 2)
      CHECK(std::fabs(pieces[0](k.tm()) - pieces[1](k.tm())) < 1e-9);
    for (const auto& g : pieces)
      for (int j = 0; j <= 10; ++j) {
        const double t = g.t_lo + (g.t_hi - g.t_lo) * j / 10.0;
        const bool cz = g.phase == GapPhase::kCz;
        const double vk = cz ? k.eval_cubic(t).v : k.vm();
        const double uk = cz ? k.eval_cubic(t).u : 0.0;
        CHECK(std::fabs(g.rate(t) - (vk - i.eval(t).v)) < 1e-9);
        CHECK(std::fabs(g.acceleration(t) - (uk - i.eval(t).u)) < 1e-9);
      }
  }
}

TEST_CASE("analytic minimum agrees with dense sampling") {
  std::mt19937_64 rng(1);
  const double L = 400;
  for (int n = 0; n < 30; ++n) {
    const Pair p = random_pair(rng, L);
    const GapMinimum m = min_gap(gap_pieces(profile(p.k, L, 30), profile(p.i, L, 30)));
    const double ref = oracle::dense_min_gap(p.k, p.i, L);
    CHECK(std::fabs(m.s_star - ref) <= 1e-3);
    CHECK(m.s_star <= ref + 1e-9);
  }
}

TEST_CASE("interior dip is located and bracketed") {
  // Fast follower behind a slow leader that later speeds up.
  const double L = 400;
  const oracle::Endpoints k{0, 7, 32, 15}, i{2, 15, 34, 13};
  const auto pieces = gap_pieces(profile(k, L, 30), profile(i, L, 30));
  const GapMinimum m = min_gap(pieces);
  CHECK(m.case_tag == GapCase::kInteriorCz);
  CHECK(m.t_star > i.t0);
  CHECK(m.t_star < i.tm);
  CHECK(m.s_star == doctest::Approx(oracle::dense_min_gap(k, i, L, 1e-4)).epsilon(1e-6));

  const double level = m.s_star + 2.0;
  const auto below = intervals_below(pieces, level);
  REQUIRE(below.size() == 1);
  CHECK(below[0].first < m.t_star);
  CHECK(below[0].second > m.t_star);
  for (double t : {below[0].first, below[0].second}) {
    const GapPiece& g = t <= pieces[0].t_hi ? pieces[0] : pieces.back();
    CHECK(g(t) == doctest::Approx(level).epsilon(1e-9));
  }
}

TEST_CASE("t_k_delta") {
  const auto cruise = solve_profile(0, 10, 40, 10, 400, 30);
  CHECK(t_k_delta(cruise, 10.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(t_k_delta(cruise, 0.0) == 0.0);
  CHECK(t_k_delta(cruise, 415.0) == doctest::Approx(41.5).epsilon(1e-12));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> sp(7, 15), avg(8, 14), d(1, 60);
  for (int n = 0; n < 50; ++n) {
    const double v0 = sp(rng), vm = sp(rng), tm = 400 / avg(rng);
    const auto k = solve_profile(0, v0, tm, vm, 400, 30);
    const double delta = d(rng);
    const double t = t_k_delta(k, delta);
    CHECK(std::fabs(k.eval(t).p - delta) < 1e-9);
    // Smallest root: position stays below delta on a fine grid before it.
    const double ref = oracle::bisect([&](double x) { return k.eval(x).p - delta; }, 0.0, tm);
    if (k.eval(ref).v > 0) CHECK(t == doctest::Approx(ref).epsilon(1e-9));
    for (double x = 0; x < t - 1e-6; x += t / 200) CHECK(k.eval(x).p < delta + 1e-12);
  }
}

TEST_CASE("verdicts") {
  const SystemParams prm = reference_params();
  const auto ctx = same_lane_context(0, 10, 40, 10, prm);
  const double tkf = ctx.leader->tf();

  for (double up : {7.5, 9.0, 11.0, 13.0, 14.5}) {
    const auto v = is_feasible(tkf, up, ctx);
    REQUIRE(v.minimum);
    CHECK(v.gap_ok);
    CHECK(v.minimum->s_star >= prm.delta);
  }
  // Entering while the leader is only 5 m in: infeasible whatever the speed,
  // and for slow entries the minimum sits at the entry itself.
  int at_entry = 0;
  for (double up = 7.0; up <= 15.0; up += 0.5) {
    const auto early = is_feasible(0.5, up, ctx);
    REQUIRE(early.minimum);
    CHECK_FALSE(early.gap_ok);
    CHECK(early.minimum->s_star <= 5.0 + 1e-12);
    if (early.minimum->case_tag == GapCase::kAtTau) {
      CHECK(early.minimum->s_star == doctest::Approx(5.0));
      ++at_entry;
    }
  }
  CHECK(at_entry > 0);

  CHECK(is_feasible(-1.0, 10.0, ctx).status() == FeasibilityVerdict::Status::kError);
  CHECK(is_feasible(5.0, 20.0, ctx).status() == FeasibilityVerdict::Status::kError);

  FeasibilityContext lone;
  lone.params = prm;
  const auto free = is_feasible(3.0, 10.0, lone);
  CHECK(free.gap_ok);
  CHECK_FALSE(free.minimum);
}

TEST_CASE("L-rule pairs end exactly delta apart") {
  const SystemParams prm = reference_params();
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> sp(7, 15), avg(8, 14), lag(0, 15);
  int checked = 0;
  for (int n = 0; n < 400 && checked < 50; ++n) {
    const double vk0 = sp(rng), vkm = sp(rng), tkm = 400 / avg(rng);
    const auto ctx = same_lane_context(0, vk0, tkm, vkm, prm);
    const auto v = is_feasible(lag(rng), sp(rng), ctx);
    if (v.status() == FeasibilityVerdict::Status::kError || v.constrained) continue;
    if (v.schedule->case_tag != CaseTag::kL || v.schedule->bound_active) continue;
    const double tim = v.schedule->tm;
    const double pk = prm.L + ctx.leader->vm() * (tim - ctx.leader->tm());
    CHECK(std::fabs(pk - v.profile->eval(tim).p - prm.delta) < 1e-6);
    ++checked;
  }
  CHECK(checked >= 20);
}

TEST_CASE("grid shape and boundary accuracy") {
  const SystemParams prm = reference_params();
  const auto ctx = same_lane_context(0, 10, 40, 10, prm);

  const auto tiny = feasibility_grid(ctx, 44, 48, 7, 15, 2, 2);
  CHECK(tiny.s_star.size() == 4);
  CHECK(tiny.boundary.empty());

  GridOptions keep;
  const auto g = feasibility_grid(ctx, 0, 48, 7, 15, 60, 40, keep);
  std::size_t feasible = 0;
  for (std::size_t iu = 0; iu < g.upsilon.size(); ++iu)
    for (std::size_t it = 0; it < g.tau.size(); ++it) feasible += g.feasible(iu, it);
  CHECK(feasible > 0);
  REQUIRE_FALSE(g.boundary.empty());

  for (const auto& line : g.boundary)
    for (auto [tau, up] : line) {
      const auto v = is_feasible(tau, up, ctx);
      REQUIRE(v.minimum);
      CHECK(std::fabs(v.minimum->s_star - prm.delta) <= 1e-3);
      // The verdict flips across the level set.
      const auto a = is_feasible(tau - 0.05, up, ctx), b = is_feasible(tau + 0.05, up, ctx);
      if (a.minimum && b.minimum)
        CHECK((a.minimum->s_star - prm.delta) * (b.minimum->s_star - prm.delta) <= 1e-6);
    }
}

TEST_CASE("grid is deterministic across runs") {
  const SystemParams prm = reference_params();
  const auto ctx = same_lane_context(0, 10, 40, 10, prm);
  const auto a = feasibility_grid(ctx, 0, 48, 7, 15, 50, 50);
  const auto b = feasibility_grid(ctx, 0, 48, 7, 15, 50, 50);
  CHECK(a.boundary == b.boundary);
  for (std::size_t k = 0; k < a.s_star.size(); ++k)
    CHECK((a.s_star[k] == b.s_star[k] || (std::isnan(a.s_star[k]) && std::isnan(b.s_star[k]))));
}

TEST_CASE("s_star grows with tau past t_k_delta in the constant-leader setup") {
  const SystemParams prm = reference_params();
  const auto ctx = same_lane_context(0, 10, 40, 10, prm);
  const double start = t_k_delta(*ctx.leader, prm.delta);
  for (double up : {8.0, 10.0, 12.0, 14.0}) {
    double prev = -1e9;
    for (double tau = start; tau <= 48.0; tau += 0.25) {
      const auto v = is_feasible(tau, up, ctx);
      if (!v.minimum) continue;
      CHECK(v.minimum->s_star >= prev - 1e-9);
      prev = v.minimum->s_star;
    }
  }
}
