#include <doctest.h>

#include <random>

#include "cav/fez.hpp"
#include "oracles.hpp"

using namespace cav;

TEST_CASE("FEZ length") {
  const SystemParams p = reference_params();
  CHECK(fez_length(p) == 44.0);
  CHECK(fez_length(10, 10, -2) == 0.0);
  CHECK(fez_length(5, 13, -2) == doctest::Approx(36.0).epsilon(1e-15));
  CHECK(oracle::distance_to_speed(13, 5, -2) == doctest::Approx(36.0).epsilon(1e-9));
  CHECK(oracle::distance_to_speed(15, 7, -2) == doctest::Approx(44.0).epsilon(1e-9));
  CHECK_THROWS_AS(fez_length(7, 15, 0.0), ParameterError);
  CHECK_THROWS_AS(fez_length(7, 15, 0.5), ParameterError);
}

TEST_CASE("parameter condition") {
  const SystemParams p = reference_params();
  CHECK(check_parameter_condition(p));
  CHECK((p.v_min - p.v_max) / p.u_B == 4.0);
  CHECK_FALSE(check_parameter_condition(7, 15, -8, 10));
  CHECK(check_parameter_condition(7, 15, -8, 0));
  CHECK(check_parameter_condition(7, 15, -100, 0));

  const FezDesign d = design_fez(p);
  CHECK(d.f_bar == 44.0);
  CHECK(d.condition_ok);
  CHECK(d.worst_case_target(10.0) == std::pair{14.0, 7.0});
}

TEST_CASE("entry distance") {
  CHECK(entry_distance(15, 7, -2) == 44.0);
  CHECK(entry_distance(9, 9, -2) == 0.0);
  CHECK(entry_distance(7, 15, 3) == doctest::Approx(176.0 / 6.0).epsilon(1e-15));
  CHECK(entry_distance(7, 15, 3) == doctest::Approx(oracle::distance_to_speed(7, 15, 3)).epsilon(1e-9));
  CHECK_THROWS_AS(entry_distance(7, 15, -2), InvalidManeuver);
  CHECK_THROWS_AS(entry_distance(15, 7, 3), InvalidManeuver);
  CHECK_THROWS_AS(entry_distance(15, 7, 0), InvalidManeuver);
}

TEST_CASE("plans") {
  const SystemParams p = reference_params();

  FeasibilityContext lone;
  lone.params = p;
  const FezPlan cruise = plan_fez_control({1, 3.0, 11.0}, lone);
  CHECK(cruise.tau == doctest::Approx(3.0 + 44.0 / 11.0));
  CHECK(cruise.upsilon == 11.0);
  CHECK(cruise.feasible);
  CHECK_FALSE(cruise.fallback);

  const FezPlan worst = worst_case_plan(0.0, 15.0, 44.0, p);
  CHECK(worst.fallback);
  REQUIRE(worst.segments.size() == 1);
  CHECK(worst.segments[0].u == -2.0);
  CHECK(worst.segments[0].duration == doctest::Approx(4.0));
  CHECK(worst.tau == doctest::Approx(4.0));
  CHECK(worst.upsilon == 7.0);
  CHECK(worst.state_at(worst.tau).distance == doctest::Approx(44.0));

  SystemParams bad = p;
  bad.u_min = -9;
  bad.u_B = -8;
  CHECK_THROWS_AS(plan_fez_control({1, 0.0, 10.0}, FeasibilityContext{{}, {}, {}, bad}),
                  CannotGuarantee);
}

TEST_CASE("planned manoeuvres respect the box and their verdict") {
  const SystemParams p = reference_params();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> sp(7, 15), avg(8, 14), lag(0, 6);
  for (int n = 0; n < 40; ++n) {
    const double vk0 = sp(rng), tkm = 400.0 / avg(rng);
    const auto ctx = same_lane_context(0.0, vk0, tkm, sp(rng), p);
    const double v_F = sp(rng);
    const double t_F = lag(rng) - p.fez_length / v_F;
    const FezPlan plan = plan_fez_control({2, t_F, v_F}, ctx);

    double dist = 0, v = v_F, clock = t_F;
    for (const FezSegment& s : plan.segments) {
      CHECK(s.duration >= 0);
      CHECK(s.u >= p.u_B - 1e-12);
      CHECK(s.u <= p.u_max + 1e-12);
      dist += v * s.duration + 0.5 * s.u * s.duration * s.duration;
      v += s.u * s.duration;
      clock += s.duration;
      CHECK(v >= p.v_min - 1e-9);
      CHECK(v <= p.v_max + 1e-9);
    }
    CHECK(dist == doctest::Approx(p.fez_length).epsilon(1e-9));
    CHECK(clock == doctest::Approx(plan.tau).epsilon(1e-12));
    CHECK(v == doctest::Approx(plan.upsilon).epsilon(1e-9));

    const auto verdict = is_feasible(plan.tau, plan.upsilon, ctx);
    CHECK(plan.feasible == (verdict.status() != FeasibilityVerdict::Status::kError &&
                            verdict.gap_ok));
  }
}
