#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "hardylab/solvers.hh"
#include "oracles.hh"

using namespace hardylab;
using Catch::Matchers::WithinAbs;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("closed-form oracle values used throughout") {
  CHECK(testoracle::interval_constant(2.0) == 0.25);
  CHECK_THAT(testoracle::interval_constant(3.0), WithinAbs(8.0 / 27.0, 1e-15));
  CHECK_THAT(testoracle::plane_cap_value(kPi), WithinAbs(1.0, 1e-15));
  CHECK_THAT(testoracle::plane_cap_value(1.5 * kPi), WithinAbs(4.0 / 9.0, 1e-15));
  CHECK(testoracle::half_sphere_cap_value() == 2.25);
  // Bessel roots bisected from the standard library implementation.
  CHECK_THAT(testoracle::j01(), WithinAbs(2.404825557695773, 1e-12));
  CHECK_THAT(testoracle::radial_fd_limit(0), WithinAbs(std::pow(testoracle::j01(), 2), 1e-6));
}

TEST_CASE("weightless interval eigenvalue converges to pi^2 from above") {
  SolveOptions o;
  o.levels = 2;
  ProblemSpec pr;
  pr.weight = Weight::None;
  const SolveResult r = minimize_quotient(DomainSpec::interval(1.0), pr, o);
  const double pi2 = kPi * kPi;
  REQUIRE(r.level_values.size() == 2);
  CHECK(r.level_values[0] > r.level_values[1]);
  CHECK(r.level_values[1] >= pi2 - 1e-12);
  CHECK_THAT(r.level_values[1], WithinAbs(pi2, 1e-5));
}

TEST_CASE("interval constant p=2: level values decrease toward 1/4 from above") {
  SolveOptions o;
  o.levels = 2;
  ProblemSpec pr;
  const SolveResult r = minimize_quotient(DomainSpec::interval(1.0), pr, o);
  REQUIRE(r.level_values.size() == 2);
  CHECK_THAT(r.level_values[0], WithinAbs(0.27673890, 1e-6));
  CHECK_THAT(r.level_values[1], WithinAbs(0.25956082, 1e-6));
  CHECK(r.level_values[0] > r.level_values[1]);
  CHECK(r.level_values[1] >= 0.25);
  CHECK(r.converged);
  CHECK(r.value == r.level_values.back());  // no extrapolation below 3 levels
  CHECK(std::isnan(r.extrapolated));
}

TEST_CASE("interval constant p=3 via descent") {
  SolveOptions o;
  o.levels = 2;
  ProblemSpec pr;
  pr.p = 3.0;
  const SolveResult r = minimize_quotient(DomainSpec::interval(1.0), pr, o);
  CHECK_THAT(r.level_values[0], WithinAbs(0.31987703, 1e-5));
  CHECK_THAT(r.level_values[1], WithinAbs(0.30492796, 1e-5));
  CHECK(r.level_values[1] >= 8.0 / 27.0);
  CHECK(r.converged);
  CHECK(r.iterations > 0);
}

TEST_CASE("cap solves reproduce the angular closed forms") {
  CHECK_THAT(solve_cap(2.0, 2, kPi).value, WithinAbs(1.0, 1e-6));
  CHECK_THAT(solve_cap(2.0, 2, 1.5 * kPi).value, WithinAbs(4.0 / 9.0, 1e-4));
  CHECK_THAT(solve_cap(2.0, 2, kPi / 2).value,
             WithinAbs(testoracle::plane_cap_value(kPi / 2), 1e-3));
  CHECK_THAT(solve_cap(2.0, 3, kPi / 2).value, WithinAbs(2.25, 1e-4));
  CHECK_THROWS_WITH(solve_cap(2.0, 2, 0.0), "cap angle out of range");
}

TEST_CASE("radial constant with one Dirichlet end against the independent oracle") {
  const SolveResult r = lambda_p_constant(2.0);
  CHECK_THAT(r.value, WithinAbs(5.78318596, 1e-6));
  CHECK_THAT(r.value, WithinAbs(testoracle::radial_fd_limit(0), 1e-3));
  CHECK_THAT(r.value, WithinAbs(std::pow(testoracle::j01(), 2), 1e-3));
  // Forcing a Dirichlet condition at the natural end must raise the value by
  // a visible margin: the two boundary-value problems are genuinely distinct.
  REQUIRE(r.extras.count("value_both_ends") == 1);
  REQUIRE(r.extras.count("boundary_condition_gap") == 1);
  CHECK(r.extras.at("value_both_ends") > r.value);
  CHECK(r.extras.at("boundary_condition_gap") > 0.5);
}

TEST_CASE("radial constants stay at or above one across exponents") {
  const double expected[] = {2.92001061, 19.20103689, 59.18116340};
  const double ps[] = {1.5, 3.0, 4.0};
  for (int i = 0; i < 3; ++i) {
    const SolveResult r = lambda_p_constant(ps[i]);
    INFO("p=" << ps[i]);
    CHECK_THAT(r.value, WithinAbs(expected[i], 1e-5));
    CHECK(r.value >= 1.0);
  }
}

TEST_CASE("half-space reference constants") {
  CHECK(halfspace_reference(2.0, 1) == 0.25);
  CHECK_THAT(halfspace_reference(3.0, 1), WithinAbs(8.0 / 27.0, 1e-15));
  CHECK_THAT(halfspace_reference(1.5, 1), WithinAbs(std::pow(1.0 / 3.0, 1.5), 1e-15));
  CHECK(halfspace_reference(2.0, 2) == 1.0);
}

TEST_CASE("direct threshold estimate on the interval") {
  SolveOptions o;
  o.levels = 2;
  const SolveResult r = lambda_star_direct(DomainSpec::interval(1.0), 2.0, o);
  CHECK_THAT(r.level_values.back(), WithinAbs(5.962968, 1e-5));
  REQUIRE(r.extras.count("reference") == 1);
  CHECK(r.extras.at("reference") == 0.25);
  CHECK_THAT(r.lambda1_hat, WithinAbs(kPi * kPi, 1e-3));
  CHECK(r.level_values.back() <= r.lambda1_hat);
}

TEST_CASE("direct threshold refuses unsupported domains") {
  CHECK_THROWS_WITH(lambda_star_direct(DomainSpec::sector(0.5, 0.01, 1.0), 2.0),
                    "direct threshold form requires a domain inside a half-ball");
}

TEST_CASE("threshold bisection brackets the crossing deterministically") {
  SolveOptions o;
  o.levels = 1;
  const BisectResult b =
      lambda_star_bisect(DomainSpec::interval(1.0), 2.0, 0.0, 9.8696, o, 12);
  CHECK_THAT(b.threshold, WithinAbs(7.114256, 1e-3));
  CHECK(b.lo < b.threshold);
  CHECK(b.threshold < b.hi);
  CHECK(b.hi - b.lo < 0.01);
  CHECK(b.reference == 0.25);
  CHECK_THAT(b.mu0, WithinAbs(0.26500717, 1e-6));
  CHECK(b.gap > 0.0);
  CHECK(b.bracket_tolerance >= (b.hi - b.lo) / 2);
  CHECK(b.probes.size() >= 12);
}

TEST_CASE("threshold bisection rejects bad brackets") {
  SolveOptions o;
  o.levels = 1;
  CHECK_THROWS_WITH(lambda_star_bisect(DomainSpec::interval(1.0), 2.0, 5.0, 4.0, o),
                    "bracket must satisfy lo < hi");
  CHECK_THROWS_WITH(lambda_star_bisect(DomainSpec::interval(1.0), 2.0, 0.0, 1.0, o, 6),
                    "bracket does not straddle the reference level minus the gap");
}

TEST_CASE("configuration guards on the solve entry points") {
  ProblemSpec bad_p;
  bad_p.p = 1.0;
  CHECK_THROWS_WITH(minimize_quotient(DomainSpec::interval(1.0), bad_p), "p must exceed 1");

  ProblemSpec origin;
  CHECK_THROWS_WITH(
      minimize_quotient(DomainSpec::polygon({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}), origin),
      "origin-power weight requires the singular point on the boundary");

  ProblemSpec not_distance;
  CHECK_THROWS_WITH(nu_lambda(DomainSpec::exterior_lens(1.0, 10.0), not_distance),
                    "distance quotient requires the boundary-distance weight");
}
