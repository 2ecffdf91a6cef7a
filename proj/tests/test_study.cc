#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hardylab/study.hh"

using namespace hardylab;
using Catch::Matchers::WithinAbs;

TEST_CASE("too few levels are graded as a failure, never extrapolated") {
  const StudyReport r = study_convergence({0.3, 0.26}, 0.25, 1e-3);
  CHECK_FALSE(r.pass);
  CHECK_FALSE(r.extrapolation_valid);
  CHECK(r.extrapolated == 0.26);
  REQUIRE(r.notes.size() == 1);
  CHECK(r.notes[0] == "fewer than 3 levels: no extrapolation");

  const StudyReport empty = study_convergence({}, 0.25, 1e-3);
  CHECK_FALSE(empty.pass);
  CHECK(empty.extrapolated == 0.0);
}

TEST_CASE("a clean geometric sequence certifies its limit") {
  // v_k = 0.25 + 0.04 * 4^-k has exact accelerated limit 0.25 and order 2.
  const std::vector<double> v = {0.29, 0.26, 0.2525, 0.250625};
  const StudyReport r = study_convergence(v, 0.25, 1e-10);
  CHECK(r.pass);
  CHECK(r.extrapolation_valid);
  CHECK(r.monotone_toward_target);
  CHECK_THAT(r.extrapolated, WithinAbs(0.25, 1e-12));
  CHECK_THAT(r.estimated_order, WithinAbs(2.0, 1e-9));
  CHECK(r.notes.empty());
  CHECK(r.level_values == v);
  CHECK(r.target == 0.25);
  CHECK(r.tolerance == 1e-10);
}

TEST_CASE("a sequence that moves away from the target is flagged, not extrapolated around") {
  const StudyReport r = study_convergence({0.29, 0.24, 0.27}, 0.25, 1e-1);
  CHECK_FALSE(r.pass);
  CHECK_FALSE(r.monotone_toward_target);
  REQUIRE_FALSE(r.notes.empty());
  CHECK(r.notes[0] == "level sequence not monotone toward the target");
}

TEST_CASE("an extrapolated limit outside the tolerance fails") {
  const StudyReport r = study_convergence({0.30, 0.27, 0.264}, 0.25, 1e-15);
  CHECK(r.monotone_toward_target);
  CHECK(r.extrapolation_valid);
  CHECK_FALSE(r.pass);
  CHECK_THAT(r.extrapolated, WithinAbs(0.2625, 1e-12));
}

TEST_CASE("driving a study through a quotient solve") {
  // Three refinement levels are always run, even if fewer are requested.
  SolveOptions opt;
  opt.levels = 1;
  const StudyReport r =
      run_study(DomainSpec::interval(1.0), ProblemSpec{}, 0.25, 5e-3, opt);
  CHECK(r.pass);
  CHECK(r.level_values.size() == 3);
  CHECK(r.extrapolation_valid);
  CHECK(r.monotone_toward_target);
  CHECK(std::abs(r.extrapolated - 0.25) <= 5e-3);
  for (double v : r.level_values) CHECK(v > 0.25);
}
