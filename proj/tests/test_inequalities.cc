#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "hardylab/inequalities.hh"

using namespace hardylab;
using Catch::Matchers::WithinAbs;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("vector inequality margin at a hand-computed point") {
  // p = 4, a = b = e1: |a+b|^4 = 16, rhs = 1 + 4 + 1/7.
  const double m = lindqvist_margin({1, 0}, {1, 0}, 4.0);
  CHECK_THAT(m, WithinAbs(16.0 - 5.0 - 1.0 / 7.0, 1e-12));
}

TEST_CASE("vector inequality is an identity at p = 2") {
  Rng rng(5);
  double worst = 0.0;
  for (int s = 0; s < 10000; ++s) {
    const Vec2 a{rng.uniform(-10, 10), rng.uniform(-10, 10)};
    const Vec2 b{rng.uniform(-10, 10), rng.uniform(-10, 10)};
    double scale;
    worst = std::max(worst, std::abs(lindqvist_margin(a, b, 2.0, -1.0, &scale)) / scale);
  }
  CHECK(worst < 1e-13);
}

TEST_CASE("vector inequality holds below p = 2 with the calibrated constant") {
  const double c = calibrate_c_small_p(1.5);
  Rng rng(9);
  double worst = 1e300;
  for (int s = 0; s < 2000; ++s) {
    const Vec2 a{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const Vec2 b{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    if (norm(a) + norm(b) == 0.0) continue;
    double scale;
    worst = std::min(worst, lindqvist_margin(a, b, 1.5, c, &scale) / scale);
  }
  CHECK(worst >= -1e-12);
}

TEST_CASE("vector inequality guards") {
  CHECK_THROWS_WITH(lindqvist_margin({1, 0}, {0, 1}, 1.0), "p must exceed 1");
  CHECK_THROWS_WITH(lindqvist_margin({1, 0}, {0, 1}, 1.5),
                    "the p < 2 form needs a calibrated constant");
  CHECK_THROWS_WITH(lindqvist_margin({0, 0}, {0, 0}, 1.5, 0.3),
                    "the p < 2 form needs (a, b) != (0, 0)");
}

TEST_CASE("sampled vector check is deterministic per seed and passes") {
  const MarginReport a = lindqvist_check(100000, 7);
  const MarginReport b = lindqvist_check(100000, 7);
  CHECK(a.pass);
  CHECK(a.min_margin >= -1e-12);
  CHECK(a.min_margin == b.min_margin);
  CHECK(a.argmin_sample == b.argmin_sample);
  CHECK(a.samples == 100000);
  CHECK(a.seed == 7);
  const MarginReport c = lindqvist_check(100000, 8);
  CHECK(c.pass);
  CHECK(c.argmin_sample != a.argmin_sample);
}

TEST_CASE("small-p calibration agrees with its analytic edge") {
  // Closed form of the t -> 0 limit.
  CHECK_THAT(calibration_limit(1.5, 0.0), WithinAbs(0.375, 1e-15));
  CHECK_THAT(calibration_limit(1.5, kPi / 2), WithinAbs(0.75, 1e-15));
  // The infimum never exceeds the worst edge value 0.5 p (p - 1).
  const double c15 = calibrate_c_small_p(1.5);
  CHECK(c15 > 0.2);
  CHECK(c15 <= 0.375 + 1e-12);
  // Approaching p = 2 the constant must approach 1 (the p >= 2 formula).
  const double c1999 = calibrate_c_small_p(1.999);
  CHECK_THAT(c1999, WithinAbs(0.998501, 1e-3));
  CHECK(std::abs(c1999 - 1.0) <= 0.05);
  CHECK_THROWS_WITH(calibrate_c_small_p(2.5), "calibration applies to p in (1,2)");
}

TEST_CASE("remainder constant switches form at p = 2") {
  CHECK(remainder_constant(2.0) == 1.0);
  CHECK_THAT(remainder_constant(3.0), WithinAbs(1.0 / 3.0, 1e-15));
  CHECK_THAT(remainder_constant(4.0), WithinAbs(1.0 / 7.0, 1e-15));
  CHECK_THAT(remainder_constant(1.5), WithinAbs(calibrate_c_small_p(1.5), 1e-12));
}

TEST_CASE("closed-form profile fields carry the exact angular data") {
  const EigenField f = build_eigenfield(2.0, 2, kPi, true);
  CHECK(f.mu == 1.0);
  CHECK(f.exponent == 0.0);
  CHECK_THAT(f.V_at(0.0), WithinAbs(0.0, 1e-12));
  CHECK(f.dV_at(0.0) > 0.0);

  const EigenField g = build_eigenfield(2.0, 3, kPi / 2, true);
  CHECK(g.mu == 2.25);
  CHECK(g.exponent == -0.5);

  CHECK_THROWS_WITH(build_eigenfield(3.0, 2, kPi, true),
                    "closed-form profiles are available at p = 2 only");
  CHECK_THROWS_WITH(build_eigenfield(2.0, 3, 1.0, true),
                    "no closed-form profile for these parameters");
}

TEST_CASE("weak residual of the exact profile is at quadrature noise level") {
  const EigenField f = build_eigenfield(2.0, 2, kPi, true);
  const ResidualReport rr = weak_residual(f, f.mu, 1);
  CHECK(rr.worst < 1e-10);
  CHECK(rr.level == 1);
  CHECK(rr.points > 0);
  CHECK(rr.per_test.size() >= 4);
}

TEST_CASE("weak residual of the solved profile is small but nonzero") {
  const EigenField f = build_eigenfield(2.0, 2, kPi, false);
  const ResidualReport rr = weak_residual(f, f.mu, 1);
  CHECK(rr.worst < 5e-6);
  CHECK(rr.worst > 0.0);
}

TEST_CASE("reduction remainder vanishes at p = 2 and stays positive elsewhere") {
  const MarginReport r2 = reduction_remainder_check(2.0, 6, 7, 1e-3, true, 160, 160);
  CHECK(r2.pass);
  CHECK(std::abs(r2.min_margin) < 1e-8);

  const MarginReport r3 = reduction_remainder_check(3.0, 4, 7, 1e-3, false, 120, 120);
  CHECK(r3.pass);
  CHECK(r3.min_margin >= 0.0);

  const MarginReport r15 = reduction_remainder_check(1.5, 4, 7, 1e-3, false, 120, 120);
  CHECK(r15.pass);
  CHECK(r15.min_margin >= 0.0);
}

TEST_CASE("reduction remainder rejects sign-changing trial fields") {
  const EigenField f = build_eigenfield(2.0, 2, kPi, true);
  ConeField bad = [](double, double) {
    ConeSample s;
    s.u = -1.0;
    return s;
  };
  CHECK_THROWS_WITH(reduction_remainder_margin(f, f.mu, 0.0, bad, 1e-2, 20, 20),
                    "trial fields must be nonnegative");
}

TEST_CASE("distance substitution is an identity at p = 2") {
  double scale;
  const double m =
      distance_substitution_margin(2.0, 1.0, 0.5, 1.3, {0.2, -0.1}, {1, 0}, &scale);
  CHECK(std::abs(m) / scale < 1e-14);
  CHECK_THROWS_WITH(
      distance_substitution_margin(2.0, 1.0, 0.5, 1.3, {0.2, -0.1}, {1, 1}),
      "distance gradients must be unit vectors");
}

TEST_CASE("sampled distance substitution checks") {
  const MarginReport d2 = distance_substitution_check(2.0, 10000);
  CHECK(d2.pass);
  CHECK(std::abs(d2.min_margin) < 1e-12);
  const MarginReport d3 = distance_substitution_check(3.0, 4000);
  CHECK(d3.pass);
  CHECK(d3.min_margin >= -1e-12);
  const MarginReport again = distance_substitution_check(3.0, 4000);
  CHECK(again.min_margin == d3.min_margin);
}

TEST_CASE("interval threshold stays above the improved lower bound") {
  const MarginReport r = tidblom_1d_check(2.0);
  CHECK(r.pass);
  CHECK(r.parameters.at("bound") == 4.0);
  CHECK_THAT(r.parameters.at("value"), WithinAbs(5.853478, 1e-4));
  CHECK(r.min_margin > 0.4);
  CHECK(r.min_margin < 0.5);
}

TEST_CASE("volume lower bound on the first eigenvalue") {
  const MarginReport hd = bv_ggm_check(DomainSpec::half_ball(2, 1.0));
  CHECK(hd.pass);
  CHECK(hd.min_margin > 0.05);
  CHECK(hd.parameters.at("lambda1") > hd.parameters.at("bound"));

  const MarginReport sq = bv_ggm_check(DomainSpec::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
  CHECK(sq.pass);
  CHECK(sq.min_margin > 0.05);
}

TEST_CASE("collar lift tightens as the collar narrows") {
  const DomainSpec sq = DomainSpec::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  const auto rows = lift_1d_profile(sq, {0.2, 0.1});
  REQUIRE(rows.size() == 2);
  // The 1D profile value is scale invariant in the collar width.
  CHECK_THAT(rows[0].value_1d, WithinAbs(rows[1].value_1d, 1e-9));
  CHECK_THAT(rows[0].value_1d, WithinAbs(0.254276, 1e-5));
  for (const LiftRow& row : rows) {
    CHECK(row.lifted >= row.value_1d);
    CHECK_THAT(row.lifted, WithinAbs(0.314, 5e-4));
  }
  CHECK(rows[1].lifted <= rows[0].lifted + 1e-12);
  CHECK_THROWS_WITH(lift_1d_profile(DomainSpec::half_ball(2, 1.0), {0.1}),
                    "collar lift requires a polygon");
}
