#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "hardylab/common.hh"

using namespace hardylab;

TEST_CASE("fnv1a64 matches the published 64-bit test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("fnv1a64 separates nearby strings") {
  CHECK(fnv1a64("config-a") != fnv1a64("config-b"));
  CHECK(fnv1a64("ab") != fnv1a64("ba"));
}

TEST_CASE("rng is deterministic per seed and distinct across seeds") {
  Rng a(42), b(42), c(43);
  bool same = true, differs = false;
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t va = a.next();
    same = same && (va == b.next());
    differs = differs || (va != c.next());
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("rng uniform mappings stay in range with a sane mean") {
  Rng r(7);
  double sum = 0.0;
  bool in01 = true, inab = true;
  for (int i = 0; i < 20000; ++i) {
    const double u = r.uniform01();
    in01 = in01 && u >= 0.0 && u < 1.0;
    sum += u;
    const double v = r.uniform(-3.0, 5.0);
    inab = inab && v >= -3.0 && v < 5.0;
  }
  CHECK(in01);
  CHECK(inab);
  CHECK(std::abs(sum / 20000.0 - 0.5) < 0.02);
}

TEST_CASE("aitken extrapolation is exact on geometric sequences") {
  // v_k = L + C r^k is resolved exactly by delta-squared.
  std::vector<double> v = {3.0, 2.5, 2.25};
  auto lim = aitken_limit(v);
  REQUIRE(lim.has_value());
  CHECK_THAT(*lim, Catch::Matchers::WithinAbs(2.0, 1e-14));

  std::vector<double> w;
  for (int k = 0; k < 5; ++k) w.push_back(7.0 - 2.0 * std::pow(0.3, k));
  lim = aitken_limit(w);
  REQUIRE(lim.has_value());
  CHECK_THAT(*lim, Catch::Matchers::WithinAbs(7.0, 1e-12));
}

TEST_CASE("aitken needs three levels and survives a stalled tail") {
  CHECK_FALSE(aitken_limit({1.0}).has_value());
  CHECK_FALSE(aitken_limit({1.0, 2.0}).has_value());
  auto lim = aitken_limit({5.0, 5.0, 5.0});
  REQUIRE(lim.has_value());
  CHECK(*lim == 5.0);
}

TEST_CASE("richardson extrapolation removes the leading error term") {
  // First order: v(h) = 1 + h with h in {1, 0.5}.
  CHECK_THAT(richardson_limit(2.0, 1.5, 1.0), Catch::Matchers::WithinAbs(1.0, 1e-14));
  // Second order: v(h) = 1 + c h^2 for any c.
  const double c = 0.37;
  CHECK_THAT(richardson_limit(1.0 + 4.0 * c, 1.0 + c, 2.0),
             Catch::Matchers::WithinAbs(1.0, 1e-14));
}

TEST_CASE("estimated order recovers the geometric rate") {
  std::vector<double> v;
  for (int k = 0; k < 4; ++k) v.push_back(1.0 + std::pow(0.25, k));
  CHECK_THAT(estimated_order(v), Catch::Matchers::WithinAbs(2.0, 1e-10));
  CHECK(estimated_order({1.0, 2.0}) == 0.0);
  // Oscillating differences give no usable order.
  CHECK(estimated_order({1.0, 2.0, 1.5, 1.75}) == 0.0);
}

TEST_CASE("monotone check honours the slack parameter") {
  CHECK(monotone_non_increasing({3.0, 2.0, 2.0, 1.0}));
  CHECK_FALSE(monotone_non_increasing({1.0, 2.0}));
  CHECK(monotone_non_increasing({1.0, 1.0 + 1e-13}, 1e-12));
  CHECK_FALSE(monotone_non_increasing({1.0, 1.0 + 1e-11}, 1e-12));
}

TEST_CASE("error types preserve messages and derive from runtime_error") {
  auto as_runtime = [](const std::runtime_error& e) { return std::string(e.what()); };
  CHECK(as_runtime(SpecError("s")) == "s");
  CHECK(as_runtime(ConfigError("c")) == "c");
  CHECK(as_runtime(ViolationError("v")) == "v");
  CHECK(as_runtime(ConditioningError("x")) == "x");
}
