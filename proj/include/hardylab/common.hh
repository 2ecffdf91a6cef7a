#pragma once
// Small shared utilities: deterministic hashing/RNG, extrapolation, errors.
#include <cstdint>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hardylab {

struct SpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ViolationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConditioningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Deterministic, platform-independent RNG (splitmix64 core) with explicit
// uniform mappings; std::<distribution> implementations vary across stdlibs.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }
};

// Aitken delta-squared applied to the tail of a level sequence.
inline std::optional<double> aitken_limit(const std::vector<double>& v) {
  if (v.size() < 3) return std::nullopt;
  const std::size_t n = v.size();
  const double d1 = v[n - 2] - v[n - 3];
  const double d2 = v[n - 1] - v[n - 2];
  const double den = d2 - d1;
  if (std::abs(den) < 1e-300) return v[n - 1];
  return v[n - 1] - d2 * d2 / den;
}

// Richardson extrapolation for a sequence with error ~ C h^q, h halved per level.
inline double richardson_limit(double coarse, double fine, double order) {
  const double f = std::pow(2.0, order);
  return (f * fine - coarse) / (f - 1.0);
}

inline double estimated_order(const std::vector<double>& v) {
  if (v.size() < 3) return 0.0;
  const std::size_t n = v.size();
  const double d1 = v[n - 2] - v[n - 3];
  const double d2 = v[n - 1] - v[n - 2];
  if (d2 == 0.0 || d1 / d2 <= 0.0) return 0.0;
  return std::log2(std::abs(d1 / d2));
}

inline bool monotone_non_increasing(const std::vector<double>& v, double slack = 0.0) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1] + slack) return false;
  return true;
}

}  // namespace hardylab
