#pragma once
// Fixed quadrature rules: 3-point Gauss on segments (degree 5) and a 6-point
// order-4 symmetric rule on triangles, with one-level subdivision refinement
// for elements adjacent to a singular weight.
#include <array>
#include <cmath>

namespace hardylab {

struct Gauss1D {
  // Points on the reference segment (0,1).
  static constexpr int n = 3;
  static constexpr std::array<double, 3> pts = {
      0.11270166537925831, 0.5, 0.8872983346207417};
  static constexpr std::array<double, 3> wts = {
      5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
};

struct Tri6 {
  // Barycentric coordinates (l1, l2) with l3 = 1 - l1 - l2; weights sum to 1.
  static constexpr int n = 6;
  static constexpr std::array<std::array<double, 2>, 6> pts = {{
      {0.445948490915965, 0.445948490915965},
      {0.445948490915965, 0.108103018168070},
      {0.108103018168070, 0.445948490915965},
      {0.091576213509771, 0.091576213509771},
      {0.091576213509771, 0.816847572980459},
      {0.816847572980459, 0.091576213509771},
  }};
  static constexpr std::array<double, 6> wts = {
      0.223381589678011, 0.223381589678011, 0.223381589678011,
      0.109951743655322, 0.109951743655322, 0.109951743655322};
};

struct QuadratureRule {
  int exactness_degree = 4;
  bool subdivide_near_singularity = true;
};

// Visit quadrature points of a segment [a, b]; cb(x, weight*length).
template <class F>
inline void segment_quadrature(double a, double b, bool subdivide, F&& cb) {
  const int halves = subdivide ? 2 : 1;
  const double h = (b - a) / halves;
  for (int s = 0; s < halves; ++s) {
    const double lo = a + s * h;
    for (int q = 0; q < Gauss1D::n; ++q)
      cb(lo + Gauss1D::pts[q] * h, Gauss1D::wts[q] * h);
  }
}

// Visit quadrature points of a triangle (a, b, c); cb(l1, l2, l3, weight)
// with the weight scaled so the weights over the element sum to 1.
template <class F>
inline void triangle_quadrature(bool subdivide, F&& cb) {
  if (!subdivide) {
    for (int q = 0; q < Tri6::n; ++q) {
      const double l1 = Tri6::pts[q][0], l2 = Tri6::pts[q][1];
      cb(l1, l2, 1.0 - l1 - l2, Tri6::wts[q]);
    }
    return;
  }
  // One level of red refinement: four children, each mapped back to parent
  // barycentric coordinates; child areas are a quarter of the parent's.
  static constexpr std::array<std::array<std::array<double, 3>, 3>, 4> children = {{
      {{{1, 0, 0}, {0.5, 0.5, 0}, {0.5, 0, 0.5}}},
      {{{0.5, 0.5, 0}, {0, 1, 0}, {0, 0.5, 0.5}}},
      {{{0.5, 0, 0.5}, {0, 0.5, 0.5}, {0, 0, 1}}},
      {{{0.5, 0.5, 0}, {0, 0.5, 0.5}, {0.5, 0, 0.5}}},
  }};
  for (const auto& ch : children) {
    for (int q = 0; q < Tri6::n; ++q) {
      const double s1 = Tri6::pts[q][0], s2 = Tri6::pts[q][1];
      const double s3 = 1.0 - s1 - s2;
      double l1 = s1 * ch[0][0] + s2 * ch[1][0] + s3 * ch[2][0];
      double l2 = s1 * ch[0][1] + s2 * ch[1][1] + s3 * ch[2][1];
      double l3 = s1 * ch[0][2] + s2 * ch[1][2] + s3 * ch[2][2];
      cb(l1, l2, l3, 0.25 * Tri6::wts[q]);
    }
  }
}

}  // namespace hardylab
