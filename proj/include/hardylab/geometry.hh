#pragma once
// Domain descriptions, exact geometric queries (boundary distance, diameter,
// area), and the singular weights entering the quotients.
#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "hardylab/common.hh"

namespace hardylab {

struct Vec2 {
  double x = 0.0, y = 0.0;
};
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 rotate(Vec2 a, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * a.x - s * a.y, s * a.x + c * a.y};
}

enum class DomainKind { Interval, HalfBall, Sector, ConeCap, ExteriorLens, Polygon, Collar };

// One tagged record covers all variants; only the fields of the active
// variant are meaningful.
struct DomainSpec {
  DomainKind kind = DomainKind::Interval;
  double length = 1.0;            // Interval: (0, L), singular endpoint at 0
  int N = 2;                      // HalfBall / ConeCap ambient dimension
  double radius = 1.0;            // HalfBall radius
  double delta = 0.0;             // Sector aperture in (-1, 1)
  double r_inner = 0.0;           // Sector inner radius
  double r_outer = 1.0;           // Sector outer radius
  double axis_angle = 0.0;        // HalfBall/Sector axis rotation about the origin
  double cap_angle = std::numbers::pi / 2;  // ConeCap: polar angle (N>=3) or full arc length (N=2)
  double obstacle_radius = 1.0;   // ExteriorLens: disc through 0, center on +y axis
  double truncation = 1.0;        // ExteriorLens: outer ball radius
  std::vector<Vec2> vertices;     // Polygon, counter-clockwise, simple
  std::shared_ptr<DomainSpec> base;  // Collar base domain
  double width = 0.0;             // Collar width beta

  static DomainSpec interval(double L) {
    DomainSpec d;
    d.kind = DomainKind::Interval;
    d.length = L;
    return d;
  }
  static DomainSpec half_ball(int N, double R, double axis = 0.0) {
    DomainSpec d;
    d.kind = DomainKind::HalfBall;
    d.N = N;
    d.radius = R;
    d.axis_angle = axis;
    return d;
  }
  static DomainSpec sector(double delta, double r, double R, double axis = 0.0) {
    DomainSpec d;
    d.kind = DomainKind::Sector;
    d.delta = delta;
    d.r_inner = r;
    d.r_outer = R;
    d.axis_angle = axis;
    return d;
  }
  static DomainSpec cone_cap(int N, double angle) {
    DomainSpec d;
    d.kind = DomainKind::ConeCap;
    d.N = N;
    d.cap_angle = angle;
    return d;
  }
  static DomainSpec exterior_lens(double obstacle_radius, double truncation) {
    DomainSpec d;
    d.kind = DomainKind::ExteriorLens;
    d.obstacle_radius = obstacle_radius;
    d.truncation = truncation;
    return d;
  }
  static DomainSpec polygon(std::vector<Vec2> verts) {
    DomainSpec d;
    d.kind = DomainKind::Polygon;
    d.vertices = std::move(verts);
    return d;
  }
  static DomainSpec collar(DomainSpec inner_base, double beta) {
    DomainSpec d;
    d.kind = DomainKind::Collar;
    d.base = std::make_shared<DomainSpec>(std::move(inner_base));
    d.width = beta;
    return d;
  }
};

inline void validate(const DomainSpec& d) {
  switch (d.kind) {
    case DomainKind::Interval:
      if (!(d.length > 0)) throw SpecError("interval length must be positive");
      break;
    case DomainKind::HalfBall:
      if (d.N != 1 && d.N != 2) throw SpecError("half-ball dimension must be 1 or 2");
      if (!(d.radius > 0)) throw SpecError("half-ball radius must be positive");
      break;
    case DomainKind::Sector:
      if (!(std::abs(d.delta) < 1)) throw SpecError("sector aperture must satisfy |delta| < 1");
      if (!(d.r_inner >= 0) || !(d.r_outer > d.r_inner))
        throw SpecError("sector radii must satisfy 0 <= r < R");
      break;
    case DomainKind::ConeCap:
      if (d.N < 2) throw SpecError("cone cap dimension must be >= 2");
      if (d.N == 2) {
        if (!(d.cap_angle > 0) || !(d.cap_angle < 2 * std::numbers::pi))
          throw SpecError("cap arc length must lie in (0, 2*pi)");
      } else if (!(d.cap_angle > 0) || !(d.cap_angle < std::numbers::pi)) {
        throw SpecError("cap polar angle must lie in (0, pi)");
      }
      break;
    case DomainKind::ExteriorLens:
      if (!(d.obstacle_radius > 0)) throw SpecError("obstacle radius must be positive");
      if (!(d.truncation > 0)) throw SpecError("truncation radius must be positive");
      break;
    case DomainKind::Polygon: {
      if (d.vertices.size() < 3) throw SpecError("polygon needs at least 3 vertices");
      double area2 = 0.0;
      for (std::size_t i = 0; i < d.vertices.size(); ++i) {
        const Vec2 a = d.vertices[i];
        const Vec2 b = d.vertices[(i + 1) % d.vertices.size()];
        area2 += cross(a, b);
      }
      if (!(area2 > 0)) throw SpecError("polygon must be counter-clockwise with positive area");
      break;
    }
    case DomainKind::Collar:
      if (!d.base) throw SpecError("collar needs a base domain");
      validate(*d.base);
      if (!(d.width > 0)) throw SpecError("collar width must be positive");
      break;
  }
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double L2 = dot(ab, ab);
  double t = L2 > 0 ? dot(p - a, ab) / L2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

inline double polygon_boundary_distance(const std::vector<Vec2>& verts, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < verts.size(); ++i)
    best = std::min(best, point_segment_distance(p, verts[i], verts[(i + 1) % verts.size()]));
  return best;
}

inline bool polygon_contains(const std::vector<Vec2>& verts, Vec2 p) {
  bool inside = false;
  for (std::size_t i = 0, j = verts.size() - 1; i < verts.size(); j = i++) {
    const Vec2 a = verts[i], b = verts[j];
    if ((a.y > p.y) != (b.y > p.y) &&
        p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x)
      inside = !inside;
  }
  return inside;
}

inline double polygon_inradius(const std::vector<Vec2>& verts) {
  // Lower bound via centroid distance; adequate for collar-width validation.
  Vec2 c{0, 0};
  for (const Vec2& v : verts) c = c + v;
  c = (1.0 / static_cast<double>(verts.size())) * c;
  return polygon_boundary_distance(verts, c);
}

// Exact Euclidean distance to the domain boundary.
inline double distance_to_boundary(const DomainSpec& d, Vec2 p) {
  switch (d.kind) {
    case DomainKind::Interval:
      return std::min(p.x, d.length - p.x);
    case DomainKind::HalfBall: {
      if (d.N == 1) return std::min(p.x, d.radius - p.x);
      const Vec2 q = rotate(p, -d.axis_angle);  // canonical frame: {|x|<R, y>0}
      return std::min(q.y, d.radius - norm(q));
    }
    case DomainKind::Sector: {
      const Vec2 q = rotate(p, -d.axis_angle);
      const double rho = norm(q);
      const double half_open = std::numbers::pi / 2 + std::asin(d.delta);
      const double ang = std::abs(std::atan2(q.y, q.x));
      // Distance to either bounding ray, measured inside the sector.
      double ray = (half_open - ang < std::numbers::pi / 2)
                       ? rho * std::sin(half_open - ang)
                       : rho;
      double best = std::min(d.r_outer - rho, ray);
      if (d.r_inner > 0) best = std::min(best, rho - d.r_inner);
      return best;
    }
    case DomainKind::ConeCap: {
      // 1D angular interval; p.x is the polar coordinate.
      if (d.N == 2) return std::min(p.x, d.cap_angle - p.x);
      return d.cap_angle - p.x;  // pole end is natural, only theta=cap_angle is boundary
    }
    case DomainKind::ExteriorLens: {
      // |p - c| - a written as a quotient so the value stays accurate for
      // points many orders of magnitude closer to the circle than to c.
      const double a = d.obstacle_radius;
      const double num = p.x * p.x + p.y * p.y - 2 * a * p.y;
      const double to_obstacle = num / (std::hypot(p.x, p.y - a) + a);
      return std::min(to_obstacle, d.truncation - norm(p));
    }
    case DomainKind::Polygon:
      return polygon_boundary_distance(d.vertices, p);
    case DomainKind::Collar: {
      const double db = distance_to_boundary(*d.base, p);
      return std::min(db, d.width - db);
    }
  }
  throw SpecError("unhandled domain kind");
}

inline double diameter(const DomainSpec& d) {
  switch (d.kind) {
    case DomainKind::Interval:
      return d.length;
    case DomainKind::HalfBall:
      return d.N == 1 ? d.radius : 2 * d.radius;
    case DomainKind::Sector: {
      const double half_open = std::numbers::pi / 2 + std::asin(d.delta);
      const double chord = 2 * d.r_outer * std::sin(std::min(half_open, std::numbers::pi / 2));
      return std::max(chord, d.r_outer - d.r_inner);
    }
    case DomainKind::ConeCap:
      return d.cap_angle;
    case DomainKind::ExteriorLens:
      return 2 * d.truncation;
    case DomainKind::Polygon: {
      double best = 0.0;
      for (std::size_t i = 0; i < d.vertices.size(); ++i)
        for (std::size_t j = i + 1; j < d.vertices.size(); ++j)
          best = std::max(best, norm(d.vertices[i] - d.vertices[j]));
      return best;
    }
    case DomainKind::Collar:
      return diameter(*d.base);
  }
  throw SpecError("unhandled domain kind");
}

inline double domain_area(const DomainSpec& d) {
  switch (d.kind) {
    case DomainKind::HalfBall:
      if (d.N == 2) return std::numbers::pi * d.radius * d.radius / 2;
      return d.radius;
    case DomainKind::Interval:
      return d.length;
    case DomainKind::Polygon: {
      double area2 = 0.0;
      for (std::size_t i = 0; i < d.vertices.size(); ++i)
        area2 += cross(d.vertices[i], d.vertices[(i + 1) % d.vertices.size()]);
      return area2 / 2;
    }
    default:
      throw SpecError("area not available for this domain kind");
  }
}

inline int domain_dim(const DomainSpec& d) {
  switch (d.kind) {
    case DomainKind::Interval:
    case DomainKind::ConeCap:
      return 1;
    case DomainKind::HalfBall:
      return d.N == 1 ? 1 : 2;
    case DomainKind::Collar:
      return domain_dim(*d.base);
    default:
      return 2;
  }
}

enum class Weight { OriginPower, BoundaryDistance, None };

struct ProblemSpec {
  int N = 2;
  double p = 2.0;
  double lambda = 0.0;
  Weight weight = Weight::OriginPower;
  std::optional<double> reference_constant;  // stands for the half-space constant or c_p
};

inline void validate(const ProblemSpec& pr) {
  if (!(pr.p > 1)) throw ConfigError("p must exceed 1");
  if (pr.N < 1) throw ConfigError("dimension must be >= 1");
  if (pr.reference_constant && !(*pr.reference_constant > 0))
    throw ConfigError("reference constant must be positive");
}

// Origin-power weights need the singularity on the boundary (or excluded).
inline bool origin_weight_compatible(const DomainSpec& d) {
  switch (d.kind) {
    case DomainKind::Interval:
    case DomainKind::HalfBall:
    case DomainKind::Sector:
    case DomainKind::ExteriorLens:
    case DomainKind::ConeCap:
      return true;
    case DomainKind::Polygon:
      // A vertex (or edge) at the origin keeps the singular point on the
      // boundary; ray casting alone would misread that as interior.
      if (polygon_boundary_distance(d.vertices, Vec2{0, 0}) <= 1e-12 * diameter(d))
        return true;
      return !polygon_contains(d.vertices, Vec2{0, 0});
    case DomainKind::Collar:
      return origin_weight_compatible(*d.base);
  }
  return false;
}

inline double weight_eval(const ProblemSpec& pr, const DomainSpec& d, Vec2 x) {
  switch (pr.weight) {
    case Weight::None:
      return 1.0;
    case Weight::OriginPower: {
      const double r = domain_dim(d) == 1 ? x.x : norm(x);
      if (r <= 0) throw SpecError("weight evaluated at the singular point");
      return std::pow(r, -pr.p);
    }
    case Weight::BoundaryDistance: {
      const double dist = distance_to_boundary(d, x);
      if (dist <= 0) throw SpecError("weight evaluated on the boundary");
      return std::pow(dist, -pr.p);
    }
  }
  throw SpecError("unhandled weight kind");
}

}  // namespace hardylab
