#pragma once
// Discrete functionals over P1 fields: p-Dirichlet energy (optionally with a
// radial energy weight), singular weighted p-mass, plain p-mass, nodal
// gradients, p=2 sparse forms, and the reduced cap quotient. Quadrature data
// is precomputed per (mesh, weights) into flat arrays; assembly loops are
// sequential reductions in element order, so results are bit-reproducible.
#include <Eigen/Sparse>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "hardylab/geometry.hh"
#include "hardylab/mesh.hh"
#include "hardylab/quadrature.hh"

namespace hardylab {

struct EnergyBreakdown {
  double dirichlet_energy = 0.0;
  double weighted_mass = 0.0;
  double plain_mass = 0.0;
  double quotient = 0.0;
};

using WeightFn = std::function<double(Vec2)>;
using SparseMat = Eigen::SparseMatrix<double>;

inline double safe_pow_abs(double x, double e) {
  const double a = std::abs(x);
  return a > 0 ? std::pow(a, e) : 0.0;
}
// d|x|^p/dx = p |x|^{p-1} sign(x), written to avoid 0 * inf for p < 2.
inline double dpow_abs(double x, double p) {
  return x > 0 ? p * std::pow(x, p - 1) : (x < 0 ? -p * std::pow(-x, p - 1) : 0.0);
}

// Precomputed quadrature tables for one mesh + weight combination.
class QuadTables {
 public:
  const Mesh* mesh = nullptr;
  // Per element: P1 gradient geometry and the energy-weight integral
  // (= measure when the energy weight is 1).
  std::vector<std::array<double, 6>> grads;  // 2D: d(phi_k)/dx, d(phi_k)/dy; 1D: slots 0,1 = +-1/h
  std::vector<double> energy_weight;
  // Flattened quadrature points: shape values, weighted measures, positions.
  std::vector<int> offset;  // per element, into the arrays below; size elems+1
  std::vector<std::array<double, 3>> shape;
  std::vector<double> w_sing;   // singular weight * quad weight * measure
  std::vector<double> w_plain;  // quad weight * measure
  std::vector<Vec2> position;

  QuadTables() = default;
  QuadTables(const Mesh& m, const WeightFn& weight_sing, const WeightFn& weight_energy,
             const std::function<bool(int)>& near_singular) {
    mesh = &m;
    const int ne = m.elem_count();
    grads.resize(ne);
    energy_weight.resize(ne);
    offset.assign(ne + 1, 0);
    for (int e = 0; e < ne; ++e) {
      const auto& el = m.elems[e];
      const bool sub = near_singular && near_singular(e);
      if (m.dim == 1) {
        const double h = m.measure[e];
        grads[e] = {-1.0 / h, 1.0 / h, 0, 0, 0, 0};
        const double x0 = m.nodes[el[0]].x;
        double ew = 0.0;
        segment_quadrature(0.0, 1.0, sub, [&](double s, double qw) {
          const Vec2 x{x0 + s * h, 0.0};
          shape.push_back({1.0 - s, s, 0.0});
          const double wm = qw * h;
          w_plain.push_back(wm);
          w_sing.push_back(weight_sing ? weight_sing(x) * wm : wm);
          position.push_back(x);
          ew += (weight_energy ? weight_energy(x) : 1.0) * wm;
        });
        energy_weight[e] = ew;
      } else {
        const Vec2 a = m.nodes[el[0]], b = m.nodes[el[1]], c = m.nodes[el[2]];
        const double A2 = 2.0 * m.measure[e];
        grads[e] = {(b.y - c.y) / A2, (c.x - b.x) / A2, (c.y - a.y) / A2,
                    (a.x - c.x) / A2, (a.y - b.y) / A2, (b.x - a.x) / A2};
        double ew = 0.0;
        triangle_quadrature(sub, [&](double l1, double l2, double l3, double qw) {
          const Vec2 x = l1 * a + l2 * b + l3 * c;
          shape.push_back({l1, l2, l3});
          const double wm = qw * m.measure[e];
          w_plain.push_back(wm);
          w_sing.push_back(weight_sing ? weight_sing(x) * wm : wm);
          position.push_back(x);
          ew += (weight_energy ? weight_energy(x) : 1.0) * wm;
        });
        energy_weight[e] = ew;
      }
      offset[e + 1] = static_cast<int>(shape.size());
    }
  }

  // Elementwise-constant gradient magnitude of u on element e (and components).
  double grad_on_elem(const std::vector<double>& u, int e, double* gx = nullptr,
                      double* gy = nullptr) const {
    const auto& el = mesh->elems[e];
    const auto& g = grads[e];
    if (mesh->dim == 1) {
      const double d = g[0] * u[el[0]] + g[1] * u[el[1]];
      if (gx) *gx = d;
      if (gy) *gy = 0.0;
      return std::abs(d);
    }
    const double dx = g[0] * u[el[0]] + g[2] * u[el[1]] + g[4] * u[el[2]];
    const double dy = g[1] * u[el[0]] + g[3] * u[el[1]] + g[5] * u[el[2]];
    if (gx) *gx = dx;
    if (gy) *gy = dy;
    return std::hypot(dx, dy);
  }

  double p_energy(const std::vector<double>& u, double p) const {
    double acc = 0.0;
    for (int e = 0; e < mesh->elem_count(); ++e)
      acc += safe_pow_abs(grad_on_elem(u, e), p) * energy_weight[e];
    return acc;
  }

  double p_mass(const std::vector<double>& u, double p, bool singular_weight) const {
    const auto& w = singular_weight ? w_sing : w_plain;
    double acc = 0.0;
    for (int e = 0; e < mesh->elem_count(); ++e) {
      const auto& el = mesh->elems[e];
      const double u0 = u[el[0]], u1 = u[el[1]], u2 = el[2] >= 0 ? u[el[2]] : 0.0;
      for (int q = offset[e]; q < offset[e + 1]; ++q) {
        const double uq = shape[q][0] * u0 + shape[q][1] * u1 + shape[q][2] * u2;
        acc += safe_pow_abs(uq, p) * w[q];
      }
    }
    return acc;
  }

  // out += coeff * d/du [ p-energy ]
  void add_energy_grad(const std::vector<double>& u, double p, double coeff,
                       std::vector<double>& out) const {
    for (int e = 0; e < mesh->elem_count(); ++e) {
      const auto& el = mesh->elems[e];
      double gx, gy;
      const double gn = grad_on_elem(u, e, &gx, &gy);
      if (gn <= 0) continue;
      const double f = coeff * p * std::pow(gn, p - 2) * energy_weight[e];
      const auto& g = grads[e];
      if (mesh->dim == 1) {
        out[el[0]] += f * gx * g[0];
        out[el[1]] += f * gx * g[1];
      } else {
        for (int k = 0; k < 3; ++k) out[el[k]] += f * (gx * g[2 * k] + gy * g[2 * k + 1]);
      }
    }
  }

  // out += coeff * d/du [ p-mass ]
  void add_mass_grad(const std::vector<double>& u, double p, bool singular_weight, double coeff,
                     std::vector<double>& out) const {
    const auto& w = singular_weight ? w_sing : w_plain;
    for (int e = 0; e < mesh->elem_count(); ++e) {
      const auto& el = mesh->elems[e];
      const double u0 = u[el[0]], u1 = u[el[1]], u2 = el[2] >= 0 ? u[el[2]] : 0.0;
      for (int q = offset[e]; q < offset[e + 1]; ++q) {
        const double uq = shape[q][0] * u0 + shape[q][1] * u1 + shape[q][2] * u2;
        const double f = coeff * dpow_abs(uq, p) * w[q];
        if (f == 0.0) continue;
        out[el[0]] += f * shape[q][0];
        out[el[1]] += f * shape[q][1];
        if (el[2] >= 0) out[el[2]] += f * shape[q][2];
      }
    }
  }

  // Fraction of the singular-weighted p-mass within |x| <= rho of the origin
  // (or within d <= rho of the boundary when dist is supplied).
  double mass_fraction_within(const std::vector<double>& u, double p, double rho,
                              const std::function<double(Vec2)>& dist) const {
    double total = 0.0, near = 0.0;
    for (int e = 0; e < mesh->elem_count(); ++e) {
      const auto& el = mesh->elems[e];
      const double u0 = u[el[0]], u1 = u[el[1]], u2 = el[2] >= 0 ? u[el[2]] : 0.0;
      for (int q = offset[e]; q < offset[e + 1]; ++q) {
        const double uq = shape[q][0] * u0 + shape[q][1] * u1 + shape[q][2] * u2;
        const double v = safe_pow_abs(uq, p) * w_sing[q];
        total += v;
        const Vec2 x = position[q];
        const double r = dist ? dist(x) : (mesh->dim == 1 ? x.x : norm(x));
        if (r <= rho) near += v;
      }
    }
    return total > 0 ? near / total : 0.0;
  }

  // p=2 sparse forms.
  SparseMat stiffness() const {
    std::vector<Eigen::Triplet<double>> trips;
    for (int e = 0; e < mesh->elem_count(); ++e) {
      const auto& el = mesh->elems[e];
      const auto& g = grads[e];
      const int nn = mesh->dim == 1 ? 2 : 3;
      for (int i = 0; i < nn; ++i)
        for (int j = 0; j < nn; ++j) {
          const double v = mesh->dim == 1
                               ? g[i] * g[j] * energy_weight[e]
                               : (g[2 * i] * g[2 * j] + g[2 * i + 1] * g[2 * j + 1]) *
                                     energy_weight[e];
          trips.emplace_back(el[i], el[j], v);
        }
    }
    SparseMat K(mesh->node_count(), mesh->node_count());
    K.setFromTriplets(trips.begin(), trips.end());
    return K;
  }

  SparseMat mass(bool singular_weight) const {
    const auto& w = singular_weight ? w_sing : w_plain;
    std::vector<Eigen::Triplet<double>> trips;
    for (int e = 0; e < mesh->elem_count(); ++e) {
      const auto& el = mesh->elems[e];
      const int nn = mesh->dim == 1 ? 2 : 3;
      for (int q = offset[e]; q < offset[e + 1]; ++q)
        for (int i = 0; i < nn; ++i)
          for (int j = 0; j < nn; ++j)
            trips.emplace_back(el[i], el[j], shape[q][i] * shape[q][j] * w[q]);
    }
    SparseMat M(mesh->node_count(), mesh->node_count());
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
  }
};

// Subdivision predicate: elements touching the singular set of the weight.
inline std::function<bool(int)> near_singular_predicate(const Mesh& m, const ProblemSpec& pr,
                                                        const DomainSpec& dom) {
  if (pr.weight == Weight::OriginPower && m.origin_node >= 0) {
    const int origin = m.origin_node;
    return [&m, origin](int e) {
      const auto& el = m.elems[e];
      return el[0] == origin || el[1] == origin || el[2] == origin;
    };
  }
  if (pr.weight == Weight::BoundaryDistance) {
    const double tol = 1e-12 * diameter(dom);
    return [&m, &dom, tol](int e) {
      const auto& el = m.elems[e];
      for (int k = 0; k < (m.dim == 1 ? 2 : 3); ++k)
        if (distance_to_boundary(dom, m.nodes[el[k]]) < tol) return true;
      return false;
    };
  }
  return nullptr;
}

inline QuadTables make_tables(const Mesh& m, const ProblemSpec& pr, const DomainSpec& dom) {
  WeightFn ws;
  switch (pr.weight) {
    case Weight::OriginPower: {
      const double p = pr.p;
      const bool one_d = m.dim == 1;
      ws = [p, one_d](Vec2 x) { return std::pow(one_d ? x.x : norm(x), -p); };
      break;
    }
    case Weight::BoundaryDistance: {
      const double p = pr.p;
      const DomainSpec* d = &dom;
      ws = [p, d](Vec2 x) { return std::pow(distance_to_boundary(*d, x), -p); };
      break;
    }
    case Weight::None:
      ws = nullptr;
      break;
  }
  return QuadTables(m, ws, nullptr, near_singular_predicate(m, pr, dom));
}

// ---------------------------------------------------------------------------
// Public operation surface used by the spec-level API.
// ---------------------------------------------------------------------------

inline double dirichlet_p_energy(const Field& u, double p) {
  QuadTables t(*u.mesh, nullptr, nullptr, nullptr);
  return t.p_energy(u.values, p);
}

inline double weighted_p_mass(const Field& u, const ProblemSpec& pr, const DomainSpec& dom,
                              const QuadratureRule& = {}) {
  QuadTables t = make_tables(*u.mesh, pr, dom);
  return t.p_mass(u.values, pr.p, pr.weight != Weight::None);
}

inline double plain_p_mass(const Field& u, double p) {
  QuadTables t(*u.mesh, nullptr, nullptr, nullptr);
  return t.p_mass(u.values, p, false);
}

inline EnergyBreakdown quotient_value(const Field& u, const ProblemSpec& pr,
                                      const DomainSpec& dom) {
  QuadTables t = make_tables(*u.mesh, pr, dom);
  EnergyBreakdown b;
  b.dirichlet_energy = t.p_energy(u.values, pr.p);
  b.plain_mass = t.p_mass(u.values, pr.p, false);
  b.weighted_mass = t.p_mass(u.values, pr.p, pr.weight != Weight::None);
  if (!(b.weighted_mass > 0)) throw SpecError("degenerate field: weighted mass vanishes");
  b.quotient = (b.dirichlet_energy - pr.lambda * b.plain_mass) / b.weighted_mass;
  return b;
}

// Nodal gradient of u -> F(u) - mu * G(u) at mu = current quotient.
inline Field quotient_gradient(const Field& u, const ProblemSpec& pr, const DomainSpec& dom) {
  QuadTables t = make_tables(*u.mesh, pr, dom);
  const EnergyBreakdown b = [&] {
    EnergyBreakdown eb;
    eb.dirichlet_energy = t.p_energy(u.values, pr.p);
    eb.plain_mass = t.p_mass(u.values, pr.p, false);
    eb.weighted_mass = t.p_mass(u.values, pr.p, pr.weight != Weight::None);
    if (!(eb.weighted_mass > 0)) throw SpecError("degenerate field: weighted mass vanishes");
    eb.quotient = (eb.dirichlet_energy - pr.lambda * eb.plain_mass) / eb.weighted_mass;
    return eb;
  }();
  Field g(*u.mesh);
  t.add_energy_grad(u.values, pr.p, 1.0, g.values);
  t.add_mass_grad(u.values, pr.p, false, -pr.lambda, g.values);
  t.add_mass_grad(u.values, pr.p, pr.weight != Weight::None, -b.quotient, g.values);
  g.zero_dirichlet();
  return g;
}

// ---------------------------------------------------------------------------
// Cap quotient: numerator integrand (((N-p)/p)^2 V^2 + V_theta^2)^{p/2} with
// surface weight sin^{N-2}(theta) (N >= 3) or 1 (N = 2), on a 1D angular mesh.
// ---------------------------------------------------------------------------

struct CapTables {
  const Mesh* mesh;
  double p, a2;
  std::vector<double> surf;  // per quad point: sin^{N-2}(theta) * qw * h
  std::vector<std::array<double, 2>> shape1;
  std::vector<int> offset;

  CapTables(const Mesh& m, double p_, int N) : mesh(&m), p(p_) {
    const double a = (N - p) / p;
    a2 = a * a;
    offset.assign(m.elem_count() + 1, 0);
    for (int e = 0; e < m.elem_count(); ++e) {
      const auto& el = m.elems[e];
      const double x0 = m.nodes[el[0]].x, h = m.measure[e];
      segment_quadrature(0.0, 1.0, false, [&](double s, double qw) {
        const double th = x0 + s * h;
        shape1.push_back({1.0 - s, s});
        surf.push_back((N >= 3 ? std::pow(std::sin(th), N - 2) : 1.0) * qw * h);
      });
      offset[e + 1] = static_cast<int>(shape1.size());
    }
  }

  double numerator(const std::vector<double>& V) const {
    double acc = 0.0;
    for (int e = 0; e < mesh->elem_count(); ++e) {
      const auto& el = mesh->elems[e];
      const double h = mesh->measure[e];
      const double g = (V[el[1]] - V[el[0]]) / h;
      for (int q = offset[e]; q < offset[e + 1]; ++q) {
        const double vq = shape1[q][0] * V[el[0]] + shape1[q][1] * V[el[1]];
        acc += std::pow(a2 * vq * vq + g * g, p / 2) * surf[q];
      }
    }
    return acc;
  }

  double denominator(const std::vector<double>& V) const {
    double acc = 0.0;
    for (int e = 0; e < mesh->elem_count(); ++e) {
      const auto& el = mesh->elems[e];
      for (int q = offset[e]; q < offset[e + 1]; ++q) {
        const double vq = shape1[q][0] * V[el[0]] + shape1[q][1] * V[el[1]];
        acc += safe_pow_abs(vq, p) * surf[q];
      }
    }
    return acc;
  }

  void add_numerator_grad(const std::vector<double>& V, double coeff,
                          std::vector<double>& out) const {
    for (int e = 0; e < mesh->elem_count(); ++e) {
      const auto& el = mesh->elems[e];
      const double h = mesh->measure[e];
      const double g = (V[el[1]] - V[el[0]]) / h;
      for (int q = offset[e]; q < offset[e + 1]; ++q) {
        const double vq = shape1[q][0] * V[el[0]] + shape1[q][1] * V[el[1]];
        const double base = a2 * vq * vq + g * g;
        if (base <= 0) continue;
        const double f = coeff * p * std::pow(base, p / 2 - 1) * surf[q];
        out[el[0]] += f * (a2 * vq * shape1[q][0] - g / h);
        out[el[1]] += f * (a2 * vq * shape1[q][1] + g / h);
      }
    }
  }

  void add_denominator_grad(const std::vector<double>& V, double coeff,
                            std::vector<double>& out) const {
    for (int e = 0; e < mesh->elem_count(); ++e) {
      const auto& el = mesh->elems[e];
      for (int q = offset[e]; q < offset[e + 1]; ++q) {
        const double vq = shape1[q][0] * V[el[0]] + shape1[q][1] * V[el[1]];
        const double f = coeff * dpow_abs(vq, p) * surf[q];
        out[el[0]] += f * shape1[q][0];
        out[el[1]] += f * shape1[q][1];
      }
    }
  }

  // p=2 matrices: A = int (V' W' + a^2 V W) surf, B = int V W surf.
  std::pair<SparseMat, SparseMat> matrices() const {
    std::vector<Eigen::Triplet<double>> ta, tb;
    for (int e = 0; e < mesh->elem_count(); ++e) {
      const auto& el = mesh->elems[e];
      const double h = mesh->measure[e];
      double se = 0.0;
      for (int q = offset[e]; q < offset[e + 1]; ++q) se += surf[q];
      const double dgg = se / (h * h);
      for (int q = offset[e]; q < offset[e + 1]; ++q)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            const double mij = shape1[q][i] * shape1[q][j] * surf[q];
            ta.emplace_back(el[i], el[j], a2 * mij);
            tb.emplace_back(el[i], el[j], mij);
          }
      ta.emplace_back(el[0], el[0], dgg);
      ta.emplace_back(el[1], el[1], dgg);
      ta.emplace_back(el[0], el[1], -dgg);
      ta.emplace_back(el[1], el[0], -dgg);
    }
    const int n = mesh->node_count();
    SparseMat A(n, n), B(n, n);
    A.setFromTriplets(ta.begin(), ta.end());
    B.setFromTriplets(tb.begin(), tb.end());
    return {A, B};
  }
};

inline EnergyBreakdown cap_quotient(const Field& V, double p, int N) {
  CapTables t(*V.mesh, p, N);
  EnergyBreakdown b;
  b.dirichlet_energy = t.numerator(V.values);
  b.weighted_mass = t.denominator(V.values);
  b.plain_mass = b.weighted_mass;
  if (!(b.weighted_mass > 0)) throw SpecError("degenerate field: cap mass vanishes");
  b.quotient = b.dirichlet_energy / b.weighted_mass;
  return b;
}

}  // namespace hardylab
