#pragma once
// Minimizers for the discrete quotients: a symmetric-pencil inverse-power
// solver for p = 2 and a preconditioned normalized descent for general p > 1,
// wrapped by problem-level drivers (quotient minimization over refinement
// levels, cap problems, the radial-weight constant, attainment thresholds,
// parameter sweeps, and the sector search).
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hardylab/assembly.hh"
#include "hardylab/common.hh"
#include "hardylab/geometry.hh"
#include "hardylab/mesh.hh"

namespace hardylab {

struct SolveOptions {
  int levels = 3;
  double tol = 1e-12;        // relative stall tolerance of the descent
  int max_iter = 4000;
  std::uint64_t seed = 12345;
  double grading = -1.0;     // fixed mesh grading; < 0 selects the per-problem default
  double depth = -1.0;       // base log-depth T0 of the doubling schedule; < 0 default
  int base_n = 0;            // base resolution; 0 selects the per-domain default
  bool quiet = true;
};

struct SolveResult {
  double value = std::numeric_limits<double>::quiet_NaN();  // best estimate
  std::vector<double> level_values;
  std::vector<double> history;  // accepted quotient values on the finest level
  int iterations = 0;
  bool converged = false;
  double extrapolated = std::numeric_limits<double>::quiet_NaN();
  double order = std::numeric_limits<double>::quiet_NaN();
  double excess = 0.0;  // finest value minus extrapolated value (when available)
  std::shared_ptr<Mesh> mesh;  // finest mesh
  std::vector<double> u;       // minimizer on the finest mesh, denominator mass 1
  std::vector<double> concentration;  // weighted-mass fraction within diam*2^-k, k=1..7
  double lambda1_hat = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, double> extras;
  std::vector<std::string> notes;
};

// ---------------------------------------------------------------------------
// Pencil solver (p = 2): smallest eigenvalue of K x = mu B x on free nodes.
// ---------------------------------------------------------------------------

struct PencilResult {
  double value = 0.0;
  std::vector<double> vec;  // full-length, zero on Dirichlet, B-normalized
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline std::vector<int> free_index_map(const Mesh& m, std::vector<int>& free_nodes) {
  std::vector<int> full_to_free(m.node_count(), -1);
  free_nodes.clear();
  for (int i = 0; i < m.node_count(); ++i)
    if (!m.dirichlet[i]) {
      full_to_free[i] = static_cast<int>(free_nodes.size());
      free_nodes.push_back(i);
    }
  return full_to_free;
}

inline SparseMat restrict_free(const SparseMat& K, const std::vector<int>& full_to_free,
                               int nfree) {
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < K.outerSize(); ++k)
    for (SparseMat::InnerIterator it(K, k); it; ++it) {
      const int i = full_to_free[it.row()], j = full_to_free[it.col()];
      if (i >= 0 && j >= 0) trips.emplace_back(i, j, it.value());
    }
  SparseMat out(nfree, nfree);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace detail

inline PencilResult pencil_smallest(const SparseMat& K, const SparseMat& B, const Mesh& mesh,
                                    double tol = 1e-13, int maxit = 400) {
  std::vector<int> free_nodes;
  const std::vector<int> full_to_free = detail::free_index_map(mesh, free_nodes);
  const int nf = static_cast<int>(free_nodes.size());
  if (nf == 0) throw SpecError("pencil solve: no free nodes");
  SparseMat Kf = detail::restrict_free(K, full_to_free, nf);
  SparseMat Bf = detail::restrict_free(B, full_to_free, nf);
  Eigen::SimplicialLDLT<SparseMat> solver(Kf);
  if (solver.info() != Eigen::Success)
    throw ViolationError("pencil solve: factorization failed (shift not below spectrum?)");
  Eigen::VectorXd v = Eigen::VectorXd::Ones(nf);  // deterministic positive start
  double bn = std::sqrt(v.dot(Bf * v));
  if (!(bn > 0)) throw SpecError("pencil solve: degenerate right-hand form");
  v /= bn;
  double lam = v.dot(Kf * v);
  PencilResult res;
  for (int it = 0; it < maxit; ++it) {
    Eigen::VectorXd w = solver.solve(Bf * v);
    w /= std::sqrt(w.dot(Bf * w));
    const double lam_new = w.dot(Kf * w);
    const bool done = std::abs(lam_new - lam) < tol * std::max(1.0, std::abs(lam_new));
    lam = lam_new;
    v = w;
    res.iterations = it + 1;
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.value = lam;
  res.vec.assign(mesh.node_count(), 0.0);
  // Fix the overall sign so the reported eigenvector is deterministic.
  double mass_signed = 0.0;
  for (int i = 0; i < nf; ++i) mass_signed += v[i];
  const double sgn = mass_signed < 0 ? -1.0 : 1.0;
  for (int i = 0; i < nf; ++i) res.vec[free_nodes[i]] = sgn * v[i];
  return res;
}

// ---------------------------------------------------------------------------
// General-p quotient problem and preconditioned descent.
// ---------------------------------------------------------------------------

struct QuotientProblem {
  const Mesh* mesh = nullptr;
  double p = 2.0;
  double lambda = 0.0;  // numerator: E - lambda * plain - shift * weighted
  double shift = 0.0;
  bool den_weighted = true;
  QuadTables tab;

  QuotientProblem(const Mesh& m, double p_, const WeightFn& wsing, const WeightFn& wenergy,
                  const std::function<bool(int)>& near)
      : mesh(&m), p(p_), tab(m, wsing, wenergy, near) {}

  struct Eval {
    double energy, mass_w, mass_p, value;
  };
  Eval eval(const std::vector<double>& u) const {
    Eval ev{};
    ev.energy = tab.p_energy(u, p);
    ev.mass_w = tab.p_mass(u, p, true);
    ev.mass_p = tab.p_mass(u, p, false);
    const double den = den_weighted ? ev.mass_w : ev.mass_p;
    if (!(den > 0)) throw SpecError("degenerate field: denominator mass vanishes");
    ev.value = (ev.energy - lambda * ev.mass_p - shift * ev.mass_w) / den;
    return ev;
  }
  double denominator(const std::vector<double>& u) const {
    return tab.p_mass(u, p, den_weighted);
  }
  // Gradient of numerator - mu * denominator (zeroed on Dirichlet by caller).
  std::vector<double> gradient(const std::vector<double>& u, double mu) const {
    std::vector<double> g(mesh->node_count(), 0.0);
    tab.add_energy_grad(u, p, 1.0, g);
    if (lambda != 0.0) tab.add_mass_grad(u, p, false, -lambda, g);
    const double wshift = shift + (den_weighted ? mu : 0.0);
    if (wshift != 0.0) tab.add_mass_grad(u, p, true, -wshift, g);
    if (!den_weighted) tab.add_mass_grad(u, p, false, -mu, g);
    return g;
  }
};

struct DescentStats {
  double value = 0.0;
  std::vector<double> history;
  int iterations = 0;
  bool converged = false;
};

// Normalized descent with a linearized (Picard-style) SPD preconditioner:
// weighted p-stiffness with elementwise coefficient |grad u|^{p-2} plus a
// lumped |u|^{p-2}-weighted mass term from the linearized denominator.
inline DescentStats p_descent(const QuotientProblem& prob, std::vector<double>& u,
                              double tol = 1e-12, int max_iter = 4000) {
  const Mesh& m = *prob.mesh;
  const double p = prob.p;
  std::vector<int> free_nodes;
  const std::vector<int> full_to_free = detail::free_index_map(m, free_nodes);
  const int nf = static_cast<int>(free_nodes.size());

  auto normalize = [&](std::vector<double>& w) {
    const double den = prob.denominator(w);
    if (!(den > 0)) throw SpecError("degenerate field: denominator mass vanishes");
    const double s = std::pow(den, -1.0 / p);
    for (double& x : w) x *= s;
  };
  for (int i = 0; i < m.node_count(); ++i)
    if (m.dirichlet[i]) u[i] = 0.0;
  normalize(u);
  double mu = prob.eval(u).value;
  DescentStats st;
  st.history.push_back(mu);
  int stall = 0;
  const auto& tab = prob.tab;
  for (int it = 0; it < max_iter; ++it) {
    st.iterations = it + 1;
    std::vector<double> g = prob.gradient(u, mu);
    for (int i = 0; i < m.node_count(); ++i)
      if (m.dirichlet[i]) g[i] = 0.0;

    // Elementwise gradient magnitudes and their regularization scale.
    const int ne = m.elem_count();
    std::vector<double> gn(ne);
    std::vector<double> nz;
    nz.reserve(ne);
    for (int e = 0; e < ne; ++e) {
      gn[e] = tab.grad_on_elem(u, e);
      if (gn[e] > 0) nz.push_back(gn[e]);
    }
    double s2 = 1.0;
    if (!nz.empty()) {
      std::nth_element(nz.begin(), nz.begin() + nz.size() / 2, nz.end());
      const double med = nz[nz.size() / 2];
      s2 = med * med;
    }
    std::vector<Eigen::Triplet<double>> trips;
    for (int e = 0; e < ne; ++e) {
      const double coef = std::pow(gn[e] * gn[e] + 1e-10 * s2, (p - 2.0) / 2.0);
      const auto& el = m.elems[e];
      const auto& gb = tab.grads[e];
      const int nn = m.dim == 1 ? 2 : 3;
      for (int i = 0; i < nn; ++i)
        for (int j = 0; j < nn; ++j) {
          const double v = m.dim == 1 ? gb[i] * gb[j]
                                      : gb[2 * i] * gb[2 * j] + gb[2 * i + 1] * gb[2 * j + 1];
          trips.emplace_back(el[i], el[j], coef * v * tab.energy_weight[e]);
        }
    }
    // Lumped linearized mass terms (all SPD additions).
    std::vector<double> diag(m.node_count(), 0.0);
    auto add_lumped = [&](bool weighted, double scale) {
      if (scale <= 0) return;
      const auto& w = weighted ? tab.w_sing : tab.w_plain;
      for (int e = 0; e < ne; ++e) {
        const auto& el = m.elems[e];
        const double u0 = u[el[0]], u1 = u[el[1]], u2 = el[2] >= 0 ? u[el[2]] : 0.0;
        for (int q = tab.offset[e]; q < tab.offset[e + 1]; ++q) {
          const double uq = std::abs(tab.shape[q][0] * u0 + tab.shape[q][1] * u1 +
                                     tab.shape[q][2] * u2);
          if (uq < 1e-150) continue;
          const double mm = scale * std::pow(uq, p - 2.0) * w[q];
          diag[el[0]] += mm * tab.shape[q][0] * tab.shape[q][0];
          diag[el[1]] += mm * tab.shape[q][1] * tab.shape[q][1];
          if (el[2] >= 0) diag[el[2]] += mm * tab.shape[q][2] * tab.shape[q][2];
        }
      }
    };
    add_lumped(prob.den_weighted, std::max(std::abs(mu), 1.0) * (p - 1.0));
    if (prob.shift > 0) add_lumped(true, prob.shift * (p - 1.0));
    if (prob.lambda < 0) add_lumped(false, -prob.lambda * (p - 1.0));
    if (!prob.den_weighted) add_lumped(false, std::max(std::abs(mu), 1.0) * (p - 1.0));
    for (int i = 0; i < m.node_count(); ++i)
      if (diag[i] != 0.0) trips.emplace_back(i, i, diag[i]);

    SparseMat P(m.node_count(), m.node_count());
    P.setFromTriplets(trips.begin(), trips.end());
    SparseMat Pf = detail::restrict_free(P, full_to_free, nf);
    Eigen::SimplicialLDLT<SparseMat> fact(Pf);
    if (fact.info() != Eigen::Success) break;
    Eigen::VectorXd gf(nf);
    for (int i = 0; i < nf; ++i) gf[i] = g[free_nodes[i]];
    Eigen::VectorXd df = fact.solve(gf);
    double gd = gf.dot(df);
    if (!(gd > 0)) break;

    double t = 1.0;
    bool ok = false;
    std::vector<double> un;
    double mun = mu;
    while (t > 1e-14) {
      un = u;
      for (int i = 0; i < nf; ++i) un[free_nodes[i]] -= t * df[i];
      bool degenerate = false;
      try {
        normalize(un);
      } catch (const SpecError&) {
        degenerate = true;
      }
      if (!degenerate) {
        mun = prob.eval(un).value;
        if (mun <= mu - 1e-4 * t * gd) {
          ok = true;
          break;
        }
      }
      t /= 2;
    }
    if (!ok) break;
    u = un;
    st.history.push_back(mun);
    if (std::abs(mu - mun) <= tol * std::abs(mun)) {
      if (++stall >= 3) {
        mu = mun;
        st.converged = true;
        break;
      }
    } else {
      stall = 0;
    }
    mu = mun;
  }
  st.value = mu;
  return st;
}

// ---------------------------------------------------------------------------
// Problem-level drivers.
// ---------------------------------------------------------------------------

namespace detail {

inline WeightFn singular_weight(const ProblemSpec& pr, const DomainSpec& dom, int dim) {
  switch (pr.weight) {
    case Weight::OriginPower: {
      const double p = pr.p;
      const bool one_d = dim == 1;
      return [p, one_d](Vec2 x) {
        const double r = one_d ? x.x : norm(x);
        return std::pow(r, -p);
      };
    }
    case Weight::BoundaryDistance: {
      const double p = pr.p;
      const DomainSpec* d = &dom;
      return [p, d](Vec2 x) { return std::pow(distance_to_boundary(*d, x), -p); };
    }
    case Weight::None:
      return nullptr;
  }
  return nullptr;
}

inline std::function<double(Vec2)> singular_distance(const ProblemSpec& pr,
                                                     const DomainSpec& dom, int dim) {
  if (pr.weight == Weight::BoundaryDistance) {
    const DomainSpec* d = &dom;
    return [d](Vec2 x) { return distance_to_boundary(*d, x); };
  }
  const bool one_d = dim == 1;
  return [one_d](Vec2 x) { return one_d ? x.x : norm(x); };
}

// Weight with exponent 2 regardless of p, used for p=2 warm starts.
inline WeightFn warmstart_weight(const ProblemSpec& pr, const DomainSpec& dom, int dim) {
  ProblemSpec q = pr;
  q.p = 2.0;
  return singular_weight(q, dom, dim);
}

struct LevelSchedule {
  int base_n;
  double depth;    // <= 0: fixed grading
  double grading;  // used when depth <= 0
};

inline double grading_at(const LevelSchedule& s, int level) {
  const int n = s.base_n << level;
  if (s.depth > 0) return (s.depth * std::pow(2.0, level)) / std::log(double(n));
  return s.grading;
}

inline LevelSchedule default_schedule(const DomainSpec& dom, const ProblemSpec& pr,
                                      const SolveOptions& opt) {
  LevelSchedule s{};
  s.grading = opt.grading;
  s.depth = opt.depth;
  s.base_n = opt.base_n;
  const bool singular = pr.weight != Weight::None;
  switch (dom.kind) {
    case DomainKind::Interval:
      if (s.base_n == 0) s.base_n = 1024;
      if (singular && s.depth < 0 && s.grading < 0) s.depth = 16.0;
      break;
    case DomainKind::HalfBall:
      if (s.base_n == 0) s.base_n = 64;
      if (singular && s.depth < 0 && s.grading < 0) s.depth = 16.0;
      break;
    case DomainKind::Sector:
      if (s.base_n == 0) s.base_n = 90;
      break;
    case DomainKind::ExteriorLens:
      if (s.base_n == 0) s.base_n = 48;
      if (pr.weight == Weight::OriginPower && s.depth < 0 && s.grading < 0) s.depth = 10.0;
      if (pr.weight == Weight::BoundaryDistance && s.grading < 0) s.grading = 7.0;
      break;
    case DomainKind::Polygon:
    case DomainKind::Collar:
      if (s.base_n == 0) s.base_n = 24;
      if (singular && s.depth < 0 && s.grading < 0) s.depth = 7.0;
      break;
    case DomainKind::ConeCap:
      if (s.base_n == 0) s.base_n = 250;
      break;
  }
  if (s.grading < 0 && s.depth <= 0) s.grading = singular ? 3.0 : 1.0;
  return s;
}

inline void finalize_levels(SolveResult& r) {
  const auto& v = r.level_values;
  if (v.size() >= 3) {
    const double d1 = v[v.size() - 2] - v[v.size() - 3];
    const double d2 = v[v.size() - 1] - v[v.size() - 2];
    if (d2 != 0.0 && std::abs(d2) < std::abs(d1)) {
      r.extrapolated = aitken_limit(v).value_or(v.back());
      r.order = estimated_order(v);
      r.value = r.extrapolated;
      r.excess = v.back() - r.extrapolated;
      return;
    }
  }
  if (!v.empty()) r.value = v.back();
  r.excess = 0.0;
}

inline void concentration_profile(SolveResult& r, const QuadTables& tab, double p,
                                  const std::function<double(Vec2)>& dist, double diam) {
  r.concentration.clear();
  for (int k = 1; k <= 7; ++k)
    r.concentration.push_back(
        tab.mass_fraction_within(r.u, p, diam * std::pow(2.0, -k), dist));
  if (!r.concentration.empty() && r.concentration.back() >= 0.5)
    r.notes.push_back("non-attainment suspected: weighted mass concentrates at the singular set");
}

}  // namespace detail

// Minimize the quotient (E - lambda * plain p-mass) / weighted p-mass over a
// refinement-level loop; at each level p=2 uses the pencil solver directly and
// general p runs the descent warm-started from the level's p=2 eigenvector or
// the previous level's interpolated minimizer.
inline SolveResult minimize_quotient(const DomainSpec& dom, const ProblemSpec& pr,
                                     const SolveOptions& opt = {}) {
  validate(dom);
  validate(pr);
  if (pr.weight == Weight::OriginPower && !origin_weight_compatible(dom))
    throw ConfigError("origin-power weight requires the singular point on the boundary");
  const auto sched = detail::default_schedule(dom, pr, opt);
  SolveResult res;
  std::shared_ptr<Mesh> prev_mesh;
  std::vector<double> prev_u;
  for (int level = 0; level < opt.levels; ++level) {
    MeshOptions mo;
    mo.grading = detail::grading_at(sched, level);
    mo.base_n = sched.base_n;
    mo.two_sided = pr.weight == Weight::BoundaryDistance && dom.kind == DomainKind::ExteriorLens;
    auto mesh = std::make_shared<Mesh>(build_mesh(dom, level, mo.grading, mo));
    QuotientProblem prob(*mesh, pr.p, detail::singular_weight(pr, dom, mesh->dim), nullptr,
                         near_singular_predicate(*mesh, pr, dom));
    prob.lambda = pr.lambda;
    double value;
    std::vector<double> u;
    DescentStats ds;
    if (pr.p == 2.0) {
      SparseMat A = prob.tab.stiffness();
      SparseMat B = prob.tab.mass(true);
      SparseMat K = A;
      if (pr.lambda != 0.0) {
        SparseMat M = prob.tab.mass(false);
        K = A - pr.lambda * M;
      }
      PencilResult pe = pencil_smallest(K, B, *mesh);
      value = pe.value;
      u = pe.vec;
      ds.converged = pe.converged;
      ds.iterations = pe.iterations;
      ds.history = {value};
    } else {
      // Warm start: previous level's minimizer transferred through the grid,
      // else this level's p=2 eigenvector for the exponent-2 weight.
      std::vector<double> u0;
      if (prev_mesh && prev_mesh->grid.ids.size() && mesh->grid.ids.size()) {
        Field fc(*prev_mesh);
        fc.values = prev_u;
        u0 = interpolate_structured(fc, *mesh).values;
        for (double& x : u0) x = std::abs(x);
      }
      if (u0.empty()) {
        QuotientProblem warm(*mesh, 2.0, detail::warmstart_weight(pr, dom, mesh->dim), nullptr,
                             near_singular_predicate(*mesh, pr, dom));
        PencilResult pe = pencil_smallest(warm.tab.stiffness(), warm.tab.mass(true), *mesh);
        u0 = pe.vec;
        for (double& x : u0) x = std::abs(x);
      }
      ds = p_descent(prob, u0, opt.tol, opt.max_iter);
      value = ds.value;
      u = u0;
    }
    res.level_values.push_back(value);
    if (level + 1 == opt.levels) {
      res.history = ds.history;
      res.iterations = ds.iterations;
      res.converged = ds.converged;
      res.mesh = mesh;
      res.u = u;
      detail::concentration_profile(res, prob.tab, pr.p,
                                    detail::singular_distance(pr, dom, mesh->dim),
                                    diameter(dom));
    }
    prev_mesh = mesh;
    prev_u = u;
  }
  detail::finalize_levels(res);
  return res;
}

// ---------------------------------------------------------------------------
// Cap problem: angular ground level of the reduced one-dimensional quotient.
// ---------------------------------------------------------------------------

inline SolveResult solve_cap(double p, int N, double cap_angle, const SolveOptions& opt = {}) {
  if (!(p > 1)) throw ConfigError("p must exceed 1");
  if (N < 2) throw ConfigError("dimension must be at least 2");
  if (!(cap_angle > 0) || (N >= 3 && !(cap_angle <= M_PI)))
    throw ConfigError("cap angle out of range");
  const int base = opt.base_n > 0 ? opt.base_n : 250;
  SolveResult res;
  std::vector<double> prev;
  for (int level = 0; level < opt.levels; ++level) {
    const int n = base << level;
    // N = 2: both endpoints Dirichlet (arc of given length); N >= 3: Dirichlet
    // at the cap angle only, natural at the pole.
    auto mesh = std::make_shared<Mesh>(
        interval_mesh(cap_angle, n, 1.0, N == 2, true));
    CapTables tab(*mesh, p, N);
    DescentStats ds;
    std::vector<double> V(mesh->node_count(), 0.0);
    if (p == 2.0) {
      auto [A, B] = tab.matrices();
      PencilResult pe = pencil_smallest(A, B, *mesh);
      ds.value = pe.value;
      ds.converged = pe.converged;
      ds.iterations = pe.iterations;
      ds.history = {pe.value};
      V = pe.vec;
    } else {
      // Start profile: positive, vanishing where Dirichlet.
      for (int i = 0; i < mesh->node_count(); ++i) {
        const double th = mesh->nodes[i].x;
        V[i] = N == 2 ? std::min(th, cap_angle - th) : std::cos(th * M_PI_2 / cap_angle);
      }
      for (int i = 0; i < mesh->node_count(); ++i)
        if (mesh->dirichlet[i]) V[i] = 0.0;
      const double den0 = tab.denominator(V);
      for (double& x : V) x /= std::pow(den0, 1.0 / p);
      double mu = tab.numerator(V) / tab.denominator(V);
      ds.history.push_back(mu);
      int stall = 0;
      std::vector<int> free_nodes;
      const auto full_to_free = detail::free_index_map(*mesh, free_nodes);
      const int nf = static_cast<int>(free_nodes.size());
      for (int it = 0; it < opt.max_iter; ++it) {
        ds.iterations = it + 1;
        std::vector<double> g(mesh->node_count(), 0.0);
        tab.add_numerator_grad(V, 1.0, g);
        tab.add_denominator_grad(V, -mu, g);
        for (int i = 0; i < mesh->node_count(); ++i)
          if (mesh->dirichlet[i]) g[i] = 0.0;
        // Preconditioner: linearized numerator stiffness + lumped mass.
        std::vector<Eigen::Triplet<double>> trips;
        for (int e = 0; e < mesh->elem_count(); ++e) {
          const auto& el = mesh->elems[e];
          const double h = mesh->measure[e];
          const double gr = (V[el[1]] - V[el[0]]) / h;
          double coef = 0.0, lump0 = 0.0, lump1 = 0.0;
          for (int q = tab.offset[e]; q < tab.offset[e + 1]; ++q) {
            const double vq = tab.shape1[q][0] * V[el[0]] + tab.shape1[q][1] * V[el[1]];
            const double base_q = tab.a2 * vq * vq + gr * gr;
            if (base_q > 0) coef += std::pow(base_q, (p - 2.0) / 2.0) * tab.surf[q];
            const double avq = std::abs(vq);
            if (avq > 1e-150) {
              const double mm = std::pow(avq, p - 2.0) * tab.surf[q];
              lump0 += mm * tab.shape1[q][0] * tab.shape1[q][0];
              lump1 += mm * tab.shape1[q][1] * tab.shape1[q][1];
            }
          }
          const double c = coef / (h * h);
          trips.emplace_back(el[0], el[0], c);
          trips.emplace_back(el[1], el[1], c);
          trips.emplace_back(el[0], el[1], -c);
          trips.emplace_back(el[1], el[0], -c);
          const double sc = std::max(std::abs(mu), 1.0) * (p - 1.0);
          trips.emplace_back(el[0], el[0], sc * lump0);
          trips.emplace_back(el[1], el[1], sc * lump1);
        }
        SparseMat P(mesh->node_count(), mesh->node_count());
        P.setFromTriplets(trips.begin(), trips.end());
        SparseMat Pf = detail::restrict_free(P, full_to_free, nf);
        Eigen::SimplicialLDLT<SparseMat> fact(Pf);
        if (fact.info() != Eigen::Success) break;
        Eigen::VectorXd gf(nf);
        for (int i = 0; i < nf; ++i) gf[i] = g[free_nodes[i]];
        Eigen::VectorXd df = fact.solve(gf);
        const double gd = gf.dot(df);
        if (!(gd > 0)) break;
        double t = 1.0;
        bool ok = false;
        std::vector<double> Vn;
        double mun = mu;
        while (t > 1e-14) {
          Vn = V;
          for (int i = 0; i < nf; ++i) Vn[free_nodes[i]] -= t * df[i];
          const double den = tab.denominator(Vn);
          if (den > 0) {
            for (double& x : Vn) x /= std::pow(den, 1.0 / p);
            mun = tab.numerator(Vn) / tab.denominator(Vn);
            if (mun <= mu - 1e-4 * t * gd) {
              ok = true;
              break;
            }
          }
          t /= 2;
        }
        if (!ok) break;
        V = Vn;
        ds.history.push_back(mun);
        if (std::abs(mu - mun) <= opt.tol * std::abs(mun)) {
          if (++stall >= 3) {
            mu = mun;
            ds.converged = true;
            break;
          }
        } else {
          stall = 0;
        }
        mu = mun;
      }
      ds.value = mu;
    }
    res.level_values.push_back(ds.value);
    if (level + 1 == opt.levels) {
      res.history = ds.history;
      res.iterations = ds.iterations;
      res.converged = ds.converged;
      res.mesh = mesh;
      res.u = V;
    }
    prev = V;
  }
  detail::finalize_levels(res);
  return res;
}

// ---------------------------------------------------------------------------
// Radial-weight constant: inf of int r^{p-1} |f'|^p / int r^{p-1} |f|^p on
// (0,1), Dirichlet at r = 1 only (the natural end at r = 0 stays free).
// ---------------------------------------------------------------------------

inline SolveResult lambda_p_constant(double p, const SolveOptions& opt = {}) {
  if (!(p > 1)) throw ConfigError("p must exceed 1");
  const int base = opt.base_n > 0 ? opt.base_n : 1000;
  const double grading = opt.grading > 0 ? opt.grading : 1.0;
  SolveResult res;
  auto solve_on = [&](int n, double beta, bool both_ends, std::vector<double>* out_u,
                      DescentStats* out_ds) {
    auto mesh = std::make_shared<Mesh>(interval_mesh(1.0, n, beta, both_ends, true));
    const double pw = p - 1.0;
    WeightFn w = [pw](Vec2 x) { return std::pow(x.x, pw); };
    QuotientProblem prob(*mesh, p, w, w, nullptr);
    if (p == 2.0) {
      PencilResult pe = pencil_smallest(prob.tab.stiffness(), prob.tab.mass(true), *mesh);
      if (out_u) *out_u = pe.vec;
      if (out_ds) {
        out_ds->converged = pe.converged;
        out_ds->iterations = pe.iterations;
        out_ds->history = {pe.value};
      }
      return pe.value;
    }
    std::vector<double> u(mesh->node_count());
    for (int i = 0; i < mesh->node_count(); ++i) u[i] = 1.0 - mesh->nodes[i].x;
    if (both_ends) u[0] = 0.0;
    DescentStats ds = p_descent(prob, u, opt.tol, opt.max_iter);
    if (out_u) *out_u = u;
    if (out_ds) *out_ds = ds;
    return ds.value;
  };
  DescentStats last;
  std::vector<double> ulast;
  for (int level = 0; level < opt.levels; ++level) {
    const int n = base << level;
    const double v = solve_on(n, grading, false, level + 1 == opt.levels ? &ulast : nullptr,
                              level + 1 == opt.levels ? &last : nullptr);
    res.level_values.push_back(v);
  }
  res.history = last.history;
  res.iterations = last.iterations;
  res.converged = last.converged;
  res.u = ulast;
  detail::finalize_levels(res);
  // Diagnostics: the same quotient with both ends clamped, and the graded-mesh
  // cross-check; the boundary-condition gap shrinks only logarithmically.
  const int ndiag = base << (opt.levels > 0 ? opt.levels - 1 : 0);
  res.extras["value_both_ends"] = solve_on(ndiag, grading, true, nullptr, nullptr);
  res.extras["value_graded"] = solve_on(ndiag, 2.0, false, nullptr, nullptr);
  res.extras["boundary_condition_gap"] =
      res.extras["value_both_ends"] - res.level_values.back();
  return res;
}

// ---------------------------------------------------------------------------
// Attainment threshold, direct form: inf (E - ref * weighted) / plain, where
// ref is the singular-weight constant of the ambient model problem.
// ---------------------------------------------------------------------------

inline double halfspace_reference(double p, int dim, const SolveOptions& = {}) {
  if (dim == 1) return std::pow((p - 1.0) / p, p);
  if (p == 2.0) return 1.0;  // dim 2: (N/2)^2 with N = 2
  SolveOptions o;
  o.levels = 3;
  return solve_cap(p, 2, M_PI, o).value;
}

inline SolveResult lambda_star_direct(const DomainSpec& dom, double p,
                                      const SolveOptions& opt = {}) {
  validate(dom);
  if (!(p > 1)) throw ConfigError("p must exceed 1");
  if (dom.kind != DomainKind::Interval && dom.kind != DomainKind::HalfBall)
    throw ConfigError("direct threshold form requires a domain inside a half-ball");
  ProblemSpec pr;
  pr.p = p;
  pr.weight = Weight::OriginPower;
  SolveOptions o = opt;
  if (o.base_n == 0) o.base_n = dom.kind == DomainKind::Interval ? 1024 : 128;
  if (o.depth < 0 && o.grading < 0) o.depth = dom.kind == DomainKind::Interval ? 24.0 : 30.0;
  const auto sched = detail::default_schedule(dom, pr, o);
  const double ref = halfspace_reference(p, domain_dim(dom), opt);
  SolveResult res;
  res.extras["reference"] = ref;
  for (int level = 0; level < o.levels; ++level) {
    MeshOptions mo;
    mo.grading = detail::grading_at(sched, level);
    mo.base_n = sched.base_n;
    auto mesh = std::make_shared<Mesh>(build_mesh(dom, level, mo.grading, mo));
    QuotientProblem prob(*mesh, p, detail::singular_weight(pr, dom, mesh->dim), nullptr,
                         near_singular_predicate(*mesh, pr, dom));
    prob.shift = ref;
    prob.den_weighted = false;
    double value;
    std::vector<double> u;
    DescentStats ds;
    if (p == 2.0) {
      SparseMat A = prob.tab.stiffness();
      SparseMat W = prob.tab.mass(true);
      SparseMat M = prob.tab.mass(false);
      PencilResult pe = pencil_smallest(A - ref * W, M, *mesh);
      value = pe.value;
      u = pe.vec;
      ds.converged = pe.converged;
      ds.iterations = pe.iterations;
      ds.history = {value};
      if (level + 1 == o.levels) res.lambda1_hat = pencil_smallest(A, M, *mesh).value;
    } else {
      std::vector<double> u0(mesh->node_count(), 1.0);
      for (int i = 0; i < mesh->node_count(); ++i)
        if (mesh->dirichlet[i]) u0[i] = 0.0;
      ds = p_descent(prob, u0, o.tol, o.max_iter);
      value = ds.value;
      u = u0;
    }
    res.level_values.push_back(value);
    if (level + 1 == o.levels) {
      res.history = ds.history;
      res.iterations = ds.iterations;
      res.converged = ds.converged;
      res.mesh = mesh;
      res.u = u;
    }
  }
  detail::finalize_levels(res);
  if (!std::isnan(res.lambda1_hat) && res.level_values.back() > res.lambda1_hat)
    throw ViolationError("threshold estimate exceeds the first Dirichlet eigenvalue");
  return res;
}

// ---------------------------------------------------------------------------
// Attainment threshold by bisection on lambda -> mu_hat(lambda).
// ---------------------------------------------------------------------------

struct BisectResult {
  double threshold = 0.0;
  double lo = 0.0, hi = 0.0;
  double gap = 0.0;
  double reference = 0.0;
  double mu0 = 0.0, excess = 0.0;
  double bracket_tolerance = 0.0;
  std::vector<std::pair<double, double>> probes;  // (lambda, mu_hat)
  int iterations = 0;
};

inline BisectResult lambda_star_bisect(const DomainSpec& dom, double p, double lo, double hi,
                                       const SolveOptions& opt = {}, int steps = 18) {
  validate(dom);
  if (!(p > 1)) throw ConfigError("p must exceed 1");
  if (!(lo < hi)) throw ConfigError("bracket must satisfy lo < hi");
  ProblemSpec pr;
  pr.p = p;
  pr.weight = Weight::OriginPower;
  if (!origin_weight_compatible(dom))
    throw ConfigError("origin-power weight requires the singular point on the boundary");
  SolveOptions o = opt;
  if (o.base_n == 0 && dom.kind == DomainKind::HalfBall) o.base_n = 128;
  if (o.depth < 0 && o.grading < 0 && dom.kind == DomainKind::HalfBall) o.depth = 30.0;
  if (o.base_n == 0 && dom.kind == DomainKind::Interval) o.base_n = 1024;
  if (o.depth < 0 && o.grading < 0 && dom.kind == DomainKind::Interval) o.depth = 24.0;
  const auto sched = detail::default_schedule(dom, pr, o);
  const int level = o.levels - 1;
  MeshOptions mo;
  mo.grading = detail::grading_at(sched, level);
  mo.base_n = sched.base_n;
  auto mesh = std::make_shared<Mesh>(build_mesh(dom, level, mo.grading, mo));
  QuotientProblem prob(*mesh, p, detail::singular_weight(pr, dom, mesh->dim), nullptr,
                       near_singular_predicate(*mesh, pr, dom));
  BisectResult br;
  br.reference = halfspace_reference(p, domain_dim(dom), opt);

  SparseMat A, W, M;
  if (p == 2.0) {
    A = prob.tab.stiffness();
    W = prob.tab.mass(true);
    M = prob.tab.mass(false);
  }
  auto mu_at = [&](double lam) {
    if (p == 2.0) {
      SparseMat K = A;
      if (lam != 0.0) K = A - lam * M;
      PencilResult pe = pencil_smallest(K, W, *mesh);
      br.probes.emplace_back(lam, pe.value);
      return pe.value;
    }
    QuotientProblem q(*mesh, p, detail::singular_weight(pr, dom, mesh->dim), nullptr,
                      near_singular_predicate(*mesh, pr, dom));
    q.lambda = lam;
    std::vector<double> u0(mesh->node_count(), 1.0);
    for (int i = 0; i < mesh->node_count(); ++i)
      if (mesh->dirichlet[i]) u0[i] = 0.0;
    DescentStats ds = p_descent(q, u0, o.tol, o.max_iter);
    br.probes.emplace_back(lam, ds.value);
    return ds.value;
  };

  br.mu0 = mu_at(0.0);
  br.excess = std::max(0.0, br.mu0 - br.reference);
  br.gap = std::max(1e-4, 2.0 * br.excess);
  const double cut = br.reference - br.gap;
  const double mu_lo = mu_at(lo), mu_hi = mu_at(hi);
  if (!(mu_lo >= cut) || !(mu_hi < cut))
    throw ConfigError("bracket does not straddle the reference level minus the gap");
  double a = lo, b = hi;
  for (int it = 0; it < steps; ++it) {
    const double mid = 0.5 * (a + b);
    if (mu_at(mid) < cut)
      b = mid;
    else
      a = mid;
    br.iterations = it + 1;
  }
  br.lo = a;
  br.hi = b;
  br.threshold = 0.5 * (a + b);
  // Reported uncertainty: half the final bracket plus the gap mapped through a
  // local slope estimate of lambda -> mu_hat near the crossing.
  double slope = 0.0;
  {
    std::vector<std::pair<double, double>> ps = br.probes;
    std::sort(ps.begin(), ps.end());
    for (size_t i = 0; i + 1 < ps.size(); ++i) {
      if (ps[i].first <= br.threshold && br.threshold <= ps[i + 1].first &&
          ps[i + 1].first > ps[i].first) {
        slope = std::abs((ps[i + 1].second - ps[i].second) / (ps[i + 1].first - ps[i].first));
        break;
      }
    }
    if (slope == 0.0 && mu_lo > mu_hi) slope = (mu_lo - mu_hi) / (hi - lo);
  }
  br.bracket_tolerance = 0.5 * (b - a) + (slope > 0 ? br.gap / slope : br.gap);
  return br;
}

// ---------------------------------------------------------------------------
// Distance-weight quotient (the nu problem) is the same machinery with the
// boundary-distance weight.
// ---------------------------------------------------------------------------

inline SolveResult nu_lambda(const DomainSpec& dom, const ProblemSpec& pr,
                             const SolveOptions& opt = {}) {
  if (pr.weight != Weight::BoundaryDistance)
    throw ConfigError("distance quotient requires the boundary-distance weight");
  return minimize_quotient(dom, pr, opt);
}

// ---------------------------------------------------------------------------
// Sweeps.
// ---------------------------------------------------------------------------

struct SweepRow {
  double parameter = 0.0;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  int level = 0;
  double mass_near_singularity = 0.0;
};

struct SweepResult {
  std::string parameter_name;
  std::vector<SweepRow> rows;
  double reference = std::numeric_limits<double>::quiet_NaN();
  double bound = std::numeric_limits<double>::quiet_NaN();
  bool monotone_ok = false;
  bool bound_ok = true;
  std::vector<std::string> notes;
};

inline int sweep_thread_cap() {
  if (const char* env = std::getenv("HARDYLAB_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace detail {

template <class F>
inline void parallel_grid(int n, F&& work) {
  const int threads = std::min(sweep_thread_cap(), n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) work(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) break;
        work(i);
      }
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

// Sweep over lambda at a fixed domain and exponent.
inline SweepResult sweep_lambda(const DomainSpec& dom, double p,
                                const std::vector<double>& lambdas,
                                const SolveOptions& opt = {}) {
  SweepResult sw;
  sw.parameter_name = "lambda";
  sw.rows.resize(lambdas.size());
  sw.reference = halfspace_reference(p, domain_dim(dom), opt);
  detail::parallel_grid(static_cast<int>(lambdas.size()), [&](int i) {
    ProblemSpec pr;
    pr.p = p;
    pr.weight = Weight::OriginPower;
    pr.lambda = lambdas[i];
    SolveResult r = minimize_quotient(dom, pr, opt);
    SweepRow row;
    row.parameter = lambdas[i];
    row.value = r.level_values.back();
    row.converged = r.converged;
    row.iterations = r.iterations;
    row.level = opt.levels - 1;
    row.mass_near_singularity = r.concentration.size() >= 4 ? r.concentration[3] : 0.0;
    sw.rows[i] = row;
  });
  // Bound: reference plus twice the measured level excess at lambda = 0 (the
  // same slack the bisection gap uses); values must be non-increasing.
  double mu0 = sw.reference;
  for (const auto& row : sw.rows)
    if (row.parameter == 0.0) mu0 = row.value;
  sw.bound = sw.reference + 2.0 * std::max(1e-4, mu0 - sw.reference);
  std::vector<double> ordered;
  {
    std::vector<std::pair<double, double>> ps;
    for (const auto& row : sw.rows) ps.emplace_back(row.parameter, row.value);
    std::sort(ps.begin(), ps.end());  // ascending lambda: values non-increasing
    for (const auto& pr2 : ps) ordered.push_back(pr2.second);
  }
  sw.monotone_ok = monotone_non_increasing(ordered, 1e-12);
  for (const auto& row : sw.rows)
    if (!(row.value <= sw.bound)) sw.bound_ok = false;
  return sw;
}

// Sweep over the outer radius of the exterior-lens family.
inline SweepResult sweep_lens_radius(double p, const std::vector<double>& radii,
                                     const SolveOptions& opt = {}) {
  SweepResult sw;
  sw.parameter_name = "radius";
  sw.rows.resize(radii.size());
  sw.reference = halfspace_reference(p, 2, opt);
  detail::parallel_grid(static_cast<int>(radii.size()), [&](int i) {
    DomainSpec dom = DomainSpec::exterior_lens(1.0, radii[i]);
    ProblemSpec pr;
    pr.p = p;
    pr.weight = Weight::OriginPower;
    SolveResult r = minimize_quotient(dom, pr, opt);
    SweepRow row;
    row.parameter = radii[i];
    row.value = r.level_values.back();
    row.converged = r.converged;
    row.iterations = r.iterations;
    row.level = opt.levels - 1;
    row.mass_near_singularity = r.concentration.size() >= 4 ? r.concentration[3] : 0.0;
    sw.rows[i] = row;
  });
  std::vector<std::pair<double, double>> ps;
  for (const auto& row : sw.rows) ps.emplace_back(row.parameter, row.value);
  std::sort(ps.begin(), ps.end());
  bool strict = true;
  for (size_t i = 0; i + 1 < ps.size(); ++i)
    if (!(ps[i + 1].second < ps[i].second)) strict = false;
  sw.monotone_ok = strict;
  sw.bound = sw.reference;
  for (const auto& row : sw.rows)
    if (!(row.value > 0.0 && row.value <= sw.bound)) sw.bound_ok = false;
  return sw;
}

// ---------------------------------------------------------------------------
// Sector search: certified upper bound over the truncation grid.
// ---------------------------------------------------------------------------

struct SectorSearchResult {
  double delta = 0.0;
  std::vector<double> truncations;
  std::vector<double> values;
  double certified = std::numeric_limits<double>::quiet_NaN();
  double argmin_truncation = 0.0;
};

inline SectorSearchResult sector_search(double delta, double p, const SolveOptions& opt = {},
                                        double r_floor = 1e-12) {
  if (!(delta > -1.0 && delta < 1.0)) throw ConfigError("sector opening parameter out of range");
  SectorSearchResult sr;
  sr.delta = delta;
  for (int j = 1; j <= 6; ++j) {
    const double r = std::pow(10.0, -2.0 * j);
    if (r < r_floor * (1 - 1e-12)) break;
    sr.truncations.push_back(r);
  }
  if (sr.truncations.empty()) sr.truncations.push_back(r_floor);
  sr.values.resize(sr.truncations.size());
  detail::parallel_grid(static_cast<int>(sr.truncations.size()), [&](int i) {
    DomainSpec dom = DomainSpec::sector(delta, sr.truncations[i], 1.0);
    ProblemSpec pr;
    pr.p = p;
    pr.weight = Weight::OriginPower;
    SolveResult r = minimize_quotient(dom, pr, opt);
    sr.values[i] = r.level_values.back();
  });
  int best = 0;
  for (size_t i = 1; i < sr.values.size(); ++i)
    if (sr.values[i] < sr.values[best]) best = static_cast<int>(i);
  sr.certified = sr.values[best];
  sr.argmin_truncation = sr.truncations[best];
  return sr;
}

}  // namespace hardylab
