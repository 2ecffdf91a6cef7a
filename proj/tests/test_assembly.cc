#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "hardylab/assembly.hh"
#include "hardylab/mesh.hh"

using namespace hardylab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
constexpr double kPi = std::numbers::pi;

Mesh reference_triangle() {
  Mesh m;
  m.dim = 2;
  m.nodes = {{0, 0}, {1, 0}, {0, 1}};
  m.dirichlet.assign(3, 0);
  m.elems.push_back({0, 1, 2});
  detail::finalize_measures(m);
  return m;
}

Field coordinate_field(const Mesh& m) {
  Field u(m);
  for (int n = 0; n < m.node_count(); ++n) u.values[n] = m.nodes[n].x;
  return u;
}
}  // namespace

TEST_CASE("power helpers avoid the 0 * inf traps") {
  CHECK(safe_pow_abs(0.0, -0.5) == 0.0);
  CHECK(safe_pow_abs(-2.0, 2.0) == 4.0);
  CHECK_THAT(safe_pow_abs(-8.0, 1.0 / 3.0), WithinRel(2.0, 1e-14));
  CHECK(dpow_abs(0.0, 1.5) == 0.0);
  CHECK(dpow_abs(-3.0, 2.0) == -6.0);
  CHECK(dpow_abs(2.0, 3.0) == 12.0);
}

TEST_CASE("reference triangle integrals are exact to the rule degree") {
  const Mesh m = reference_triangle();
  const Field u = coordinate_field(m);
  CHECK_THAT(dirichlet_p_energy(u, 2.0), WithinAbs(0.5, 1e-15));
  CHECK_THAT(dirichlet_p_energy(u, 3.0), WithinAbs(0.5, 1e-15));  // |grad| = 1
  CHECK_THAT(plain_p_mass(u, 2.0), WithinAbs(1.0 / 12.0, 1e-15));
  CHECK_THAT(plain_p_mass(u, 3.0), WithinAbs(1.0 / 20.0, 1e-15));
  CHECK_THAT(plain_p_mass(u, 4.0), WithinAbs(1.0 / 30.0, 1e-14));
}

TEST_CASE("interval energies and masses against closed forms") {
  const Mesh m = interval_mesh(1.0, 32, 1.0);
  const Field u = coordinate_field(m);
  CHECK_THAT(dirichlet_p_energy(u, 2.0), WithinAbs(1.0, 1e-13));
  CHECK_THAT(plain_p_mass(u, 2.0), WithinAbs(1.0 / 3.0, 1e-13));
  CHECK_THAT(plain_p_mass(u, 3.0), WithinAbs(0.25, 1e-13));
}

TEST_CASE("origin-power weighted mass of the coordinate field is the length") {
  // x^{-p} |x|^p integrates the constant 1 for every p.
  const DomainSpec iv = DomainSpec::interval(1.0);
  for (double p : {2.0, 3.0}) {
    const Mesh m = interval_mesh(1.0, 32, 2.0);
    const Field u = coordinate_field(m);
    ProblemSpec pr;
    pr.p = p;
    CHECK_THAT(weighted_p_mass(u, pr, iv), WithinAbs(1.0, 1e-12));
    const EnergyBreakdown b = quotient_value(u, pr, iv);
    CHECK_THAT(b.quotient, WithinAbs(b.dirichlet_energy, 1e-12));
  }
}

TEST_CASE("custom energy weight is integrated per element") {
  const Mesh m = interval_mesh(1.0, 16, 1.0);
  QuadTables t(m, nullptr, [](Vec2 x) { return x.x; }, nullptr);
  const Field u = coordinate_field(m);
  // |u'| = 1 everywhere, so the p-energy reduces to the weight integral.
  CHECK_THAT(t.p_energy(u.values, 2.0), WithinAbs(0.5, 1e-13));
  CHECK_THAT(t.p_energy(u.values, 3.0), WithinAbs(0.5, 1e-13));
}

TEST_CASE("sparse forms agree with the nonlinear evaluations at p = 2") {
  const DomainSpec hd = DomainSpec::half_ball(2, 1.0);
  MeshOptions mo;
  mo.base_n = 12;
  const Mesh m = build_mesh(hd, 0, 2.0, mo);
  ProblemSpec pr;
  QuadTables t = make_tables(m, pr, hd);
  Rng rng(3);
  Field u(m);
  for (int n = 0; n < m.node_count(); ++n) u.values[n] = rng.uniform(-1.0, 1.0);
  u.zero_dirichlet();
  const Eigen::VectorXd v =
      Eigen::Map<const Eigen::VectorXd>(u.values.data(), m.node_count());
  const Eigen::VectorXd Kv = t.stiffness() * v;
  const Eigen::VectorXd Mv = t.mass(true) * v;
  const Eigen::VectorXd Pv = t.mass(false) * v;
  CHECK_THAT(v.dot(Kv), WithinRel(t.p_energy(u.values, 2.0), 1e-11));
  CHECK_THAT(v.dot(Mv), WithinRel(t.p_mass(u.values, 2.0, true), 1e-11));
  CHECK_THAT(v.dot(Pv), WithinRel(t.p_mass(u.values, 2.0, false), 1e-11));
  CHECK(v.dot(Kv) >= 0.0);
}

TEST_CASE("uniform 1d stiffness matrix has the classic hat-function stencil") {
  const Mesh m = interval_mesh(1.0, 8, 1.0);
  ProblemSpec pr;
  pr.weight = Weight::None;
  QuadTables t = make_tables(m, pr, DomainSpec::interval(1.0));
  const SparseMat K = t.stiffness();
  const double h = 1.0 / 8.0;
  for (int i = 1; i < 8; ++i) {
    CHECK_THAT(K.coeff(i, i), WithinRel(2.0 / h, 1e-13));
    CHECK_THAT(K.coeff(i, i - 1), WithinRel(-1.0 / h, 1e-13));
  }
}

TEST_CASE("quotient gradient matches finite differences of the quotient") {
  const DomainSpec iv = DomainSpec::interval(1.0);
  const Mesh m = interval_mesh(1.0, 16, 2.0);
  for (double p : {2.0, 3.0}) {
    ProblemSpec pr;
    pr.p = p;
    pr.lambda = 0.3;
    Field u(m);
    for (int n = 0; n < m.node_count(); ++n) {
      const double x = m.nodes[n].x;
      u.values[n] = x * (1.0 - x) * (1.0 + 0.2 * std::sin(5 * x));
    }
    u.zero_dirichlet();
    Rng rng(11);
    Field dir(m);
    for (int n = 0; n < m.node_count(); ++n) dir.values[n] = rng.uniform(-1.0, 1.0);
    dir.zero_dirichlet();

    const Field g = quotient_gradient(u, pr, iv);
    double gdotv = 0.0;
    for (int n = 0; n < m.node_count(); ++n) gdotv += g.values[n] * dir.values[n];
    const double denom = weighted_p_mass(u, pr, iv);

    const double eps = 1e-6;
    Field up(m), um(m);
    for (int n = 0; n < m.node_count(); ++n) {
      up.values[n] = u.values[n] + eps * dir.values[n];
      um.values[n] = u.values[n] - eps * dir.values[n];
    }
    const double fd = (quotient_value(up, pr, iv).quotient -
                       quotient_value(um, pr, iv).quotient) /
                      (2 * eps);
    INFO("p=" << p);
    CHECK_THAT(gdotv / denom, WithinRel(fd, 1e-5));
  }
}

TEST_CASE("the quotient is scale invariant") {
  const DomainSpec iv = DomainSpec::interval(1.0);
  const Mesh m = interval_mesh(1.0, 16, 2.0);
  ProblemSpec pr;
  pr.p = 3.0;
  Field u(m);
  for (int n = 0; n < m.node_count(); ++n) {
    const double x = m.nodes[n].x;
    u.values[n] = x * (1.0 - x);
  }
  Field scaled(m, u.values);
  for (double& v : scaled.values) v *= 17.0;
  CHECK_THAT(quotient_value(scaled, pr, iv).quotient,
             WithinRel(quotient_value(u, pr, iv).quotient, 1e-12));
}

TEST_CASE("degenerate fields are rejected") {
  const DomainSpec iv = DomainSpec::interval(1.0);
  const Mesh m = interval_mesh(1.0, 8, 1.0);
  Field zero(m);
  ProblemSpec pr;
  CHECK_THROWS_WITH(quotient_value(zero, pr, iv), "degenerate field: weighted mass vanishes");
  CHECK_THROWS_WITH(quotient_gradient(zero, pr, iv),
                    "degenerate field: weighted mass vanishes");
}

TEST_CASE("singular elements receive subdivided quadrature") {
  const DomainSpec iv = DomainSpec::interval(1.0);
  const Mesh m = interval_mesh(1.0, 8, 1.0);
  ProblemSpec pr;
  QuadTables t = make_tables(m, pr, iv);
  // Element 0 touches the origin node and must carry more points.
  CHECK(t.offset[1] - t.offset[0] > t.offset[2] - t.offset[1]);

  ProblemSpec nd;
  nd.weight = Weight::BoundaryDistance;
  QuadTables tb = make_tables(m, nd, iv);
  const int ne = m.elem_count();
  CHECK(tb.offset[1] - tb.offset[0] > tb.offset[2] - tb.offset[1]);
  CHECK(tb.offset[ne] - tb.offset[ne - 1] > tb.offset[ne - 1] - tb.offset[ne - 2]);
  CHECK(static_cast<int>(tb.shape.size()) == tb.offset[ne]);
  CHECK(tb.w_sing.size() == tb.shape.size());
  CHECK(tb.w_plain.size() == tb.shape.size());
  CHECK(tb.position.size() == tb.shape.size());
}

TEST_CASE("mass fraction within a radius tracks the uniform weighted density") {
  const DomainSpec iv = DomainSpec::interval(1.0);
  const Mesh m = interval_mesh(1.0, 64, 1.0);
  const Field u = coordinate_field(m);
  ProblemSpec pr;
  QuadTables t = make_tables(m, pr, iv);
  // Weighted density of u = x under x^{-2} is uniform: fraction ~= rho.
  CHECK_THAT(t.mass_fraction_within(u.values, 2.0, 0.5, nullptr), WithinAbs(0.5, 0.02));
  CHECK_THAT(t.mass_fraction_within(u.values, 2.0, 0.25, nullptr), WithinAbs(0.25, 0.02));
  CHECK(t.mass_fraction_within(u.values, 2.0, 1.1, nullptr) == 1.0);
}

TEST_CASE("cap quotient reproduces the closed-form angular eigenvalues") {
  // N = 2, arc pi: V = sin(theta) gives exactly 1.
  {
    const Mesh m = build_mesh(DomainSpec::cone_cap(2, kPi), 0, 1.0);
    Field v(m);
    for (int n = 0; n < m.node_count(); ++n) v.values[n] = std::sin(m.nodes[n].x);
    const EnergyBreakdown b = cap_quotient(v, 2.0, 2);
    CHECK(b.quotient >= 1.0 - 1e-9);
    CHECK(b.quotient <= 1.0 + 1e-3);
  }
  // N = 3, polar angle pi/2: V = cos(theta) gives exactly 9/4.
  {
    const Mesh m = build_mesh(DomainSpec::cone_cap(3, kPi / 2), 0, 1.0);
    Field v(m);
    for (int n = 0; n < m.node_count(); ++n) v.values[n] = std::cos(m.nodes[n].x);
    const EnergyBreakdown b = cap_quotient(v, 2.0, 3);
    CHECK(b.quotient >= 2.25 - 1e-6);
    CHECK(b.quotient <= 2.25 + 1e-3);
  }
}

TEST_CASE("degenerate cap fields are rejected") {
  const Mesh m = build_mesh(DomainSpec::cone_cap(2, kPi), 0, 1.0);
  Field zero(m);
  CHECK_THROWS_WITH(cap_quotient(zero, 2.0, 2), "degenerate field: cap mass vanishes");
}
