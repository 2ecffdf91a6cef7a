#pragma once
// Machine checks of the pointwise vector inequalities, the substitution
// remainder identities, the weighted eigenfield residual, and the derived
// one-dimensional bounds. Every check returns a MarginReport: the minimum
// margin over all samples together with the sample attaining it.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hardylab/common.hh"
#include "hardylab/geometry.hh"
#include "hardylab/mesh.hh"
#include "hardylab/quadrature.hh"
#include "hardylab/solvers.hh"

namespace hardylab {

struct MarginReport {
  std::string check;
  std::map<std::string, double> parameters;
  long samples = 0;
  double min_margin = 0.0;
  double scale = 1.0;  // normalization of the worst sample's terms
  std::vector<double> argmin_sample;
  std::uint64_t seed = 0;
  bool pass = false;
  std::vector<std::string> notes;
};

// ---------------------------------------------------------------------------
// Pointwise vector inequality
//   |a+b|^p >= |a|^p + p|a|^{p-2} a.b + |b|^p / (2^{p-1} - 1)          (p >= 2)
//   |a+b|^p >= |a|^p + p|a|^{p-2} a.b + c |b|^2 / (|a|+|b|)^{2-p}   (1 < p < 2)
// where the p < 2 constant c must be supplied (see calibrate_c_small_p).
// ---------------------------------------------------------------------------

inline double lindqvist_margin(Vec2 a, Vec2 b, double p, double c_small = -1.0,
                               double* scale_out = nullptr) {
  if (!(p > 1)) throw ConfigError("p must exceed 1");
  const double na = norm(a), nb = norm(b), nab = norm(a + b);
  const double lhs = std::pow(nab, p);
  const double cross_term = na > 0 ? p * std::pow(na, p - 2.0) * dot(a, b) : 0.0;
  double last;
  if (p >= 2.0) {
    last = std::pow(nb, p) / (std::pow(2.0, p - 1.0) - 1.0);
  } else {
    if (!(c_small > 0)) throw ConfigError("the p < 2 form needs a calibrated constant");
    if (na + nb == 0.0) throw ConfigError("the p < 2 form needs (a, b) != (0, 0)");
    last = c_small * nb * nb * std::pow(na + nb, p - 2.0);
  }
  const double rhs = std::pow(na, p) + cross_term + last;
  // Condition against the individual terms: near a = -b both sides cancel to
  // zero while the rounding error stays proportional to the terms.
  if (scale_out)
    *scale_out =
        std::max({lhs, std::pow(na, p), std::abs(cross_term), std::abs(last), 1e-300});
  return lhs - rhs;
}

inline MarginReport lindqvist_check(long samples = 1000000, std::uint64_t seed = 7,
                                    double p_min = 2.0, double p_max = 6.0,
                                    double amplitude = 10.0) {
  Rng rng(seed);
  MarginReport rep;
  rep.check = "vector_power_p_ge_2";
  rep.parameters = {{"p_min", p_min}, {"p_max", p_max}, {"amplitude", amplitude}};
  rep.samples = samples;
  rep.seed = seed;
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (long s = 0; s < samples; ++s) {
    const Vec2 a{amplitude * (2 * rng.uniform01() - 1), amplitude * (2 * rng.uniform01() - 1)};
    const Vec2 b{amplitude * (2 * rng.uniform01() - 1), amplitude * (2 * rng.uniform01() - 1)};
    const double p = p_min + (p_max - p_min) * rng.uniform01();
    double scale;
    const double m = lindqvist_margin(a, b, p, -1.0, &scale);
    if (m / scale < rep.min_margin) {
      rep.min_margin = m / scale;
      rep.scale = scale;
      rep.argmin_sample = {a.x, a.y, b.x, b.y, p};
    }
  }
  rep.pass = rep.min_margin >= -1e-12;
  return rep;
}

// ---------------------------------------------------------------------------
// Small-p calibration: the best constant c(p) in the p < 2 form above, reduced
// by homogeneity and rotation to |a| = 1, b = t (cos phi, sin phi):
//   c(p) = inf over t > 0, phi of (|a+b|^p - 1 - p t cos phi) (1+t)^{2-p} / t^2.
// The finite-t expression cancels catastrophically below t ~ 1e-3 (in double
// precision it dips percent-level below the true infimum there), so the grid
// is restricted to the stable range and the exact t -> 0 edge value
//   (p/2)(1 + (p-2) cos^2 phi),  minimized at cos^2 phi = 1,
// joins the minimization analytically.
// ---------------------------------------------------------------------------

inline double calibration_expr(double p, double t, double phi) {
  const double ct = std::cos(phi);
  const double ab2 = 1.0 + 2.0 * t * ct + t * t;
  const double num = std::pow(ab2, p / 2.0) - 1.0 - p * t * ct;
  return num * std::pow(1.0 + t, 2.0 - p) / (t * t);
}

inline double calibration_limit(double p, double phi) {
  const double c = std::cos(phi);
  return 0.5 * p * (1.0 + (p - 2.0) * c * c);
}

inline double calibrate_c_small_p(double p, int nt = 400, int nphi = 200, int refine = 3) {
  if (!(p > 1) || !(p < 2)) throw ConfigError("calibration applies to p in (1,2)");
  const double t_lo = 1e-3;
  std::vector<double> ts;
  for (int i = 0; i < nt / 2; ++i)
    ts.push_back(t_lo * std::pow(1.0 / t_lo, static_cast<double>(i) / (nt / 2 - 1)));
  for (int i = 0; i < nt / 2; ++i)
    ts.push_back(1.0001 + (50.0 - 1.0001) * static_cast<double>(i) / (nt / 2 - 1));
  double best = std::numeric_limits<double>::infinity(), t0 = 1.0, phi0 = M_PI;
  for (double t : ts)
    for (int j = 0; j < nphi; ++j) {
      const double phi = M_PI * j / (nphi - 1);
      const double v = calibration_expr(p, t, phi);
      if (v < best) {
        best = v;
        t0 = t;
        phi0 = phi;
      }
    }
  for (int round = 0; round < refine; ++round) {
    const double dt = 0.5 * t0, dphi = 0.2;
    double nbest = best, nt0 = t0, nphi0 = phi0;
    for (int i = 0; i < 80; ++i)
      for (int j = 0; j < 80; ++j) {
        const double t = std::max(t0 - dt, t_lo) + (2.0 * dt) * i / 79.0;
        const double phi = std::clamp(phi0 - dphi + (2.0 * dphi) * j / 79.0, 0.0, M_PI);
        const double v = calibration_expr(p, t, phi);
        if (v < nbest) {
          nbest = v;
          nt0 = t;
          nphi0 = phi;
        }
      }
    best = nbest;
    t0 = nt0;
    phi0 = nphi0;
  }
  best = std::min(best, 0.5 * p * (p - 1.0));
  if (!(best > 0)) throw SpecError("calibration produced a nonpositive constant");
  return best;
}

// c(p) entering the substitution remainders: formula for p >= 2, calibrated
// grid minimum for p in (1,2); never hard-coded.
inline double remainder_constant(double p) {
  if (p >= 2.0) return 1.0 / (std::pow(2.0, p - 1.0) - 1.0);
  return calibrate_c_small_p(p);
}

// ---------------------------------------------------------------------------
// Eigenfields u(x) = |x|^{-(N-p)/p} V(theta) built from the cap profile.
// Closed-form profiles carry exact closures for V and V'; solver profiles
// carry the nodal table with linear interpolation.
// ---------------------------------------------------------------------------

struct EigenField {
  double p = 2.0;
  int N = 2;
  double cap_angle = M_PI;
  double exponent = 0.0;  // radial exponent -(N-p)/p
  double mu = 0.0;        // cap quotient of the stored profile
  std::vector<double> theta, V;
  std::function<double(double)> closure_V, closure_dV;  // set for exact profiles

  double V_at(double th) const {
    if (closure_V) return closure_V(th);
    if (th <= theta.front()) return V.front();
    if (th >= theta.back()) return V.back();
    const auto it = std::upper_bound(theta.begin(), theta.end(), th);
    const std::size_t i = static_cast<std::size_t>(it - theta.begin());
    const double s = (th - theta[i - 1]) / (theta[i] - theta[i - 1]);
    return V[i - 1] + s * (V[i] - V[i - 1]);
  }
  double dV_at(double th) const {
    if (closure_dV) return closure_dV(th);
    const std::size_t n = theta.size();
    if (th <= theta.front()) th = theta.front() + 1e-14;
    if (th >= theta.back()) th = theta.back() - 1e-14;
    const auto it = std::upper_bound(theta.begin(), theta.end(), th);
    std::size_t i = static_cast<std::size_t>(it - theta.begin());
    i = std::min(std::max<std::size_t>(i, 1), n - 1);
    return (V[i] - V[i - 1]) / (theta[i] - theta[i - 1]);
  }
  double value(double r, double th) const { return std::pow(r, exponent) * V_at(th); }
};

// Normalize the profile to unit surface-weighted p-mass (quadrature on the
// stored table; every check below is homogeneous in V, so normalization
// accuracy does not enter the margins).
inline void normalize_eigenfield(EigenField& f) {
  double mass = 0.0;
  for (std::size_t e = 0; e + 1 < f.theta.size(); ++e) {
    segment_quadrature(f.theta[e], f.theta[e + 1], false, [&](double th, double w) {
      const double v = f.V_at(th);
      const double surf = f.N >= 3 ? std::pow(std::sin(th), f.N - 2) : 1.0;
      mass += std::pow(std::abs(v), f.p) * surf * w;
    });
  }
  if (!(mass > 0)) throw SpecError("degenerate eigenfield profile");
  const double s = std::pow(mass, -1.0 / f.p);
  for (double& v : f.V) v *= s;
  if (f.closure_V) {
    auto cv = f.closure_V, cdv = f.closure_dV;
    f.closure_V = [cv, s](double th) { return s * cv(th); };
    f.closure_dV = [cdv, s](double th) { return s * cdv(th); };
  }
}

inline EigenField build_eigenfield(double p, int N, double cap_angle, bool analytic = false,
                                   const SolveOptions& opt = {}) {
  EigenField f;
  f.p = p;
  f.N = N;
  f.cap_angle = cap_angle;
  f.exponent = -(N - p) / p;
  const int ntab = 2000;
  if (analytic) {
    if (p != 2.0) throw ConfigError("closed-form profiles are available at p = 2 only");
    if (N == 2) {
      const double k = M_PI / cap_angle;
      f.closure_V = [k](double th) { return std::sin(k * th); };
      f.closure_dV = [k](double th) { return k * std::cos(k * th); };
      f.mu = k * k;  // the radial exponent vanishes at N = p = 2
    } else if (N == 3 && cap_angle == M_PI_2) {
      f.closure_V = [](double th) { return std::cos(th); };
      f.closure_dV = [](double th) { return -std::sin(th); };
      f.mu = 0.25 + 2.0;  // ((N-p)/p)^2 plus the first sin-weighted level
    } else {
      throw ConfigError("no closed-form profile for these parameters");
    }
    f.theta.resize(ntab + 1);
    f.V.resize(ntab + 1);
    for (int i = 0; i <= ntab; ++i) {
      f.theta[i] = cap_angle * i / ntab;
      f.V[i] = f.closure_V(f.theta[i]);
    }
  } else {
    SolveOptions o = opt;
    if (o.levels <= 0) o.levels = 3;
    SolveResult cap = solve_cap(p, N, cap_angle, o);
    f.mu = cap.level_values.back();
    f.theta.resize(cap.mesh->node_count());
    f.V.resize(cap.mesh->node_count());
    for (int i = 0; i < cap.mesh->node_count(); ++i) {
      f.theta[i] = cap.mesh->nodes[i].x;
      f.V[i] = std::abs(cap.u[i]);
    }
  }
  normalize_eigenfield(f);
  return f;
}

// ---------------------------------------------------------------------------
// Weak residual of the eigenfield on the truncated cone {eps < |x| < 1,
// 0 < theta < cap_angle} against product test fields vanishing on the whole
// boundary:
//   R(h) = int |grad v|^{p-2} grad v . grad h - mu int |x|^{-p} |v|^{p-2} v h,
// normalized by (int |grad h|^p)^{1/p}. All factors are evaluated directly at
// composite Gauss points (no finite element interpolation), so the residual
// of an exact eigenfield decays at the quadrature rate.
// ---------------------------------------------------------------------------

struct ResidualReport {
  double worst = 0.0;
  std::vector<double> per_test;
  int level = 0;
  long points = 0;
};

inline ResidualReport weak_residual(const EigenField& f, double mu, int level,
                                    double eps = 1e-3) {
  const int nr = 24 << level, nth = 16 << level;
  const double p = f.p, Th = f.cap_angle, a_exp = f.exponent;
  const double L = std::log(1.0 / eps);
  // Radial panels in the log variable l in [0, 1]; rho = eps (1/eps)^l.
  std::vector<double> lq, lw, tq, tw;
  for (int e = 0; e < nr; ++e)
    segment_quadrature(static_cast<double>(e) / nr, static_cast<double>(e + 1) / nr, false,
                       [&](double x, double w) {
                         lq.push_back(x);
                         lw.push_back(w);
                       });
  for (int e = 0; e < nth; ++e)
    segment_quadrature(Th * e / nth, Th * (e + 1) / nth, false, [&](double x, double w) {
      tq.push_back(x);
      tw.push_back(w);
    });
  std::vector<double> Vv(tq.size()), dVv(tq.size());
  for (std::size_t j = 0; j < tq.size(); ++j) {
    Vv[j] = f.V_at(tq[j]);
    dVv[j] = f.dV_at(tq[j]);
  }
  ResidualReport rr;
  rr.level = level;
  rr.points = static_cast<long>(lq.size()) * static_cast<long>(tq.size());
  for (int kr = 1; kr <= 2; ++kr) {
    for (int ka = 0; ka < 3; ++ka) {
      double res = 0.0, hen = 0.0;
      for (std::size_t i = 0; i < lq.size(); ++i) {
        const double l = lq[i];
        double phi, dphi_dl;
        if (kr == 1) {
          const double s = std::sin(M_PI * l);
          phi = s * s;
          dphi_dl = M_PI * std::sin(2 * M_PI * l);
        } else if (l < 0.5) {
          const double s = std::sin(2 * M_PI * l);
          phi = s * s;
          dphi_dl = 2 * M_PI * std::sin(4 * M_PI * l);
        } else {
          continue;
        }
        const double rho = eps * std::exp(L * l);
        const double dphi_drho = dphi_dl / (rho * L);
        const double rp = std::pow(rho, a_exp);
        for (std::size_t j = 0; j < tq.size(); ++j) {
          const double w2 = lw[i] * (rho * L) * tw[j] * rho;  // d rho = rho L dl
          double g, dg;
          if (ka == 0) {
            g = std::sin(M_PI * tq[j] / Th);
            dg = M_PI / Th * std::cos(M_PI * tq[j] / Th);
          } else if (ka == 1) {
            g = std::sin(2 * M_PI * tq[j] / Th);
            dg = 2 * M_PI / Th * std::cos(2 * M_PI * tq[j] / Th);
          } else {
            g = Vv[j];
            dg = dVv[j];
          }
          const double v = rp * Vv[j];
          const double v_r = a_exp * rp / rho * Vv[j];
          const double v_t = rp / rho * dVv[j];  // angular gradient component
          const double h = phi * g;
          const double h_r = dphi_drho * g;
          const double h_t = phi * dg / rho;
          const double gv = std::hypot(v_r, v_t);
          if (gv > 0) res += std::pow(gv, p - 2.0) * (v_r * h_r + v_t * h_t) * w2;
          res -= mu * std::pow(rho, -p) * dpow_abs(v, p) / p * h * w2;
          hen += std::pow(h_r * h_r + h_t * h_t, p / 2.0) * w2;
        }
      }
      if (!(hen > 0)) continue;
      const double r = std::abs(res) / std::pow(hen, 1.0 / p);
      rr.per_test.push_back(r);
      rr.worst = std::max(rr.worst, r);
    }
  }
  return rr;
}

// ---------------------------------------------------------------------------
// Reduction remainder: for u = psi(r) v with v = r^{(p-2)/p} V(theta) on the
// truncated half-disc cone, the energy surplus over mu dominates the
// substitution remainder built from |v grad psi|.
// ---------------------------------------------------------------------------

namespace detail {

// Composite 3-point Gauss panels on [a, b].
inline void gauss_panels(double a, double b, int n, std::vector<double>& x,
                         std::vector<double>& w) {
  x.clear();
  w.clear();
  for (int e = 0; e < n; ++e) {
    const double lo = a + (b - a) * e / n, hi = a + (b - a) * (e + 1) / n;
    segment_quadrature(lo, hi, false, [&](double s, double wt) {
      x.push_back(s);
      w.push_back(wt);
    });
  }
}

struct Bump {
  double a = 0.0, b = 1.0;
  double phi(double r) const {
    const double s = (r - a) / (b - a);
    return (s > 0 && s < 1) ? (s * (1 - s)) * (s * (1 - s)) : 0.0;
  }
  double dphi(double r) const {
    const double s = (r - a) / (b - a);
    return (s > 0 && s < 1) ? 2 * s * (1 - s) * (1 - 2 * s) / (b - a) : 0.0;
  }
};

}  // namespace detail

// A nonnegative trial field on the truncated cone, sampled with its polar
// gradient components (d/dr, (1/r) d/dtheta).
struct ConeSample {
  double u = 0.0, u_r = 0.0, u_t = 0.0;
};
using ConeField = std::function<ConeSample(double r, double theta)>;

// Single-field remainder margin. The quotient psi = u / v is formed by actual
// division at quadrature points (floor-guarded, never clamped); the remainder
// factors come from the product rule: v grad psi = grad u - psi grad v.
inline double reduction_remainder_margin(const EigenField& f, double mu, double c_small,
                                         const ConeField& ufn, double eps_r = 1e-3, int nr = 400,
                                         int nth = 400, double* scale_out = nullptr) {
  const double p = f.p;
  const double a_exp = f.exponent;
  std::vector<double> r, wr, th, wth;
  detail::gauss_panels(eps_r, 1.0, nr, r, wr);
  detail::gauss_panels(0.0, f.cap_angle, nth, th, wth);
  std::vector<double> Vv(th.size()), dVv(th.size());
  double vmax = 0.0;
  for (std::size_t j = 0; j < th.size(); ++j) {
    Vv[j] = f.V_at(th[j]);
    dVv[j] = f.dV_at(th[j]);
  }
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double rp = std::pow(r[i], a_exp);
    for (std::size_t j = 0; j < th.size(); ++j) vmax = std::max(vmax, std::abs(rp * Vv[j]));
  }
  double E = 0.0, W = 0.0, RHS = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double ri = r[i];
    const double rp = std::pow(ri, a_exp);
    for (std::size_t j = 0; j < th.size(); ++j) {
      const ConeSample s = ufn(ri, th[j]);
      if (s.u < 0) throw ConfigError("trial fields must be nonnegative");
      if (s.u == 0.0 && s.u_r == 0.0 && s.u_t == 0.0) continue;
      const double v = rp * Vv[j];
      if (std::abs(v) < 1e-10 * vmax)
        throw ConditioningError("profile too small on the trial field's support");
      const double v_r = a_exp * rp / ri * Vv[j];
      const double v_t = rp / ri * dVv[j];
      const double ww = wr[i] * wth[j] * ri;  // polar measure
      E += ww * std::pow(s.u_r * s.u_r + s.u_t * s.u_t, p / 2.0);
      W += ww * std::pow(ri, -p) * std::pow(s.u, p);
      const double psi = s.u / v;
      const double vps_r = s.u_r - psi * v_r;  // v grad psi, componentwise
      const double vps_t = s.u_t - psi * v_t;
      const double vgpsi = std::hypot(vps_r, vps_t);
      if (p >= 2.0) {
        RHS += ww * std::pow(vgpsi, p) / (std::pow(2.0, p - 1.0) - 1.0);
      } else {
        const double pgv = std::abs(psi) * std::hypot(v_r, v_t);
        const double den = vgpsi + pgv;
        if (den > 0) RHS += ww * c_small * vgpsi * vgpsi * std::pow(den, p - 2.0);
      }
    }
  }
  const double LHS = E - mu * W;
  if (scale_out) *scale_out = std::max({std::abs(LHS), std::abs(RHS), 1e-300});
  return LHS - RHS;
}

inline MarginReport reduction_remainder_check(double p, int bumps = 20, std::uint64_t seed = 7,
                                              double eps_r = 1e-3, bool analytic_profile = false,
                                              int nr = 400, int nth = 400) {
  if (!(p > 1)) throw ConfigError("p must exceed 1");
  EigenField f = build_eigenfield(p, 2, M_PI, analytic_profile);
  const double mu = f.mu;
  const double cp_small = p < 2.0 ? remainder_constant(p) : 0.0;
  Rng rng(seed);
  MarginReport rep;
  rep.check = "reduction_remainder";
  rep.parameters = {{"p", p}, {"mu", mu}, {"eps_r", eps_r}, {"bumps", double(bumps)}};
  rep.samples = bumps;
  rep.seed = seed;
  rep.min_margin = std::numeric_limits<double>::infinity();
  const EigenField* fp = &f;
  for (int k = 0; k < bumps; ++k) {
    detail::Bump bump;
    bump.a = 0.05 + 0.4 * rng.uniform01();
    bump.b = bump.a + 0.2 + (0.95 - bump.a - 0.2) * rng.uniform01();
    // u = v * phi(r): smooth radial bump times the homogeneous profile.
    ConeField ufn = [fp, bump](double r, double theta) {
      const double rp = std::pow(r, fp->exponent);
      const double V = fp->V_at(theta);
      const double ph = bump.phi(r), dph = bump.dphi(r);
      ConeSample s;
      s.u = rp * V * ph;
      s.u_r = (fp->exponent * rp / r * V) * ph + rp * V * dph;
      s.u_t = (rp / r * fp->dV_at(theta)) * ph;
      return s;
    };
    double scale;
    const double margin =
        reduction_remainder_margin(f, mu, cp_small, ufn, eps_r, nr, nth, &scale) / scale;
    if (margin < rep.min_margin) {
      rep.min_margin = margin;
      rep.scale = scale;
      rep.argmin_sample = {bump.a, bump.b};
    }
  }
  // p = 2 is an exact identity, so only quadrature noise remains; p != 2 keeps
  // a strictly positive remainder surplus.
  rep.pass = p == 2.0 ? std::abs(rep.min_margin) < 1e-8 : rep.min_margin >= 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Pointwise substitution inequality for the distance weight: with
// u = d^{(p-1)/p} v and |grad d| = 1,
//   |grad u|^p - c_p d^{-p} |u|^p
//     >= c(p) d^{p-1} |grad v|^p + ((p-1)/p)^{p-1} grad d . grad(v^p)   (p >= 2)
//     >= c(p) d |grad v|^2 / (c_p^{1/p} |v| + d |grad v|)^{2-p} + same  (1 < p < 2).
// ---------------------------------------------------------------------------

inline double distance_substitution_margin(double p, double c_small, double d, double v, Vec2 gv,
                                           Vec2 grad_d, double* scale_out = nullptr) {
  if (std::abs(norm(grad_d) - 1.0) > 1e-12)
    throw ConfigError("distance gradients must be unit vectors");
  const double cp_root = (p - 1.0) / p;
  const double cp = std::pow(cp_root, p);
  const Vec2 gu = (cp_root * std::pow(d, -1.0 / p) * v) * grad_d + std::pow(d, cp_root) * gv;
  const double uval = std::pow(d, cp_root) * v;
  const double lhs = std::pow(norm(gu), p) - cp * std::pow(d, -p) * std::pow(std::abs(uval), p);
  const double ngv = norm(gv);
  const double grad_vp_dot = dpow_abs(v, p) * dot(grad_d, gv);  // grad d . grad(v^p)
  double first;
  if (p >= 2.0) {
    first = c_small * std::pow(d, p - 1.0) * std::pow(ngv, p);
  } else {
    const double den = cp_root * std::abs(v) + d * ngv;
    first = den > 0 ? c_small * d * ngv * ngv * std::pow(den, p - 2.0) : 0.0;
  }
  const double rhs = first + std::pow(cp_root, p - 1.0) * grad_vp_dot;
  // Rounding in the margin is proportional to the largest term entering it,
  // not to the (possibly tiny) cancelled difference, so condition against
  // the terms themselves.
  if (scale_out)
    *scale_out = std::max({std::pow(norm(gu), p),
                           cp * std::pow(d, -p) * std::pow(std::abs(uval), p),
                           std::abs(first),
                           std::abs(std::pow(cp_root, p - 1.0) * grad_vp_dot), 1e-300});
  return lhs - rhs;
}

inline MarginReport distance_substitution_check(double p, long samples = 10000,
                                                std::uint64_t seed = 11) {
  if (!(p > 1)) throw ConfigError("p must exceed 1");
  const double c_small = remainder_constant(p);
  Rng rng(seed);
  MarginReport rep;
  rep.check = "distance_substitution";
  rep.parameters = {{"p", p}, {"c", c_small}};
  rep.samples = samples;
  rep.seed = seed;
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (long s = 0; s < samples; ++s) {
    const double d = 2.0 * std::max(rng.uniform01(), 1e-12);
    const double v = 2.0 * (2 * rng.uniform01() - 1);
    const Vec2 gv{2.0 * (2 * rng.uniform01() - 1), 2.0 * (2 * rng.uniform01() - 1)};
    const double ang = 2 * M_PI * rng.uniform01();
    const Vec2 e{std::cos(ang), std::sin(ang)};
    double scale;
    const double m = distance_substitution_margin(p, c_small, d, v, gv, e, &scale) / scale;
    if (m < rep.min_margin) {
      rep.min_margin = m;
      rep.scale = scale;
      rep.argmin_sample = {d, v, gv.x, gv.y, ang};
    }
  }
  rep.pass = p == 2.0 ? std::abs(rep.min_margin) < 1e-12 : rep.min_margin >= -1e-12;
  return rep;
}

// ---------------------------------------------------------------------------
// One-dimensional improved-constant bound: the shifted infimum
// inf (int |u'|^p - c_p int x^{-p} |u|^p) / int |u|^p on (0, 1) stays above
// (p-1) 2^p. The discrete infimum over the conforming subspace can only
// overestimate, so the check is violation-safe.
// ---------------------------------------------------------------------------

inline MarginReport tidblom_1d_check(double p, const SolveOptions& opt = {}) {
  SolveOptions o = opt;
  if (o.levels <= 0) o.levels = 2;
  if (o.base_n == 0) o.base_n = 2048;
  if (o.depth < 0 && o.grading < 0) o.depth = 40.0;
  SolveResult r = lambda_star_direct(DomainSpec::interval(1.0), p, o);
  const double bound = (p - 1.0) * std::pow(2.0, p);
  MarginReport rep;
  rep.check = "interval_threshold_lower_bound";
  rep.parameters = {{"p", p}, {"bound", bound}, {"value", r.level_values.back()}};
  rep.samples = 1;
  rep.min_margin = (r.level_values.back() - bound) / std::max(bound, 1.0);
  rep.scale = std::max(bound, 1.0);
  rep.argmin_sample = {p};
  rep.pass = rep.min_margin >= 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Faber-Krahn-type lower bound on the first Dirichlet eigenvalue (p = 2):
// lambda_1(Omega) >= C (omega_N / |Omega|)^{p/N}, with C the disc threshold
// constant obtained from the radial-weight solver (never hard-coded). The
// discrete eigenvalue is conforming from above, so the check is safe.
// ---------------------------------------------------------------------------

inline MarginReport bv_ggm_check(const DomainSpec& dom, const SolveOptions& opt = {}) {
  validate(dom);
  const int N = 2;
  SolveOptions oc;
  oc.levels = 2;
  oc.base_n = 2000;
  const double C_const = lambda_p_constant(2.0, oc).value;
  const double omega_N = M_PI;
  const double area = domain_area(dom);
  const double bound = C_const * std::pow(omega_N / area, 2.0 / N);
  ProblemSpec none;
  none.weight = Weight::None;
  SolveOptions o = opt;
  if (o.levels <= 0) o.levels = 2;
  SolveResult r = minimize_quotient(dom, none, o);
  const double l1 = r.level_values.back();
  MarginReport rep;
  rep.check = "eigenvalue_volume_lower_bound";
  rep.parameters = {{"C_const", C_const}, {"omega_N", omega_N}, {"area", area},
                    {"bound", bound},     {"lambda1", l1}};
  rep.samples = 1;
  rep.min_margin = (l1 - bound) / bound;
  rep.scale = bound;
  rep.argmin_sample = {area};
  rep.pass = rep.min_margin >= 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Collar lift of the one-dimensional profile: solve the interval problem on
// (0, beta), lift through the boundary distance as u = phi(d), and report the
// lifted quotient; shrinking beta drives it toward the interval constant.
// ---------------------------------------------------------------------------

struct LiftRow {
  double beta = 0.0;
  double value_1d = 0.0;
  double lifted = 0.0;
};

inline std::vector<LiftRow> lift_1d_profile(const DomainSpec& poly,
                                            const std::vector<double>& betas, double p = 2.0,
                                            const SolveOptions& opt = {}) {
  if (poly.kind != DomainKind::Polygon) throw ConfigError("collar lift requires a polygon");
  std::vector<LiftRow> rows;
  for (double beta : betas) {
    // 1D profile on (0, beta), Dirichlet at both ends.
    const int n1 = 1500;
    Mesh m1 = interval_mesh(beta, n1, 8.0, true, true);
    WeightFn w1 = [p](Vec2 x) { return std::pow(x.x, -p); };
    QuotientProblem pr1(m1, p, w1, nullptr, [&m1](int e) {
      return m1.elems[e][0] == 0 || m1.elems[e][1] == 0;
    });
    LiftRow row;
    row.beta = beta;
    std::vector<double> phi(m1.node_count(), 0.0);
    if (p == 2.0) {
      PencilResult pe = pencil_smallest(pr1.tab.stiffness(), pr1.tab.mass(true), m1);
      row.value_1d = pe.value;
      phi = pe.vec;
    } else {
      for (int i = 0; i < m1.node_count(); ++i)
        phi[i] = std::min(m1.nodes[i].x, beta - m1.nodes[i].x);
      DescentStats ds = p_descent(pr1, phi, 1e-12, 2000);
      row.value_1d = ds.value;
    }
    double phimax = 0.0;
    for (double v : phi) phimax = std::max(phimax, std::abs(v));
    for (double& v : phi) v = std::abs(v) / phimax;
    auto phi_at = [&](double d) {
      if (d >= beta) return 0.0;
      // nodes are power-graded: invert x = beta (i/n)^8 for the bracket
      const double s = std::pow(d / beta, 1.0 / 8.0);
      int i = std::clamp(static_cast<int>(s * n1), 0, n1 - 1);
      while (i > 0 && m1.nodes[i].x > d) --i;
      while (i < n1 - 1 && m1.nodes[i + 1].x < d) ++i;
      const double x0 = m1.nodes[i].x, x1 = m1.nodes[i + 1].x;
      const double t = (d - x0) / (x1 - x0);
      return phi[i] * (1 - t) + phi[i + 1] * t;
    };
    // Collar mesh of {d < beta} and the nodal lift.
    DomainSpec collar = DomainSpec::collar(poly, beta);
    MeshOptions mo;
    mo.base_n = opt.base_n > 0 ? opt.base_n : 48;
    const double grading = opt.grading > 0 ? opt.grading : 2.5;
    Mesh m2 = build_mesh(collar, std::max(0, opt.levels - 1), grading, mo);
    std::vector<double> u(m2.node_count());
    for (int i = 0; i < m2.node_count(); ++i)
      u[i] = phi_at(distance_to_boundary(poly, m2.nodes[i]));
    for (int i = 0; i < m2.node_count(); ++i)
      if (m2.dirichlet[i]) u[i] = 0.0;
    const DomainSpec* pd = &poly;
    WeightFn w2 = [p, pd](Vec2 x) { return std::pow(distance_to_boundary(*pd, x), -p); };
    ProblemSpec prd;
    prd.p = p;
    prd.weight = Weight::BoundaryDistance;
    QuadTables tab(m2, w2, nullptr, near_singular_predicate(m2, prd, poly));
    row.lifted = tab.p_energy(u, p) / tab.p_mass(u, p, true);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace hardylab
