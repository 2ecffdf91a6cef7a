#pragma once
// Refinement studies: run a level sequence, extrapolate its limit, and grade
// it against a declared target and tolerance.
#include <cmath>
#include <string>
#include <vector>

#include "hardylab/common.hh"
#include "hardylab/solvers.hh"

namespace hardylab {

struct StudyReport {
  std::vector<double> level_values;
  bool extrapolation_valid = false;  // requires >= 3 converged levels
  double extrapolated = 0.0;
  double estimated_order = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool monotone_toward_target = false;
  bool pass = false;
  std::vector<std::string> notes;
};

// Grade a level sequence: the sequence must approach the target from one side
// (|v_k - target| non-increasing) and its extrapolated limit must land within
// the tolerance. A non-monotone sequence is flagged failed rather than
// extrapolated around.
inline StudyReport study_convergence(const std::vector<double>& values, double target,
                                     double tol) {
  StudyReport rep;
  rep.level_values = values;
  rep.target = target;
  rep.tolerance = tol;
  if (values.size() < 3) {
    rep.notes.push_back("fewer than 3 levels: no extrapolation");
    rep.extrapolated = values.empty() ? 0.0 : values.back();
    rep.pass = false;
    return rep;
  }
  rep.monotone_toward_target = true;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (std::abs(values[i] - target) > std::abs(values[i - 1] - target) + 1e-12) {
      rep.monotone_toward_target = false;
      rep.notes.push_back("level sequence not monotone toward the target");
      break;
    }
  }
  rep.extrapolation_valid = true;
  rep.extrapolated = aitken_limit(values).value_or(values.back());
  rep.estimated_order = hardylab::estimated_order(values);
  rep.pass = rep.monotone_toward_target && std::abs(rep.extrapolated - target) <= tol;
  return rep;
}

// Drive a quotient solve and grade its level sequence.
inline StudyReport run_study(const DomainSpec& dom, const ProblemSpec& pr, double target,
                             double tol, const SolveOptions& opt = {}) {
  SolveOptions o = opt;
  if (o.levels < 3) o.levels = 3;
  SolveResult r = pr.weight == Weight::BoundaryDistance ? nu_lambda(dom, pr, o)
                                                        : minimize_quotient(dom, pr, o);
  StudyReport rep = study_convergence(r.level_values, target, tol);
  for (const std::string& n : r.notes) rep.notes.push_back(n);
  return rep;
}

}  // namespace hardylab
