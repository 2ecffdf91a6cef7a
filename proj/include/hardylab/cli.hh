#pragma once
// Batch front-end: parse a JSON run configuration, dispatch to the solver or
// check it names, and emit machine-readable reports. Exit codes: 0 success,
// 1 assertion/violation failure, 2 configuration error.
#include <filesystem>
#include <iostream>
#include <string>

#include "hardylab/report.hh"

namespace hardylab {

struct RunConfig {
  std::string command;
  nlohmann::json effective;  // config after command-line overrides (hashed)
  DomainSpec domain;
  bool has_domain = false;
  ProblemSpec problem;
  SolveOptions options;
  std::string out_dir = ".";
  bool quiet = true;
};

struct RunOutcome {
  int exit_code = 0;
  ordered_json report;
  std::string csv;
  bool has_csv = false;
};

inline RunConfig parse_run_config(const nlohmann::json& j, const std::string& command_hint = "") {
  RunConfig rc;
  rc.effective = j;
  rc.command = j.value("command", command_hint);
  if (rc.command.empty()) throw ConfigError("no command given");
  if (!command_hint.empty() && j.contains("command") &&
      j["command"].get<std::string>() != command_hint)
    throw ConfigError("config command disagrees with the invoked verb");
  static const char* known[] = {"solve",  "cap",   "lambda-star",   "nu",
                                "sweep",  "study", "sector-search", "verify"};
  bool ok = false;
  for (const char* k : known) ok = ok || rc.command == k;
  if (!ok) throw ConfigError("unknown command: " + rc.command);
  if (j.contains("domain")) {
    rc.domain = domain_from_json(j["domain"]);
    rc.has_domain = true;
  }
  if (j.contains("problem")) rc.problem = problem_from_json(j["problem"]);
  rc.options = options_from_json(j.value("options", nlohmann::json::object()),
                                 SolveOptions{}.seed);
  rc.out_dir = j.value("out", std::string("."));
  return rc;
}

namespace detail {

inline MarginReport run_named_check(const RunConfig& rc) {
  const nlohmann::json& j = rc.effective;
  const nlohmann::json check = j.value("check", nlohmann::json::object());
  const std::string name = check.value("name", std::string());
  const double p = check.value("p", rc.problem.p);
  const std::uint64_t seed = check.value("seed", rc.options.seed);
  if (name == "lindqvist") {
    return lindqvist_check(check.value("samples", 1000000L), seed,
                           check.value("p_min", 2.0), check.value("p_max", 6.0),
                           check.value("amplitude", 10.0));
  }
  if (name == "calibrate") {
    MarginReport rep;
    rep.check = "calibration";
    const double c = calibrate_c_small_p(p);
    rep.parameters = {{"p", p}, {"c", c}};
    rep.samples = 1;
    rep.min_margin = c;
    rep.scale = 1.0;
    rep.seed = seed;
    rep.pass = c > 0;
    return rep;
  }
  if (name == "distance-substitution")
    return distance_substitution_check(p, check.value("samples", 10000L), seed);
  if (name == "reduction-remainder")
    return reduction_remainder_check(p, check.value("bumps", 20), seed,
                                     check.value("eps_r", 1e-3),
                                     check.value("analytic", p == 2.0));
  if (name == "weak-residual") {
    const int level = check.value("level", 2);
    const bool analytic = check.value("analytic", true);
    SolveOptions o = rc.options;
    EigenField f = build_eigenfield(p, check.value("N", 2),
                                    check.value("cap_angle", M_PI), analytic, o);
    ResidualReport rr = weak_residual(f, check.value("mu", f.mu), level);
    MarginReport rep;
    rep.check = "weak_residual";
    rep.parameters = {{"p", p},
                      {"level", double(level)},
                      {"mu", check.value("mu", f.mu)},
                      {"worst", rr.worst}};
    rep.samples = static_cast<long>(rr.per_test.size());
    rep.min_margin = rr.worst;
    rep.scale = 1.0;
    rep.seed = seed;
    rep.pass = rr.worst < check.value("max_residual", 1e-6);
    return rep;
  }
  if (name == "tidblom") return tidblom_1d_check(p, rc.options);
  if (name == "volume-bound") {
    if (!rc.has_domain) throw ConfigError("volume-bound check needs a domain");
    return bv_ggm_check(rc.domain, rc.options);
  }
  if (name == "collar-lift") {
    if (!rc.has_domain) throw ConfigError("collar-lift check needs a polygon domain");
    std::vector<double> betas = check.value("betas", std::vector<double>{0.2, 0.1, 0.05});
    auto rows = lift_1d_profile(rc.domain, betas, p, rc.options);
    MarginReport rep;
    rep.check = "collar_lift";
    rep.samples = static_cast<long>(rows.size());
    rep.seed = seed;
    rep.pass = true;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      rep.parameters["beta_" + std::to_string(i)] = rows[i].beta;
      rep.parameters["lifted_" + std::to_string(i)] = rows[i].lifted;
      rep.parameters["value_1d_" + std::to_string(i)] = rows[i].value_1d;
      if (!(rows[i].lifted <= prev + 1e-12)) rep.pass = false;
      prev = rows[i].lifted;
      rep.min_margin = rows[i].lifted - rows[i].value_1d;
    }
    return rep;
  }
  throw ConfigError("unknown check: " + name);
}

}  // namespace detail

inline RunOutcome run(const RunConfig& rc) {
  RunOutcome out;
  ordered_json rep = report_envelope(rc.command, rc.effective, rc.options.seed);
  rep["config"] = ordered_json(rc.effective);

  if (rc.command == "solve") {
    if (!rc.has_domain) throw ConfigError("solve needs a domain");
    SolveResult r = minimize_quotient(rc.domain, rc.problem, rc.options);
    rep["result"] = solve_result_to_json(r);
  } else if (rc.command == "cap") {
    if (!rc.has_domain || rc.domain.kind != DomainKind::ConeCap)
      throw ConfigError("cap needs a cone_cap domain");
    SolveResult r = solve_cap(rc.problem.p, rc.domain.N, rc.domain.cap_angle, rc.options);
    rep["result"] = solve_result_to_json(r);
  } else if (rc.command == "lambda-star") {
    if (!rc.has_domain) throw ConfigError("lambda-star needs a domain");
    const nlohmann::json ls = rc.effective.value("lambda_star", nlohmann::json::object());
    const std::string method = ls.value("method", std::string("direct"));
    if (method == "direct") {
      SolveResult r = lambda_star_direct(rc.domain, rc.problem.p, rc.options);
      rep["result"] = solve_result_to_json(r);
    } else if (method == "bisect") {
      BisectResult b =
          lambda_star_bisect(rc.domain, rc.problem.p, ls.value("lo", 0.0),
                             ls.value("hi", M_PI * M_PI), rc.options, ls.value("steps", 18));
      rep["result"] = bisect_result_to_json(b);
    } else {
      throw ConfigError("unknown lambda-star method: " + method);
    }
  } else if (rc.command == "nu") {
    if (!rc.has_domain) throw ConfigError("nu needs a domain");
    ProblemSpec pr = rc.problem;
    pr.weight = Weight::BoundaryDistance;
    SolveResult r = nu_lambda(rc.domain, pr, rc.options);
    rep["result"] = solve_result_to_json(r);
  } else if (rc.command == "sweep") {
    const nlohmann::json sw = rc.effective.value("sweep", nlohmann::json::object());
    const std::string kind = sw.value("kind", std::string());
    const std::vector<double> values = sw.value("values", std::vector<double>{});
    if (values.empty()) throw ConfigError("sweep needs a nonempty values list");
    SweepResult r;
    if (kind == "lambda") {
      if (!rc.has_domain) throw ConfigError("lambda sweep needs a domain");
      r = sweep_lambda(rc.domain, rc.problem.p, values, rc.options);
    } else if (kind == "lens_radius") {
      r = sweep_lens_radius(rc.problem.p, values, rc.options);
    } else {
      throw ConfigError("unknown sweep kind: " + kind);
    }
    rep["result"] = sweep_result_to_json(r);
    out.csv = sweep_to_csv(r);
    out.has_csv = true;
    if (!(r.monotone_ok && r.bound_ok)) out.exit_code = 1;
  } else if (rc.command == "sector-search") {
    const nlohmann::json sc = rc.effective.value("sector", nlohmann::json::object());
    SectorSearchResult r = sector_search(sc.value("delta", rc.domain.delta), rc.problem.p,
                                         rc.options, sc.value("r_floor", 1e-12));
    rep["result"] = sector_result_to_json(r);
  } else if (rc.command == "verify") {
    MarginReport m = detail::run_named_check(rc);
    rep["result"] = margin_report_to_json(m);
    if (!m.pass) out.exit_code = 1;
  } else if (rc.command == "study") {
    if (!rc.has_domain) throw ConfigError("study needs a domain");
    const nlohmann::json st = rc.effective.value("study", nlohmann::json::object());
    if (!st.contains("target") || !st.contains("tol"))
      throw ConfigError("study needs target and tol");
    StudyReport s = run_study(rc.domain, rc.problem, st["target"].get<double>(),
                              st["tol"].get<double>(), rc.options);
    rep["result"] = study_report_to_json(s);
    out.csv = study_to_csv(s);
    out.has_csv = true;
    if (!s.pass) out.exit_code = 1;
  } else {
    throw ConfigError("unknown command: " + rc.command);
  }
  out.report = std::move(rep);
  return out;
}

// File-writing wrapper used by the command-line tool. Returns the exit code.
inline int run_to_files(const RunConfig& rc, std::ostream& err) {
  try {
    RunOutcome out = run(rc);
    std::filesystem::create_directories(rc.out_dir);
    write_text_file(rc.out_dir + "/report.json", out.report.dump(2) + "\n");
    if (out.has_csv) write_text_file(rc.out_dir + "/table.csv", out.csv);
    if (!rc.quiet) err << "report written to " << rc.out_dir << "/report.json\n";
    return out.exit_code;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const SpecError& e) {
    err << "invariant failure: " << e.what() << "\n";
    return 1;
  } catch (const ViolationError& e) {
    err << "violation: " << e.what() << "\n";
    return 1;
  } catch (const ConditioningError& e) {
    err << "conditioning failure: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace hardylab
