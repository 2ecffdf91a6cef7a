#pragma once
// Machine-readable reports: JSON documents (stable key order, no timestamps,
// byte-identical for identical config and seed) and fixed-column CSV tables.
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardylab/common.hh"
#include "hardylab/geometry.hh"
#include "hardylab/inequalities.hh"
#include "hardylab/solvers.hh"
#include "hardylab/study.hh"

namespace hardylab {

using ordered_json = nlohmann::ordered_json;

inline const std::vector<std::pair<std::string, std::string>>& module_versions() {
  static const std::vector<std::pair<std::string, std::string>> v = {
      {"domain_mesh", "1.0.0"},
      {"energy_assembly", "1.0.0"},
      {"quotient_solvers", "1.0.0"},
      {"inequality_lab", "1.0.0"},
      {"studies_cli", "1.0.0"},
  };
  return v;
}

inline std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Canonical config hash: sorted-key dump so field order in the file does not
// matter.
inline std::uint64_t config_hash(const nlohmann::json& config) {
  return fnv1a64(config.dump());
}

inline ordered_json domain_to_json(const DomainSpec& d) {
  ordered_json j;
  switch (d.kind) {
    case DomainKind::Interval:
      j["variant"] = "interval";
      j["length"] = d.length;
      break;
    case DomainKind::HalfBall:
      j["variant"] = "half_ball";
      j["N"] = d.N;
      j["radius"] = d.radius;
      j["axis_angle"] = d.axis_angle;
      break;
    case DomainKind::Sector:
      j["variant"] = "sector";
      j["delta"] = d.delta;
      j["r_inner"] = d.r_inner;
      j["r_outer"] = d.r_outer;
      j["axis_angle"] = d.axis_angle;
      break;
    case DomainKind::ConeCap:
      j["variant"] = "cone_cap";
      j["N"] = d.N;
      j["cap_angle"] = d.cap_angle;
      break;
    case DomainKind::ExteriorLens:
      j["variant"] = "exterior_lens";
      j["obstacle_radius"] = d.obstacle_radius;
      j["truncation"] = d.truncation;
      break;
    case DomainKind::Polygon: {
      j["variant"] = "polygon";
      ordered_json verts = ordered_json::array();
      for (const Vec2& v : d.vertices) verts.push_back({v.x, v.y});
      j["vertices"] = verts;
      break;
    }
    case DomainKind::Collar:
      j["variant"] = "collar";
      j["base"] = domain_to_json(*d.base);
      j["width"] = d.width;
      break;
  }
  return j;
}

inline DomainSpec domain_from_json(const nlohmann::json& j) {
  const std::string variant = j.at("variant").get<std::string>();
  if (variant == "interval") return DomainSpec::interval(j.value("length", 1.0));
  if (variant == "half_ball")
    return DomainSpec::half_ball(j.value("N", 2), j.value("radius", 1.0),
                                 j.value("axis_angle", 0.0));
  if (variant == "sector")
    return DomainSpec::sector(j.at("delta").get<double>(), j.value("r_inner", 0.0),
                              j.value("r_outer", 1.0), j.value("axis_angle", 0.0));
  if (variant == "cone_cap")
    return DomainSpec::cone_cap(j.value("N", 2), j.at("cap_angle").get<double>());
  if (variant == "exterior_lens")
    return DomainSpec::exterior_lens(j.value("obstacle_radius", 1.0),
                                     j.value("truncation", 1.0));
  if (variant == "polygon") {
    std::vector<Vec2> verts;
    for (const auto& v : j.at("vertices")) verts.push_back({v.at(0), v.at(1)});
    return DomainSpec::polygon(std::move(verts));
  }
  if (variant == "collar")
    return DomainSpec::collar(domain_from_json(j.at("base")), j.at("width").get<double>());
  throw ConfigError("unknown domain variant: " + variant);
}

inline ordered_json problem_to_json(const ProblemSpec& pr) {
  ordered_json j;
  j["N"] = pr.N;
  j["p"] = pr.p;
  j["lambda"] = pr.lambda;
  j["weight"] = pr.weight == Weight::OriginPower     ? "origin_power"
                : pr.weight == Weight::BoundaryDistance ? "boundary_distance"
                                                        : "none";
  if (pr.reference_constant) j["reference_constant"] = *pr.reference_constant;
  return j;
}

inline ProblemSpec problem_from_json(const nlohmann::json& j) {
  ProblemSpec pr;
  pr.N = j.value("N", 2);
  pr.p = j.value("p", 2.0);
  pr.lambda = j.value("lambda", 0.0);
  const std::string w = j.value("weight", "origin_power");
  if (w == "origin_power")
    pr.weight = Weight::OriginPower;
  else if (w == "boundary_distance")
    pr.weight = Weight::BoundaryDistance;
  else if (w == "none")
    pr.weight = Weight::None;
  else
    throw ConfigError("unknown weight: " + w);
  if (j.contains("reference_constant")) pr.reference_constant = j["reference_constant"];
  return pr;
}

inline SolveOptions options_from_json(const nlohmann::json& j, std::uint64_t default_seed) {
  SolveOptions o;
  o.levels = j.value("levels", 3);
  o.tol = j.value("tol", 1e-12);
  o.max_iter = j.value("max_iter", 4000);
  o.seed = j.value("seed", default_seed);
  o.grading = j.value("grading", -1.0);
  o.depth = j.value("depth", -1.0);
  o.base_n = j.value("base_n", 0);
  return o;
}

inline ordered_json options_to_json(const SolveOptions& o) {
  ordered_json j;
  j["levels"] = o.levels;
  j["tol"] = o.tol;
  j["max_iter"] = o.max_iter;
  j["seed"] = o.seed;
  j["grading"] = o.grading;
  j["depth"] = o.depth;
  j["base_n"] = o.base_n;
  return j;
}

inline ordered_json solve_result_to_json(const SolveResult& r) {
  ordered_json j;
  j["value"] = r.value;
  j["level_values"] = r.level_values;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["extrapolated"] = r.extrapolated;
  j["estimated_order"] = r.order;
  j["excess"] = r.excess;
  j["lambda1_hat"] = r.lambda1_hat;
  j["concentration"] = r.concentration;
  ordered_json extras;
  for (const auto& [k, v] : r.extras) extras[k] = v;
  j["extras"] = extras;
  j["notes"] = r.notes;
  return j;
}

inline ordered_json margin_report_to_json(const MarginReport& m) {
  ordered_json j;
  j["check"] = m.check;
  ordered_json params;
  for (const auto& [k, v] : m.parameters) params[k] = v;
  j["parameters"] = params;
  j["samples"] = m.samples;
  j["min_margin"] = m.min_margin;
  j["argmin_sample"] = m.argmin_sample;
  j["seed"] = m.seed;
  j["scale"] = m.scale;
  j["pass"] = m.pass;
  j["notes"] = m.notes;
  return j;
}

inline ordered_json study_report_to_json(const StudyReport& s) {
  ordered_json j;
  j["level_values"] = s.level_values;
  j["extrapolation_valid"] = s.extrapolation_valid;
  j["extrapolated"] = s.extrapolated;
  j["estimated_order"] = s.estimated_order;
  j["target"] = s.target;
  j["tolerance"] = s.tolerance;
  j["monotone_toward_target"] = s.monotone_toward_target;
  j["pass"] = s.pass;
  j["notes"] = s.notes;
  return j;
}

inline ordered_json sweep_result_to_json(const SweepResult& s) {
  ordered_json j;
  j["parameter_name"] = s.parameter_name;
  ordered_json rows = ordered_json::array();
  for (const SweepRow& r : s.rows) {
    ordered_json row;
    row["parameter"] = r.parameter;
    row["value"] = r.value;
    row["converged"] = r.converged;
    row["iterations"] = r.iterations;
    row["level"] = r.level;
    row["mass_near_singularity"] = r.mass_near_singularity;
    rows.push_back(row);
  }
  j["rows"] = rows;
  j["reference"] = s.reference;
  j["bound"] = s.bound;
  j["monotone_ok"] = s.monotone_ok;
  j["bound_ok"] = s.bound_ok;
  j["notes"] = s.notes;
  return j;
}

inline ordered_json bisect_result_to_json(const BisectResult& b) {
  ordered_json j;
  j["threshold"] = b.threshold;
  j["lo"] = b.lo;
  j["hi"] = b.hi;
  j["gap"] = b.gap;
  j["reference"] = b.reference;
  j["mu0"] = b.mu0;
  j["excess"] = b.excess;
  j["bracket_tolerance"] = b.bracket_tolerance;
  ordered_json probes = ordered_json::array();
  for (const auto& [lam, mu] : b.probes) probes.push_back({lam, mu});
  j["probes"] = probes;
  j["iterations"] = b.iterations;
  return j;
}

inline ordered_json sector_result_to_json(const SectorSearchResult& s) {
  ordered_json j;
  j["delta"] = s.delta;
  j["truncations"] = s.truncations;
  j["values"] = s.values;
  j["certified"] = s.certified;
  j["argmin_truncation"] = s.argmin_truncation;
  return j;
}

// Fixed-column CSV for sweep tables; numbers carry full precision.
inline std::string sweep_to_csv(const SweepResult& s) {
  std::string out = "parameter,value,converged,iterations,level,mass_near_singularity\n";
  for (const SweepRow& r : s.rows) {
    out += fmt_g17(r.parameter) + "," + fmt_g17(r.value) + "," +
           (r.converged ? "true" : "false") + "," + std::to_string(r.iterations) + "," +
           std::to_string(r.level) + "," + fmt_g17(r.mass_near_singularity) + "\n";
  }
  return out;
}

inline std::string study_to_csv(const StudyReport& s) {
  std::string out = "parameter,value,converged,iterations,level,mass_near_singularity\n";
  for (std::size_t i = 0; i < s.level_values.size(); ++i) {
    out += std::to_string(i) + "," + fmt_g17(s.level_values[i]) + ",true,0," +
           std::to_string(i) + ",0\n";
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write output file: " + path);
  f << text;
}

// Envelope shared by every report: schema tag, config hash, module versions,
// seed, then the command-specific payload. Deliberately no timestamps so
// identical runs serialize identically.
inline ordered_json report_envelope(const std::string& command, const nlohmann::json& config,
                                    std::uint64_t seed) {
  ordered_json j;
  j["schema"] = "hardylab-report-v1";
  j["command"] = command;
  j["config_hash"] = hex64(config_hash(config));
  ordered_json versions;
  for (const auto& [k, v] : module_versions()) versions[k] = v;
  j["versions"] = versions;
  j["seed"] = seed;
  return j;
}

}  // namespace hardylab
