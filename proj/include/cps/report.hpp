#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cps/bench.hpp"
#include "cps/solver.hpp"

namespace cps {

using Json = nlohmann::ordered_json;

/// JSON has no infinities: +inf, -inf and NaN become strings.
inline Json json_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline Json json_numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(json_number(x));
  return a;
}

inline Json json_metrics(const std::map<std::string, double>& m) {
  Json o = Json::object();
  for (const auto& [k, v] : m) o[k] = json_number(v);
  return o;
}

/// Common solve fields in fixed order.
inline Json solve_fields(const std::string& problem, const PenaltyConfig& pen, const SolveResult& r,
                         const SolverConfig& cfg) {
  Json j;
  j["problem"] = problem;
  j["penalty"] = std::string(to_string(pen.kind));
  j["gamma"] = json_number(pen.kind == PenaltyKind::cauchy ? r.gamma : 0.0);
  j["weight"] = json_number(pen.kind == PenaltyKind::cauchy ? 0.0 : pen.weight);
  j["mu"] = json_number(r.mu);
  j["eps"] = json_number(cfg.eps);
  j["max_iter"] = cfg.max_iter;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["cost_trace"] = json_numbers(r.cost_trace);
  j["lipschitz"] = json_number(r.lipschitz);
  j["opnorm_sq"] = json_number(r.opnorm_sq);
  j["warnings"] = r.warnings;
  return j;
}

inline Json record_json(const BenchRecord& r) {
  Json j;
  j["problem"] = r.problem;
  j["case"] = r.case_name;
  j["penalty"] = r.method;
  j["weight"] = json_number(r.weight);
  j["gamma"] = json_number(r.gamma);
  j["mu"] = json_number(r.mu);
  j["eps"] = json_number(r.eps);
  j["max_iter"] = r.max_iter;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["cost_trace"] = json_numbers(r.cost_trace);
  j["metrics"] = json_metrics(r.metrics);
  j["seed"] = r.seed;
  j["wall_ms"] = r.wall_ms;
  return j;
}

inline Json bench_config_json(const BenchConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["superres"] = {{"size", c.sr.size},         {"phantoms", c.sr.phantoms},   {"scatterers", c.sr.scatterers},
                   {"background", c.sr.background}, {"factor", c.sr.factor},   {"psf_size", c.sr.psf_size},
                   {"psf_std", c.sr.psf_std},   {"bsnr_db", c.sr.bsnr_db},     {"max_iter", c.sr.max_iter},
                   {"eps", c.sr.eps},           {"weights", c.sr.weights}};
  j["despeckle"] = {{"size", c.despeckle.size},         {"phantoms", c.despeckle.phantoms},
                    {"looks", c.despeckle.looks},       {"levels", c.despeckle.levels},
                    {"max_iter", c.despeckle.max_iter}, {"eps", c.despeckle.eps},
                    {"weights", c.despeckle.weights}};
  j["form"] = {{"size", c.form.size},         {"scatterers", c.form.scatterers}, {"background", c.form.background},
               {"sampling", c.form.sampling}, {"snr_db", c.form.snr_db},         {"seeds", c.form.seeds},
               {"max_iter", c.form.max_iter}, {"eps", c.form.eps},               {"weights", c.form.weights}};
  j["wake"] = {{"size", c.wake.size},
               {"angles", c.wake.angles},
               {"scenes", c.wake.scenes},
               {"contrast", {c.wake.contrast_lo, c.wake.contrast_hi}},
               {"offset_jitter", c.wake.offset_jitter},
               {"arm_probability", c.wake.arm_probability},
               {"max_iter", c.wake.max_iter},
               {"eps", c.wake.eps},
               {"narrow_window", c.wake.detect.narrow_window},
               {"kelvin_window", {c.wake.detect.kelvin_lo, c.wake.detect.kelvin_hi}},
               {"tau", c.wake.detect.tau},
               {"offset_window", c.wake.detect.offset_window},
               {"false_alarm", c.wake.detect.false_alarm}};
  return j;
}

inline Json bench_json(const BenchConfig& c, const BenchResult& r, double wall_ms) {
  Json j;
  j["problem"] = "bench";
  j["seed"] = c.seed;
  j["config"] = bench_config_json(c);
  j["policy_checks"] = r.policy_checks;
  j["records"] = Json::array();
  for (const auto& rec : r.records) j["records"].push_back(record_json(rec));
  j["wall_ms"] = wall_ms;
  return j;
}

/// Copy without any "wall_ms" field, for comparing reruns.
inline Json strip_timing(const Json& j) {
  if (j.is_object()) {
    Json o = Json::object();
    for (const auto& [k, v] : j.items())
      if (k != "wall_ms") o[k] = strip_timing(v);
    return o;
  }
  if (j.is_array()) {
    Json a = Json::array();
    for (const auto& v : j) a.push_back(strip_timing(v));
    return a;
  }
  return j;
}

} // namespace cps
