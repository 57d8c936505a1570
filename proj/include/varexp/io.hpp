#pragma once

// JSON serialisation of every report type. Non-finite numbers become null.

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "varexp/elliptic.hpp"
#include "varexp/fde.hpp"
#include "varexp/opkernel.hpp"
#include "varexp/picone.hpp"
#include "varexp/vxspace.hpp"

namespace varexp::io {

using Json = nlohmann::ordered_json;

inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json numbers(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

inline Json to_json(const InequalityReport& r) {
  return {{"name", r.name}, {"lhs", number(r.lhs)}, {"rhs", number(r.rhs)}, {"constant", number(r.constant)},
          {"holds", r.holds}};
}

inline Json to_json(const NormModularReport& r) {
  return {{"norm", number(r.norm)},   {"modular", number(r.modular)},
          {"lower", number(r.lower)}, {"upper", number(r.upper)},
          {"norm_at_least_one", r.norm_at_least_one}, {"holds", r.holds}};
}

inline Json to_json(const ProbeReport& r) {
  Json j = {{"name", r.name}, {"samples", r.samples}, {"max_violation", number(r.max_violation)},
            {"tol", number(r.tol)}, {"holds", r.holds}};
  if (r.name == "convexity") j["strict_gap_min"] = number(r.strict_gap_min);
  if (r.name == "lambda") j["estimate"] = number(r.estimate);
  return j;
}

/// Summary of a Picone report; per-cell gaps go to CSV instead.
inline Json to_json(const PiconeReport& r) {
  return {{"min_gap", number(r.min_gap)},
          {"violating_cells", r.violating_cells},
          {"equality_cells", static_cast<int>(r.equality_cells.size())},
          {"tol", number(r.tol)},
          {"c_h", number(r.c_h)},
          {"h", number(r.h)},
          {"verified_raw", r.verified_raw},
          {"verified", r.verified},
          {"strict_min_gap", number(r.strict_min_gap)},
          {"strict_cells", r.strict_cells}};
}

inline Json to_json(const DiazSaaReport& r) {
  return {{"integral", number(r.integral)}, {"scale", number(r.scale)}, {"tol", number(r.tol)}, {"holds", r.holds}};
}

inline Json to_json(const SolveReport& r, bool with_trace = false) {
  Json j = {{"iterations", r.iterations},
            {"final_energy", number(r.final_energy)},
            {"residual_sup", number(r.residual_sup)},
            {"tol", number(r.tol)},
            {"converged", r.converged},
            {"positivity", r.positivity},
            {"hopf_ok", r.hopf_ok},
            {"linf_bound_ok", r.linf_bound_ok ? Json(*r.linf_bound_ok) : Json(nullptr)},
            {"linf_bound", r.linf_bound ? number(*r.linf_bound) : Json(nullptr)},
            {"diagnostic", r.diagnostic}};
  if (with_trace) j["energy_trace"] = numbers(r.energy_trace);
  return j;
}

inline Json to_json(const PositivityReport& r) {
  return {{"min_interior", number(r.min_interior)}, {"positive", r.positive}, {"flux_a", number(r.flux_a)},
          {"flux_b", number(r.flux_b)}, {"slope_a", number(r.slope_a)}, {"slope_b", number(r.slope_b)},
          {"hopf", r.hopf}};
}

inline Json to_json(const JensenReport& r) {
  return {{"lhs", number(r.lhs)}, {"rhs", number(r.rhs)}, {"holds", r.holds}};
}

inline Json to_json(const ContractionReport& r) {
  return {{"lhs", numbers(r.lhs)},   {"rhs", numbers(r.rhs)},   {"max_violation", number(r.max_violation)},
          {"scale", number(r.scale)}, {"tol", number(r.tol)}, {"holds", r.holds}};
}

inline void write_json(const std::string& path, const Json& j) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << j.dump(2) << '\n';
}

inline void write_cell_csv(const std::string& path, const Grid& g, const std::vector<double>& values) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << "x,value\n";
  for (int i = 0; i < g.n_cells(); ++i) f << format_g17(g.center(i)) << ',' << format_g17(values[i]) << '\n';
}

}  // namespace varexp::io
