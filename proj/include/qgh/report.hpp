#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

#include "qgh/distoq.hpp"
#include "qgh/fields.hpp"

namespace qgh {

using Json = nlohmann::json;  // std::map objects, so keys come out sorted

inline std::string format_double(double v) {
  if (std::isnan(v)) return "\"nan\"";
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9e", v);
  return buf;
}

namespace detail {

inline void render(const Json& j, std::ostringstream& out, int indent, int level) {
  const std::string pad(static_cast<size_t>(indent * (level + 1)), ' ');
  const std::string close(static_cast<size_t>(indent * level), ' ');
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << "{" << nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out << "," << nl;
        first = false;
        out << pad << Json(it.key()).dump() << (indent > 0 ? ": " : ":");
        render(it.value(), out, indent, level + 1);
      }
      out << nl << close << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      out << "[" << nl;
      for (size_t i = 0; i < j.size(); ++i) {
        if (i) out << "," << nl;
        out << pad;
        render(j[i], out, indent, level + 1);
      }
      out << nl << close << "]";
      return;
    }
    case Json::value_t::number_float: out << format_double(j.get<double>()); return;
    default: out << j.dump(); return;
  }
}

}  // namespace detail

/// Sorted keys, %.9e floats, fixed indentation: equal input, equal bytes.
inline std::string render_json(const Json& j, int indent = 2) {
  std::ostringstream out;
  detail::render(j, out, indent, 0);
  out << "\n";
  return out.str();
}

inline std::string csv_field(const Json& v) {
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  return v.dump();
}

/// Array of flat objects to CSV with the given column order.
inline std::string render_csv(const Json& rows, const std::vector<std::string>& columns) {
  std::string out;
  for (size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + columns[c];
  out += "\n";
  for (const auto& r : rows) {
    for (size_t c = 0; c < columns.size(); ++c) {
      if (c) out += ",";
      if (r.contains(columns[c])) out += csv_field(r.at(columns[c]));
    }
    out += "\n";
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
  if (!f) throw Error("write failed: " + path);
}

/// Build facts only, so the stamp is stable between runs.
inline Json environment_stamp() {
  Json e;
#if defined(__clang__)
  e["compiler"] = "clang " __clang_version__;
#elif defined(__GNUC__)
  e["compiler"] = "gcc " __VERSION__;
#else
  e["compiler"] = "unknown";
#endif
  e["cxx"] = static_cast<long>(__cplusplus);
  e["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  e["library"] = "qgh 0.1";
  return e;
}

// --- per-result conversions -------------------------------------------------

inline Json to_json(const RadiusEstimate& r) {
  return {{"value", r.value}, {"cap", r.cap}, {"exceeds_cap", r.exceeds_cap}, {"method", r.method},
          {"solver_evaluations", r.solver_evaluations}};
}

inline Json to_json(const ComparisonMap& m) {
  return {{"kind", m.kind},           {"dim", m.dim()},
          {"distortion", m.distortion}, {"unit_in_domain", m.unit_in_domain},
          {"unit_defect", m.unit_defect}, {"probes", m.probes}};
}

inline Json to_json(const DistOqReport& r) {
  return {{"a", r.a_name},
          {"b", r.b_name},
          {"map", r.map_kind},
          {"variant", r.variant},
          {"R_A", r.R_A},
          {"R_B", r.R_B},
          {"radius_A", r.radius_A},
          {"radius_B", r.radius_B},
          {"distortion", r.distortion},
          {"eps", r.eps},
          {"unit_defect", r.unit_defect},
          {"hausdorff", r.hausdorff},
          {"unit_term", r.unit_term},
          {"value", r.value},
          {"slack", {{"certificate_A", r.certificate_A}, {"certificate_B", r.certificate_B}, {"total", r.slack}}},
          {"upper", r.upper},
          {"net_A", r.net_A},
          {"net_B", r.net_B},
          {"degraded", r.degraded}};
}

inline Json to_json(const DistOqLowerReport& r) {
  return {{"a", r.a_name},
          {"b", r.b_name},
          {"variant", r.variant},
          {"radius_gap", r.radius_gap},
          {"gh_subnet", r.gh_subnet},
          {"subnet_size", r.subnet_size},
          {"slack", {{"radius", r.radius_slack}, {"subnet", r.subnet_slack}}},
          {"value", r.value}};
}

inline Json to_json(const AuditRecord& a) {
  Json checks = Json::array();
  for (const auto& c : a.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"lhs", c.lhs}, {"rhs", c.rhs}});
  return {{"checks", checks}, {"all_pass", a.all_pass()}, {"dist_q_interval", {a.dist_q_low, a.dist_q_high}}};
}

inline Json to_json(const CriterionTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"t", r.t},
                    {"pass", r.pass},
                    {"worst_gap", r.worst_gap},
                    {"certificate", r.certificate},
                    {"net_size", r.net_size}});
  return {{"eps", t.eps}, {"R", t.R}, {"sections", t.sections}, {"rows", rows}, {"pass", t.all_pass()}};
}

inline Json to_json(const MultiplicityProfile& p) {
  Json table = Json::array();
  for (size_t t = 0; t < p.params.size(); ++t) {
    Json row;
    row["t"] = p.params[t];
    Json m;
    for (size_t g = 0; g < p.characters.size(); ++g) m[p.characters[g]] = p.mul[t][g];
    row["mul"] = m;
    table.push_back(row);
  }
  return {{"table", table},
          {"max_deviation", p.max_deviation},
          {"locally_constant", p.locally_constant},
          {"lower_semicontinuous", p.lower_semicontinuous}};
}

inline Json to_json(const TrendTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows) {
    Json row = {{"t", r.t}, {"map", r.map_kind}, {"upper", r.upper}, {"lower", r.lower}, {"slack", r.slack},
                {"degraded", r.degraded}};
    if (!r.error.empty()) row["error"] = r.error;
    rows.push_back(row);
  }
  return {{"rows", rows},
          {"decreasing", t.decreasing},
          {"lower_positive_off_t0", t.lower_positive_off_t0},
          {"predicted_convergence", t.predicted_convergence}};
}

}  // namespace qgh
