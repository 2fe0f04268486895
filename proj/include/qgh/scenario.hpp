#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "qgh/report.hpp"

namespace qgh {

/// One job of a scenario. Fields not used by a type stay at their defaults.
struct Job {
  std::string type;  // example, radius, dist, audit, mult, family
  std::string a, b;  // example names (example, radius, mult use a)
  std::string map;   // comparison map kind, empty = default for the pair
  std::string R = "plain";  // "plain", "max" or a number
  double eps_net = 0.0;
  int budget = 0;
  std::string family;
  std::vector<double> eps_schedule;
  bool study = false;
};

struct Scenario {
  std::uint64_t seed = 0;
  double eps_net = 0.3;
  int budget = 128;
  SphereGrid grid;
  std::vector<std::pair<std::string, ExampleDescriptor>> examples;  // declaration order
  std::vector<Job> jobs;
  bool audit_warn_only = false;
  std::string json_out, csv_out;
  Json echo;  // the parsed input

  const ExampleDescriptor* find(const std::string& name) const {
    for (const auto& [n, d] : examples)
      if (n == name) return &d;
    return nullptr;
  }
};

namespace detail {

inline int line_of(const std::string& text, size_t byte) {
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(std::min(byte, text.size())), '\n'));
}

template <class T>
T field(const Json& j, const std::string& key, const std::string& where, T fallback, bool required = false) {
  if (!j.contains(key)) {
    if (required) throw ParseError("missing required field", 0, where + "/" + key);
    return fallback;
  }
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ParseError("wrong type", 0, where + "/" + key);
  }
}

inline void check_keys(const Json& j, const std::vector<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ParseError("expected an object", 0, where.empty() ? "/" : where);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ParseError("unknown field", 0, where + "/" + it.key());
}

}  // namespace detail

/// Parses scenario JSON text. Syntax errors carry the line, semantic ones the
/// JSON pointer of the offending field.
inline Scenario parse_scenario(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), detail::line_of(text, e.byte));
  }
  detail::check_keys(j, {"seed", "eps_net", "budget", "grid", "examples", "jobs", "audit", "outputs"}, "");
  Scenario s;
  s.echo = j;
  if (!j.contains("seed")) throw ParseError("missing required field", 0, "/seed");
  if (!j.at("seed").is_number_unsigned()) throw ParseError("seed must be a nonnegative integer", 0, "/seed");
  s.seed = j.at("seed").get<std::uint64_t>();
  s.eps_net = detail::field<double>(j, "eps_net", "", s.eps_net);
  s.budget = detail::field<int>(j, "budget", "", s.budget);
  if (!(s.eps_net > 0.0)) throw ParseError("must be positive", 0, "/eps_net");
  if (s.budget < 1) throw ParseError("must be positive", 0, "/budget");
  if (j.contains("grid")) {
    try {
      s.grid = SphereGrid::parse(detail::field<std::string>(j, "grid", "", ""));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), 0, "/grid");
    }
  }
  const std::string mode = detail::field<std::string>(j, "audit", "", "fail");
  if (mode != "fail" && mode != "warn") throw ParseError("audit must be \"fail\" or \"warn\"", 0, "/audit");
  s.audit_warn_only = mode == "warn";
  if (j.contains("outputs")) {
    const Json& o = j.at("outputs");
    detail::check_keys(o, {"json", "csv"}, "/outputs");
    s.json_out = detail::field<std::string>(o, "json", "/outputs", "");
    s.csv_out = detail::field<std::string>(o, "csv", "/outputs", "");
  }
  if (j.contains("examples")) {
    const Json& ex = j.at("examples");
    if (!ex.is_object()) throw ParseError("expected an object", 0, "/examples");
    for (auto it = ex.begin(); it != ex.end(); ++it) {
      const std::string where = "/examples/" + it.key();
      std::string desc;
      SphereGrid grid = s.grid;
      if (it.value().is_string()) {
        desc = it.value().get<std::string>();
      } else {
        detail::check_keys(it.value(), {"descriptor", "grid"}, where);
        desc = detail::field<std::string>(it.value(), "descriptor", where, "", true);
        if (it.value().contains("grid")) {
          try {
            grid = SphereGrid::parse(detail::field<std::string>(it.value(), "grid", where, ""));
          } catch (const ParseError& e) {
            throw ParseError(e.what(), 0, where + "/grid");
          }
        }
      }
      try {
        ExampleDescriptor d = ExampleDescriptor::parse(desc, grid);
        d.seed = s.seed;
        s.examples.emplace_back(it.key(), d);
      } catch (const ParseError& e) {
        throw ParseError(e.what(), 0, where);
      }
    }
  }
  if (j.contains("jobs")) {
    const Json& js = j.at("jobs");
    if (!js.is_array()) throw ParseError("expected an array", 0, "/jobs");
    for (size_t i = 0; i < js.size(); ++i) {
      const std::string where = "/jobs/" + std::to_string(i);
      const Json& jj = js[i];
      detail::check_keys(jj, {"type", "a", "b", "example", "map", "R", "eps_net", "budget", "family", "eps_schedule", "study"},
                         where);
      Job job;
      job.type = detail::field<std::string>(jj, "type", where, "", true);
      auto need_example = [&](const std::string& key) {
        const std::string name = detail::field<std::string>(jj, key, where, "", true);
        if (!s.find(name)) throw ParseError("unknown example '" + name + "'", 0, where + "/" + key);
        return name;
      };
      if (job.type == "example" || job.type == "radius" || job.type == "mult") {
        job.a = need_example("example");
      } else if (job.type == "dist" || job.type == "audit") {
        job.a = need_example("a");
        job.b = need_example("b");
        job.map = detail::field<std::string>(jj, "map", where, "");
        if (jj.contains("R")) {
          const Json& r = jj.at("R");
          if (r.is_number()) {
            if (!(r.get<double>() > 0.0)) throw ParseError("R must be positive", 0, where + "/R");
            job.R = format_double(r.get<double>());
          } else if (r.is_string() && (r == "plain" || r == "max")) {
            job.R = r.get<std::string>();
          } else {
            throw ParseError("R must be a number, \"plain\" or \"max\"", 0, where + "/R");
          }
        }
      } else if (job.type == "family") {
        job.family = detail::field<std::string>(jj, "family", where, "", true);
        const auto names = bundled_family_names();
        if (std::find(names.begin(), names.end(), job.family) == names.end())
          throw ParseError("unknown family '" + job.family + "'", 0, where + "/family");
        job.eps_schedule = detail::field<std::vector<double>>(jj, "eps_schedule", where, {});
        job.study = detail::field<bool>(jj, "study", where, false);
      } else {
        throw ParseError("unknown job type '" + job.type + "'", 0, where + "/type");
      }
      job.eps_net = detail::field<double>(jj, "eps_net", where, s.eps_net);
      job.budget = detail::field<int>(jj, "budget", where, s.budget);
      if (!(job.eps_net > 0.0) || job.budget < 1) throw ParseError("eps_net and budget must be positive", 0, where);
      s.jobs.push_back(job);
    }
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot read scenario " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_scenario(ss.str());
}

struct RunResult {
  Json report;
  int failed_jobs = 0;
  int failed_audits = 0;
  std::vector<std::pair<std::string, std::string>> csv_tables;  // suffix, text
};

namespace detail {

class ExampleCache {
 public:
  explicit ExampleCache(const Scenario& s) : s_(s) {}
  const Cqms& get(const std::string& name) {
    auto it = built_.find(name);
    if (it == built_.end()) it = built_.emplace(name, std::make_unique<Cqms>(build_example(*s_.find(name)))).first;
    return *it->second;
  }

 private:
  const Scenario& s_;
  std::map<std::string, std::unique_ptr<Cqms>> built_;
};

inline Json example_summary(const Cqms& q) {
  const RadiusEstimate r = radius(q);
  Json j = {{"name", q.name()},
            {"family", q.meta().family},
            {"dimension", q.size()},
            {"matrix_dim", q.space().matrix_dim()},
            {"group_size", q.group().size()},
            {"ergodic", ergodicity_check(q.action(), q.space())},
            {"radius", to_json(r)}};
  if (q.meta().family == "sphere") {
    const auto& p = q.meta().params;
    j["grid"] = SphereGrid{static_cast<int>(p.at("na")), static_cast<int>(p.at("nb")), static_cast<int>(p.at("ng"))}.str();
  }
  return j;
}

inline Json mult_table(const Cqms& q) {
  Json rows = Json::array();
  for (const auto& c : characters_for(q)) {
    const MultiplicityResult r = multiplicity_raw(q.action(), c, &q.space());
    rows.push_back({{"character", c.label}, {"value", r.value}, {"raw", r.raw}, {"deviation", r.deviation}});
  }
  return rows;
}

inline DistOqOptions dist_options(const Scenario& s, const Job& job, double ra, double rb) {
  DistOqOptions o;
  o.eps_net = job.eps_net;
  o.budget = job.budget;
  o.seed = s.seed;
  if (job.R == "plain") o.R = 0.0;
  else if (job.R == "max") o.R = std::max(ra, rb);
  else o.R = std::stod(job.R);
  return o;
}

}  // namespace detail

/// Executes the jobs in order. A job that throws is recorded and the run
/// continues.
inline RunResult run_scenario(const Scenario& s) {
  RunResult out;
  detail::ExampleCache cache(s);
  Json jobs = Json::array();
  Json dist_rows = Json::array();
  for (size_t i = 0; i < s.jobs.size(); ++i) {
    const Job& job = s.jobs[i];
    Json entry = {{"index", i}, {"type", job.type}};
    try {
      Json res;
      if (job.type == "example") {
        res = detail::example_summary(cache.get(job.a));
      } else if (job.type == "radius") {
        const Cqms& q = cache.get(job.a);
        res = to_json(radius(q));
        res["example"] = q.name();
      } else if (job.type == "mult") {
        const Cqms& q = cache.get(job.a);
        res = {{"example", q.name()}, {"characters", detail::mult_table(q)}};
      } else if (job.type == "dist") {
        const Cqms& A = cache.get(job.a);
        const Cqms& B = cache.get(job.b);
        const DistOqOptions o = detail::dist_options(s, job, radius(A).value, radius(B).value);
        const std::string kind = job.map.empty() ? default_map_kind(A, B) : job.map;
        const ComparisonMap phi = make_comparison(kind, A, B, o.R > 0.0 ? o.R : radius(A).value);
        const DistOqReport up = dist_oq_upper(A, B, phi, o);
        const DistOqLowerReport lo = dist_oq_lower(A, B, o);
        res = {{"map", to_json(phi)}, {"upper", to_json(up)}, {"lower", to_json(lo)}, {"eps_net", o.eps_net},
               {"budget", o.budget}};
        dist_rows.push_back({{"a", A.name()},
                             {"b", B.name()},
                             {"variant", up.variant},
                             {"value", up.value},
                             {"upper", up.upper},
                             {"lower", lo.value},
                             {"slack", up.slack}});
      } else if (job.type == "audit") {
        const Cqms& A = cache.get(job.a);
        const Cqms& B = cache.get(job.b);
        const DistOqOptions o = detail::dist_options(s, job, radius(A).value, radius(B).value);
        const std::string kind = job.map.empty() ? default_map_kind(A, B) : job.map;
        const ComparisonMap phi =
            make_comparison(kind, A, B, std::max(radius(A).value, radius(B).value));
        AuditInput in;
        const AuditRecord rec = audit_pair(A, B, phi, o, &in);
        res = {{"map", to_json(phi)},
               {"upper_oq", to_json(in.upper_oq)},
               {"lower_oq", to_json(in.lower_oq)},
               {"upper_oqR", to_json(in.upper_oqR)},
               {"lower_oqR", to_json(in.lower_oqR)},
               {"audit", to_json(rec)}};
        if (!rec.all_pass()) ++out.failed_audits;
      } else if (job.type == "family") {
        BundledFamily b = bundled_family(job.family, s.grid);
        if (!job.eps_schedule.empty()) b.eps_schedule = job.eps_schedule;
        const ParamFamily& fam = *b.family;
        const double R = fam.max_radius();
        const CriterionSchedule crit = criterion_iii_schedule(fam, b.eps_schedule, R);
        const MultiplicityProfile mul = multiplicity_profile(fam, family_characters(fam));
        Json tables = Json::array();
        for (const auto& t : crit.tables) tables.push_back(to_json(t));
        const bool agree = crit.pass() == mul.locally_constant;
        res = {{"family", job.family},
               {"params", fam.params()},
               {"t0", fam.param(fam.t0())},
               {"R", R},
               {"criterion_iii", tables},
               {"multiplicity", to_json(mul)},
               {"agreement", {{"criterion_iii", crit.pass()}, {"multiplicity_constant", mul.locally_constant},
                              {"agree", agree}}}};
        if (!agree) ++out.failed_audits;
        if (job.study) {
          DistOqOptions o;
          o.eps_net = job.eps_net;
          o.budget = job.budget;
          o.seed = s.seed;
          const TrendTable tt = convergence_study(fam, "", o, &mul);
          res["study"] = to_json(tt);
          out.csv_tables.emplace_back("job" + std::to_string(i) + "_trend", render_csv(res["study"]["rows"], {"t", "upper", "lower", "slack"}));
        }
      }
      entry["status"] = "ok";
      entry["result"] = res;
    } catch (const std::exception& e) {
      entry["status"] = "error";
      entry["error"] = e.what();
      ++out.failed_jobs;
    }
    jobs.push_back(entry);
  }
  if (!dist_rows.empty())
    out.csv_tables.emplace_back("dist", render_csv(dist_rows, {"a", "b", "variant", "value", "upper", "lower", "slack"}));
  out.report = {{"environment", environment_stamp()},
                {"config", s.echo},
                {"jobs", jobs},
                {"summary", {{"jobs", s.jobs.size()}, {"failed_jobs", out.failed_jobs},
                             {"failed_audits", out.failed_audits}}}};
  if (!dist_rows.empty()) out.report["dist_table"] = dist_rows;
  return out;
}

/// Writes the report: json to path, or csv tables to path.<suffix>.csv.
inline std::vector<std::string> report_render(const RunResult& r, const std::string& format, const std::string& path) {
  std::vector<std::string> written;
  if (format == "json") {
    write_file(path, render_json(r.report));
    written.push_back(path);
  } else if (format == "csv") {
    for (const auto& [suffix, text] : r.csv_tables) {
      const std::string p = path + "." + suffix + ".csv";
      write_file(p, text);
      written.push_back(p);
    }
  } else {
    throw DomainError("unknown format '" + format + "' (json or csv)");
  }
  return written;
}

}  // namespace qgh
