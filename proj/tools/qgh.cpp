// qgh: command-line front end. Every subcommand is a one-job scenario, so
// they share the runner and the report format with `run`.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qgh/qgh.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitAudit = 3;

struct Common {
  std::uint64_t seed = 11;
  double eps_net = 0.3;
  int budget = 128;
  std::string grid = "12x12x12";
  std::string out;
  std::string format = "json";
  bool warn_only = false;
};

int emit(const qgh::RunResult& r, const Common& c, bool warn_only) {
  if (c.out.empty()) {
    if (c.format != "json") throw qgh::DomainError("--format csv needs --out");
    std::cout << qgh::render_json(r.report);
  } else {
    for (const auto& p : qgh::report_render(r, c.format, c.out)) std::cerr << "wrote " << p << "\n";
  }
  if (r.failed_jobs > 0) std::cerr << r.failed_jobs << " job(s) failed\n";
  if (r.failed_audits > 0) {
    std::cerr << r.failed_audits << " audit(s) failed\n";
    if (!warn_only) return kExitAudit;
  }
  return kExitOk;
}

qgh::Json base(const Common& c) {
  return {{"seed", c.seed}, {"eps_net", c.eps_net}, {"budget", c.budget}, {"grid", c.grid}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for compact quantum metric spaces"};
  app.require_subcommand(1);
  app.fallthrough();
  Common c;
  app.add_option("--seed", c.seed, "RNG seed")->capture_default_str();
  app.add_option("--eps-net", c.eps_net, "ball net resolution")->capture_default_str();
  app.add_option("--budget", c.budget, "max points per ball net")->capture_default_str();
  app.add_option("--grid", c.grid, "SO(3) Euler grid for spheres, AxBxC")->capture_default_str();
  app.add_option("--out", c.out, "output path (stdout when empty)");
  app.add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  app.add_flag("--warn-only", c.warn_only, "failed audits do not change the exit code");

  std::string ex_a, ex_b, map_kind, r_opt = "plain", family, scenario_path;
  bool study = false;
  std::vector<double> eps_schedule;

  auto* example = app.add_subcommand("example", "summary of one example (cycle:m, torus:q:p, sphere:2j, scalar:q)");
  example->add_option("example", ex_a)->required();
  auto* rad = app.add_subcommand("radius", "radius estimate");
  rad->add_option("example", ex_a)->required();
  auto* mult = app.add_subcommand("mult", "character multiplicities");
  mult->add_option("example", ex_a)->required();
  auto* dist = app.add_subcommand("dist", "upper and lower dist_oq estimates");
  auto* audit = app.add_subcommand("audit", "inequality audit for a pair");
  for (auto* sc : {dist, audit}) {
    sc->add_option("a", ex_a)->required();
    sc->add_option("b", ex_b)->required();
    sc->add_option("--map", map_kind, "identity, refine, frequency, berezin, spin, scalar");
    sc->add_option("--R", r_opt, "plain, max or a number")->capture_default_str();
  }
  auto* fam = app.add_subcommand("family", "criterion (iii), multiplicities and optional convergence study");
  fam->add_option("family", family)->required()->check(CLI::IsMember(qgh::bundled_family_names()));
  fam->add_flag("--study", study, "add the dist_oq trend table");
  fam->add_option("--eps", eps_schedule, "override the eps schedule");
  auto* run = app.add_subcommand("run", "run a scenario file");
  run->add_option("scenario", scenario_path)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitParse;
  }

  try {
    qgh::Scenario s;
    if (*run) {
      s = qgh::load_scenario(scenario_path);
      if (c.out.empty() && !s.json_out.empty()) c.out = s.json_out;
      const qgh::RunResult r = qgh::run_scenario(s);
      if (!s.csv_out.empty()) qgh::report_render(r, "csv", s.csv_out);
      return emit(r, c, c.warn_only || s.audit_warn_only);
    }
    qgh::Json j = base(c);
    qgh::Json job;
    if (*example || *rad || *mult) {
      j["examples"] = {{"a", ex_a}};
      job = {{"type", *example ? "example" : *rad ? "radius" : "mult"}, {"example", "a"}};
    } else if (*dist || *audit) {
      j["examples"] = {{"a", ex_a}, {"b", ex_b}};
      job = {{"type", *dist ? "dist" : "audit"}, {"a", "a"}, {"b", "b"}};
      if (!map_kind.empty()) job["map"] = map_kind;
      if (r_opt == "plain" || r_opt == "max") {
        job["R"] = r_opt;
      } else {
        try {
          job["R"] = std::stod(r_opt);
        } catch (const std::exception&) {
          throw qgh::ParseError("--R must be plain, max or a number");
        }
      }
    } else if (*fam) {
      job = {{"type", "family"}, {"family", family}, {"study", study}};
      if (!eps_schedule.empty()) job["eps_schedule"] = eps_schedule;
    }
    j["jobs"] = qgh::Json::array({job});
    s = qgh::parse_scenario(j.dump());
    return emit(qgh::run_scenario(s), c, c.warn_only);
  } catch (const qgh::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
