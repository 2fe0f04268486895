#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qgh/qgh.hpp"

using namespace qgh;

namespace {

struct Proc {
  int code = 0;
  std::string out;
};

Proc run_cli(const std::string& args) {
  const std::string cmd = std::string(QGH_CLI_PATH) + " " + args + " 2>&1";
  Proc p;
  FILE* f = popen(cmd.c_str(), "r");
  if (!f) return {-1, ""};
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), f)) > 0) p.out.append(buf.data(), n);
  const int st = pclose(f);
  p.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return p;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string tmp(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("qgh_cli_" + name)).string();
}

}  // namespace

TEST(Scenario, EmptyScenarioGivesEnvironmentOnly) {
  const Scenario s = parse_scenario(R"({"seed": 1})");
  const RunResult r = run_scenario(s);
  EXPECT_TRUE(r.report.contains("environment"));
  EXPECT_EQ(r.report.at("environment").at("library"), "qgh 0.1");
  EXPECT_TRUE(r.report.at("jobs").empty());
  EXPECT_EQ(r.failed_jobs, 0);
  EXPECT_EQ(r.failed_audits, 0);
}

TEST(Scenario, InvalidExampleNamesIt) {
  try {
    parse_scenario(R"({"seed": 1, "examples": {"x": "torus:0:1"}})");
    FAIL() << "no throw";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "/examples/x");
  }
  try {
    parse_scenario(R"({"seed": 1, "examples": {"x": "cycle:4"}, "jobs": [{"type": "radius", "example": "y"}]})");
    FAIL() << "no throw";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "/jobs/0/example");
    EXPECT_NE(std::string(e.what()).find("'y'"), std::string::npos);
  }
}

TEST(Scenario, MalformedJsonReportsLine) {
  try {
    parse_scenario("{\n  \"seed\": 1,\n  \"jobs\": [,]\n}");
    FAIL() << "no throw";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(Scenario, SemanticRejections) {
  EXPECT_THROW(parse_scenario(R"({"eps_net": 0.3})"), ParseError);
  EXPECT_THROW(parse_scenario(R"({"seed": -1})"), ParseError);
  EXPECT_THROW(parse_scenario(R"({"seed": 1, "budget": 0})"), ParseError);
  EXPECT_THROW(parse_scenario(R"({"seed": 1, "extra": 0})"), ParseError);
  EXPECT_THROW(parse_scenario(R"({"seed": 1, "audit": "maybe"})"), ParseError);
  EXPECT_THROW(parse_scenario(R"({"seed": 1, "jobs": [{"type": "family", "family": "nope"}]})"), ParseError);
  EXPECT_THROW(parse_scenario(R"({"seed": 1, "jobs": [{"type": "bogus"}]})"), ParseError);
  EXPECT_THROW(parse_scenario(R"({"seed": 1, "examples": {"a": "cycle:4"},
                                  "jobs": [{"type": "dist", "a": "a", "b": "a", "R": -1}]})"),
               ParseError);
}

TEST(Scenario, FailedJobIsRecordedAndRunContinues) {
  const Scenario s = parse_scenario(R"({"seed": 1, "examples": {"a": "cycle:4", "b": "torus:3:1"},
      "jobs": [{"type": "dist", "a": "a", "b": "b", "map": "refine"}, {"type": "radius", "example": "a"}]})");
  const RunResult r = run_scenario(s);
  EXPECT_EQ(r.failed_jobs, 1);
  EXPECT_EQ(r.report.at("jobs")[0].at("status"), "error");
  EXPECT_EQ(r.report.at("jobs")[1].at("status"), "ok");
}

TEST(Report, DeterministicAndJsonRoundTrip) {
  const Scenario s = parse_scenario(R"({"seed": 3, "examples": {"a": "cycle:6", "b": "cycle:12"},
      "jobs": [{"type": "radius", "example": "a"}, {"type": "dist", "a": "a", "b": "b", "map": "refine"}]})");
  const std::string t1 = render_json(run_scenario(s).report);
  const std::string t2 = render_json(run_scenario(s).report);
  EXPECT_EQ(t1, t2);
  const Json back = Json::parse(t1);
  EXPECT_EQ(render_json(back), t1);
  EXPECT_EQ(back.at("config").at("seed"), 3);
  EXPECT_EQ(back.at("dist_table").size(), 1u);
}

TEST(Report, FixedFloatFormat) {
  EXPECT_EQ(format_double(1.0 / 3.0), "3.333333333e-01");
  EXPECT_EQ(format_double(-7.0), "-7.000000000e+00");
  EXPECT_EQ(format_double(0.0), "0.000000000e+00");
  for (double v : {0.1, 2.5e-12, 12345.678}) EXPECT_NEAR(std::stod(format_double(v)) / v, 1.0, 1e-9);
}

TEST(Report, TrendCsvColumns) {
  const Scenario s = parse_scenario(R"({"seed": 1, "jobs": [{"type": "family", "family": "degenerate", "study": true}]})");
  const RunResult r = run_scenario(s);
  ASSERT_EQ(r.csv_tables.size(), 1u);
  const std::string& csv = r.csv_tables[0].second;
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,upper,lower,slack");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Cli, RegressionRunIsByteIdentical) {
  const std::string a = tmp("a.json"), b = tmp("b.json");
  const std::string scen = std::string(QGH_SCENARIO_DIR) + "/regression.json";
  ASSERT_EQ(run_cli("run " + scen + " --out " + a).code, 0);
  ASSERT_EQ(run_cli("run " + scen + " --out " + b).code, 0);
  const std::string ta = slurp(a);
  EXPECT_FALSE(ta.empty());
  EXPECT_EQ(ta, slurp(b));
}

TEST(Cli, ParseErrorExitCode) {
  const std::string bad = tmp("bad.json");
  std::ofstream(bad) << "{\"seed\": 1, \"examples\": {\"z\": \"sphere:0\"}}";
  const Proc p = run_cli("run " + bad);
  EXPECT_EQ(p.code, 2);
  EXPECT_NE(p.out.find("/examples/z"), std::string::npos);
  EXPECT_EQ(run_cli("nosuchcommand").code, 2);
}

TEST(Cli, SubcommandsProduceJson) {
  const Proc p = run_cli("radius cycle:12");
  ASSERT_EQ(p.code, 0) << p.out;
  const Json j = Json::parse(p.out);
  EXPECT_EQ(j.at("jobs")[0].at("status"), "ok");
  EXPECT_NEAR(j.at("jobs")[0].at("result").at("value").get<double>(), M_PI / 2.0, 0.02);
  const Proc m = run_cli("mult torus:3:1");
  ASSERT_EQ(m.code, 0) << m.out;
  EXPECT_EQ(Json::parse(m.out).at("jobs")[0].at("result").at("characters").size(), 9u);
}

TEST(Cli, CsvNeedsOut) {
  EXPECT_NE(run_cli("radius cycle:4 --format csv").code, 0);
  const std::string base = tmp("d");
  const Proc p = run_cli("dist cycle:4 cycle:8 --map refine --format csv --out " + base);
  ASSERT_EQ(p.code, 0) << p.out;
  const std::string csv = slurp(base + ".dist.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "a,b,variant,value,upper,lower,slack");
}
