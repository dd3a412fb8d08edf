#include "doctest.h"
#include "heis/suites.hpp"
#include "heis/test_functions.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace heis;
namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* p = std::getenv("HEIS_CLI");
  return p ? p : "";
}

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stdout captured; stderr goes to <dir>/stderr.txt.
Run run(const std::string& args, const fs::path& dir, const std::string& env = "") {
  fs::create_directories(dir);
  const fs::path out = dir / "stdout.txt";
  const std::string cmd =
      env + " '" + cli() + "' " + args + " > '" + out.string() + "' 2> '" + (dir / "stderr.txt").string() + "'";
  const int st = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("heis_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

nlohmann::json fake_report(const std::string& suite, int version, bool pass) {
  return {{"schema_version", version},
          {"kind", "verify"},
          {"suite", suite},
          {"test_library", kTestLibraryVersion},
          {"assertions", {{{"name", "a"}, {"pass", pass}, {"detail", nullptr}}}},
          {"data", {{"constants", {{"C", 1.5}}}}}};
}

}  // namespace

TEST_CASE("config: sections, lists, validation") {
  const RunConfig c = parse_config(
      "[run]\nn = 1\nseed = 42 # inline\n[norm]\np = 2, 3.5\ndelta = -0.5\n[grid]\nres = 2, 4, 6\n[solve]\ntol = 1e-4\n");
  CHECK(c.seed == 42);
  CHECK(c.p == std::vector<double>{2.0, 3.5});
  CHECK(c.delta == std::vector<double>{-0.5});
  CHECK(c.res.nang == 6);
  CHECK(c.tol == 1e-4);
  CHECK_NOTHROW(c.validate());

  CHECK_THROWS_AS(parse_config("[run]\nbogus = 1\n"), config_error);
  CHECK_THROWS_AS(parse_config("n = 1\n"), config_error);
  CHECK_THROWS_AS(parse_config("[run]\nn = one\n"), config_error);
  CHECK_THROWS_AS(parse_config("[grid]\nres = 1, 2\n"), config_error);

  RunConfig bad;
  bad.solve_delta = 0.0;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("solve.delta"), config_error);
  bad = RunConfig{};
  bad.q = 3.0;  // q <= Q
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("norm.q"), config_error);
  bad = RunConfig{};
  bad.fredholm_p = 10.0;  // p > q = 2Q
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("fredholm.p"), config_error);
  bad = RunConfig{};
  bad.tau = 2.0;
  CHECK_THROWS_AS(bad.validate(), config_error);

  CHECK(env_name("solve.tol") == "HEIS_SOLVE_TOL");
  CHECK(env_name("grid.R_max") == "HEIS_GRID_R_MAX");
  RunConfig e;
  apply_env(e, {{"HEIS_RUN_SEED", "9"}, {"HEIS_NORM_DELTA", "-1,-1.5"}, {"OTHER", "x"}});
  CHECK(e.seed == 9);
  CHECK(e.delta == std::vector<double>{-1.0, -1.5});

  const auto keys = config_keys();
  CHECK(std::find(keys.begin(), keys.end(), "operator.A_p") != keys.end());
  CHECK(RunConfig{}.to_json()["run"]["seed"] == 1);
}

TEST_CASE("suites: deterministic payloads, unknown names") {
  RunConfig c;
  c.profile = "quick";
  for (const std::string name : {"group", "af", "clifford"}) {
    const SuiteResult a = run_suite(name, c), b = run_suite(name, c);
    CHECK(a.pass());
    CHECK(a.payload(c).dump() == b.payload(c).dump());
    CHECK(a.payload(c)["schema_version"] == kSchemaVersion);
  }
  CHECK_THROWS_AS(run_suite("nope", c), config_error);
  RunConfig bad = c;
  bad.n = 3;
  CHECK_THROWS_AS(run_suite("group", bad), config_error);

  // run_info stays out of the compared payload
  const auto p = run_suite("group", c).payload(c);
  CHECK(strip_run_info(with_run_info(p, 1.0)).dump() == p.dump());
  CHECK(with_run_info(p, 1.0).contains("run_info"));
}

TEST_CASE("inequality family") {
  const auto fam = inequality_family(1, 10, 3);
  REQUIRE(fam.size() == 10);
  CHECK(fam[0].kind == "bump");
  CHECK(fam[1].kind == "power");
  for (const auto& m : fam) {
    if (m.kind == "power") {
      CHECK(m.s <= -0.25);
      CHECK(m.finite_norm(-1.0) == (m.s < -1.0));
    } else {
      CHECK(m.finite_norm(-1.0));
    }
  }
  CHECK(inequality_family(1, 10, 3)[3].s == fam[3].s);
}

TEST_CASE("report merging") {
  CHECK(merge_reports({}).markdown.empty());

  const auto m = merge_reports({{"a.json", fake_report("group", kSchemaVersion, true)},
                                {"b.json", fake_report("af", kSchemaVersion, false)}});
  CHECK(m.warnings.empty());
  CHECK(m.markdown.find("| a.json | group | a | PASS |") != std::string::npos);
  CHECK(m.markdown.find("| b.json | af | a | FAIL |") != std::string::npos);
  CHECK(m.markdown.find("1 of 2 assertions pass") != std::string::npos);
  CHECK(m.markdown.find("## Empirical constants") != std::string::npos);

  const auto w = merge_reports({{"a.json", fake_report("group", kSchemaVersion, true)},
                                {"b.json", fake_report("group", kSchemaVersion + 1, true)}});
  REQUIRE(w.warnings.size() == 1);
  CHECK(w.warnings[0].find("schema_version conflict") != std::string::npos);

  CHECK_THROWS_AS(merge_reports({{"x", nlohmann::json::array()}}), report_error);
  CHECK_THROWS_AS(merge_reports({{"x", {{"schema_version", 1}}}}), report_error);

  // two scaling reports merge into one table ordered by (p, delta, R)
  auto s1 = fake_report("scaling", kSchemaVersion, true), s2 = s1;
  s1["data"]["scaling_rows"] = {{{"function", "f"}, {"k", 0}, {"p", 3.0}, {"delta", -1.0}, {"R", 2.0}, {"ratio", 1.0}}};
  s2["data"]["scaling_rows"] = {{{"function", "f"}, {"k", 0}, {"p", 2.0}, {"delta", -1.0}, {"R", 4.0}, {"ratio", 1.0}},
                                {{"function", "f"}, {"k", 0}, {"p", 2.0}, {"delta", -1.0}, {"R", 2.0}, {"ratio", 1.0}}};
  const auto sm = merge_reports({{"s1", s1}, {"s2", s2}}).markdown;
  const auto t = sm.find("## Scaling identity");
  REQUIRE(t != std::string::npos);
  const auto r1 = sm.find("| 2 | -1 | 2 |", t), r2 = sm.find("| 2 | -1 | 4 |", t), r3 = sm.find("| 3 | -1 | 2 |", t);
  CHECK(r1 < r2);
  CHECK(r2 < r3);
  CHECK(r3 != std::string::npos);
  CHECK(sm.find("## Scaling identity", t + 1) == std::string::npos);
}

TEST_CASE("serialized grid functions and atomic writes") {
  GridOptions o;
  o.n = 1;
  o.r_min = 0.5;
  o.R_max = 4.0;
  o.res = {2, 4, 4};
  const GridFunctionD f = sample(gaussian(1), make_grid(o));
  const GridFunctionD g = grid_function_from_json(grid_function_to_json(f));
  CHECK(g.size() == f.size());
  CHECK((g.values - f.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(grid_function_from_json({{"kind", "other"}}), std::invalid_argument);

  const fs::path d = scratch("atomic");
  write_file_atomic((d / "sub" / "x.txt").string(), "abc");
  CHECK(slurp(d / "sub" / "x.txt") == "abc");
  CHECK_FALSE(fs::exists(d / "sub" / "x.txt.tmp"));
}

TEST_CASE("command line") {
  if (cli().empty()) {
    MESSAGE("HEIS_CLI not set; skipping process tests");
    return;
  }
  SUBCASE("verify group writes a versioned report and exits 0") {
    const fs::path d = scratch("group");
    const Run r = run("verify group --out-dir '" + d.string() + "'", d);
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(d / "group.json"));
    CHECK(j["schema_version"] == kSchemaVersion);
    CHECK(j["pass"] == true);
    CHECK(j.contains("run_info"));
    CHECK(fs::exists(d / "group.csv"));
  }
  SUBCASE("verify scaling with flag overrides") {
    const fs::path d = scratch("scaling");
    const Run r = run("verify scaling --n 1 --p 2 --delta -1 --profile quick --out-dir '" + d.string() + "'", d);
    CHECK(r.code == 0);
    const std::string csv = slurp(d / "scaling.csv");
    CHECK(csv.rfind("function,n,k,p,delta,R,ratio\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 2 * 3);  // header + names x k x R
    const auto j = nlohmann::json::parse(slurp(d / "scaling.json"));
    CHECK(j["config"]["norm"]["p"] == nlohmann::json::array({2.0}));
  }
  SUBCASE("verify kernels-region writes labelled sweeps") {
    const fs::path d = scratch("kernels");
    const Run r = run("verify kernels-region --p 2 --profile quick --out-dir '" + d.string() + "'", d);
    CHECK(r.code == 0);
    const std::string csv = slurp(d / "kernels_region_p2.csv");
    CHECK(csv.rfind("a,b,p,T,norm_estimate,label\n", 0) == 0);
    CHECK(csv.find("diverges") != std::string::npos);
  }
  SUBCASE("invalid configuration exits 2") {
    const fs::path d = scratch("invalid");
    CHECK(run("solve --delta 0.5 --out-dir '" + d.string() + "'", d).code == 2);
    CHECK(slurp(d / "stderr.txt").find("solve.delta") != std::string::npos);
    CHECK(run("verify group --out-dir '" + d.string() + "'", d, "HEIS_RUN_N=7").code == 2);
    CHECK(run("verify bogus", d).code == 2);
    CHECK(run("verify group --set run.nope=1", d).code == 2);
    std::ofstream(d / "bad.ini") << "[run]\nseed = x\n";
    CHECK(run("verify group --config '" + (d / "bad.ini").string() + "'", d).code == 2);
  }
  SUBCASE("config file and environment precedence") {
    const fs::path d = scratch("precedence");
    std::ofstream(d / "c.ini") << "[run]\nseed = 5\nprofile = quick\n";
    CHECK(run("verify group --config '" + (d / "c.ini").string() + "' --out-dir '" + d.string() + "'", d, "HEIS_RUN_SEED=6")
              .code == 0);
    CHECK(nlohmann::json::parse(slurp(d / "group.json"))["config"]["run"]["seed"] == 6);
    CHECK(run("verify group --seed 8 --out-dir '" + d.string() + "'", d, "HEIS_RUN_SEED=6").code == 0);
    CHECK(nlohmann::json::parse(slurp(d / "group.json"))["config"]["run"]["seed"] == 8);
  }
  SUBCASE("solver precondition failure is reported verbatim with exit 1") {
    const fs::path d = scratch("precondition");
    const Run r = run("solve --operator af --A-p 0.028 --profile quick --out-dir '" + d.string() + "'", d);
    CHECK(r.code == 1);
    CHECK(slurp(d / "stderr.txt").find("absorption") != std::string::npos);
  }
  SUBCASE("report command") {
    const fs::path d = scratch("report");
    const Run empty = run("report", d);
    CHECK(empty.code == 0);
    CHECK(empty.out.empty());
    std::ofstream(d / "a.json") << fake_report("group", kSchemaVersion, true).dump();
    std::ofstream(d / "b.json") << fake_report("group", kSchemaVersion + 1, true).dump();
    const Run m = run("report '" + (d / "a.json").string() + "' '" + (d / "b.json").string() + "'", d);
    CHECK(m.code == 0);
    CHECK(m.out.find("Pass/fail matrix") != std::string::npos);
    CHECK(slurp(d / "stderr.txt").find("warning: schema_version conflict") != std::string::npos);
    std::ofstream(d / "bad.json") << "{not json";
    CHECK(run("report '" + (d / "bad.json").string() + "'", d).code == 2);
    CHECK(run("report '" + (d / "a.json").string() + "' --output '" + (d / "sum.md").string() + "'", d).code == 0);
    CHECK(slurp(d / "sum.md").find("| a.json | group | a | PASS |") != std::string::npos);
  }
}

TEST_CASE("command line solves: flat, degenerate blow-up model, serialized input") {
  if (cli().empty()) return;
  const fs::path d = scratch("solve");
  const std::string common = " --profile quick --f ring_bump";
  REQUIRE(run("solve --operator flat" + common + " --out-dir '" + (d / "flat").string() + "'", d).code == 0);
  REQUIRE(run("solve --operator af --A-p 0" + common + " --out-dir '" + (d / "af0").string() + "'", d).code == 0);
  const auto a = nlohmann::json::parse(slurp(d / "flat" / "solve_report.json"));
  const auto b = nlohmann::json::parse(slurp(d / "af0" / "solve_report.json"));
  CHECK(a["report"]["converged"] == true);
  CHECK(a["report"]["residual_norm"].get<double>() <= 1e-6 * a["report"]["f_norm"].get<double>());
  CHECK(fs::exists(d / "flat" / "solve_convergence.csv"));
  const auto ua = a["solution"].get<std::vector<double>>(), ub = b["solution"].get<std::vector<double>>();
  REQUIRE(ua.size() == ub.size());
  double diff = 0.0, scale = 0.0;
  for (size_t i = 0; i < ua.size(); ++i) {
    diff = std::max(diff, std::abs(ua[i] - ub[i]));
    scale = std::max(scale, std::abs(ua[i]));
  }
  CHECK(diff <= 1e-6 * scale);

  // serialized right-hand side, solved through grid quadrature
  GridOptions o;
  o.n = 1;
  o.r_min = 1.0 / 16;
  o.R_max = 16.0;
  o.res = {6, 12, 12};
  const GridFunctionD fs_ = sample(named_test_function("ring_bump", 1), make_grid(o));
  write_file_atomic((d / "f.json").string(), grid_function_to_json(fs_).dump());
  const Run s = run("solve --operator flat --profile quick --set solve.check_Rmax=2 --f '" + (d / "f.json").string() +
                        "' --out-dir '" + (d / "ser").string() + "'",
                    d);
  CHECK(s.code == 0);
  const auto c = nlohmann::json::parse(slurp(d / "ser" / "solve_report.json"));
  CHECK(c["report"]["method"] == "convolve_k0");
  CHECK(run("solve --operator af --f '" + (d / "f.json").string() + "'", d).code == 2);
}
