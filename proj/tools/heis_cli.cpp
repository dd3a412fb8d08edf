// heis: verify suites, solve P u = f, merge reports.
#include "heis/suites.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <iostream>
#include <optional>

using namespace heis;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

struct Common {
  std::string config;
  std::string out_dir = "heis-out";
  std::optional<std::string> seed, tol, n, p, delta, profile;
  std::vector<std::string> sets;  // key=value
};

// defaults < config file < HEIS_* environment < flags
RunConfig resolve(const Common& c, bool solve) {
  RunConfig cfg;
  if (!c.config.empty()) cfg = load_config(c.config, cfg);
  apply_env(cfg, process_env());
  if (c.seed) set_config_value(cfg, "run.seed", *c.seed);
  if (c.n) set_config_value(cfg, "run.n", *c.n);
  if (c.profile) set_config_value(cfg, "run.profile", *c.profile);
  if (c.tol) set_config_value(cfg, "solve.tol", *c.tol);
  if (c.p) set_config_value(cfg, solve ? "solve.p" : "norm.p", *c.p);
  if (c.delta) set_config_value(cfg, solve ? "solve.delta" : "norm.delta", *c.delta);
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw config_error("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

std::string join(const std::string& dir, const std::string& name) { return (std::filesystem::path(dir) / name).string(); }

int verify(const Common& c, const std::string& which) {
  const RunConfig cfg = resolve(c, false);
  std::vector<std::string> names = which == "all" ? suite_names() : std::vector<std::string>{which};
  bool all_pass = true;
  for (const auto& name : names) {
    const SuiteResult r = run_suite(name, cfg);
    for (const auto& a : r.assertions) std::cout << (a.pass ? "PASS " : "FAIL ") << name << ": " << a.name << "\n";
    int passed = 0;
    for (const auto& a : r.assertions) passed += a.pass;
    std::cout << name << ": " << (r.pass() ? "PASS" : "FAIL") << " (" << passed << "/" << r.assertions.size() << ") in "
              << r.seconds << " s\n";
    write_file_atomic(join(c.out_dir, name + ".json"), with_run_info(r.payload(cfg), r.seconds).dump(2) + "\n");
    for (const auto& [file, csv] : r.tables) write_file_atomic(join(c.out_dir, file), csv);
    all_pass = all_pass && r.pass();
  }
  return all_pass ? kExitPass : kExitFail;
}

int solve(const Common& c, const std::optional<std::string>& f, const std::optional<std::string>& op,
          const std::optional<std::string>& A_p) {
  Common cc = c;
  if (f) cc.sets.push_back("solve.f=" + *f);
  if (op) cc.sets.push_back("operator.kind=" + *op);
  if (A_p) cc.sets.push_back("operator.A_p=" + *A_p);
  const RunConfig cfg = resolve(cc, true);
  const SolveOutput out = run_solve(cfg);
  write_file_atomic(join(c.out_dir, "solve_report.json"), with_run_info(out.payload, out.seconds).dump(2) + "\n");
  write_file_atomic(join(c.out_dir, "solve_convergence.csv"), out.history_csv);
  const auto& rep = out.payload["report"];
  std::cout << "solve: " << rep.value("method", "?") << ", converged " << rep.value("converged", false);
  if (rep.contains("residual_norm")) std::cout << ", residual " << rep["residual_norm"] << " of ||f|| " << rep["f_norm"];
  std::cout << "\n";
  return out.payload.value("pass", false) ? kExitPass : kExitFail;
}

int report(const std::vector<std::string>& inputs, const std::string& output) {
  std::vector<std::pair<std::string, nlohmann::json>> reports;
  for (const auto& path : inputs) reports.emplace_back(std::filesystem::path(path).filename().string(), read_report(path));
  const MergedReport m = merge_reports(reports);
  for (const auto& w : m.warnings) std::cerr << "warning: " << w << "\n";
  if (output.empty())
    std::cout << m.markdown;
  else
    write_file_atomic(output, m.markdown);
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted-space analysis on the Heisenberg group: verification suites, solves and reports"};
  app.require_subcommand(1);
  app.fallthrough();
  Common c;
  app.add_option("--config", c.config, "INI configuration file ([section] key = value)");
  app.add_option("--seed", c.seed, "random seed (run.seed)");
  app.add_option("--out-dir", c.out_dir, "directory for JSON and CSV outputs")->capture_default_str();
  app.add_option("--tol", c.tol, "solver tolerance (solve.tol)");
  app.add_option("--n", c.n, "Heisenberg dimension (run.n)");
  app.add_option("--p", c.p, "exponents, comma separated (norm.p; solve.p for solve)");
  app.add_option("--delta", c.delta, "weights, comma separated (norm.delta; solve.delta for solve)");
  app.add_option("--profile", c.profile, "full or quick (run.profile)");
  app.add_option("--set", c.sets, "override any key: section.key=value (repeatable)");

  auto* v = app.add_subcommand("verify", "run a verification suite");
  std::string suite;
  v->add_option("suite", suite, "suite name or 'all'")
      ->required()
      ->check(CLI::IsMember([] {
        auto s = suite_names();
        s.push_back("all");
        return s;
      }()));

  auto* s = app.add_subcommand("solve", "solve P u = f");
  std::optional<std::string> f, op, A_p;
  s->add_option("--f", f, "named test function or serialized grid function (.json)");
  s->add_option("--operator", op, "flat or af (operator.kind)");
  s->add_option("--A-p", A_p, "blow-up coefficient A_p (operator.A_p)");

  auto* r = app.add_subcommand("report", "merge JSON reports into a markdown summary");
  std::vector<std::string> inputs;
  std::string output;
  r->add_option("inputs", inputs, "report files");
  r->add_option("--output", output, "write the summary here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (*v) return verify(c, suite);
    if (*s) return solve(c, f, op, A_p);
    return report(inputs, output);
  } catch (const config_error& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kExitConfig;
  } catch (const report_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const precondition_error& e) {
    std::cerr << e.what() << "\n";
    return kExitFail;
  } catch (const convergence_error& e) {
    std::cerr << e.what() << "\n";
    return kExitFail;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
}
