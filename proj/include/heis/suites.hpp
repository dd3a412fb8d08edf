// Verification suites, solve and report workflows behind the command-line tool.
#pragma once

#include "heis/config.hpp"
#include "heis/solver.hpp"

#include <map>
#include <string>
#include <vector>

namespace heis {

struct Assertion {
  std::string name;
  bool pass = false;
  nlohmann::json detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<Assertion> assertions;
  nlohmann::json data = nlohmann::json::object();
  std::map<std::string, std::string> tables;  // CSV file name -> contents
  double seconds = 0.0;                       // wall time; never part of the payload

  bool pass() const;
  void check(std::string name, bool ok, nlohmann::json detail = nullptr);
  // Appends assertions, data keys and tables of another part.
  void absorb(const SuiteResult& part);
  // Deterministic report body: schema_version, suite, config, assertions, data.
  nlohmann::json payload(const RunConfig& cfg) const;
};

std::vector<std::string> suite_names();
// Throws config_error for an unknown name or a configuration the suite cannot run.
SuiteResult run_suite(const std::string& name, const RunConfig& cfg);

// Suite parts, shared with the acceptance driver.
SuiteResult group_checks(const RunConfig& cfg);
SuiteResult scaling_checks(const RunConfig& cfg);
SuiteResult harmonicity_checks(const RunConfig& cfg);
SuiteResult fundamental_checks(const RunConfig& cfg);
SuiteResult kernel_region_checks(const RunConfig& cfg);
SuiteResult embedding_checks(const RunConfig& cfg);
SuiteResult sobolev_checks(const RunConfig& cfg);
SuiteResult perturbed_solve_checks(const RunConfig& cfg);
SuiteResult estimate_checks(const RunConfig& cfg);
SuiteResult fredholm_checks(const RunConfig& cfg);
SuiteResult af_checks(const RunConfig& cfg);
SuiteResult clifford_checks(const RunConfig& cfg);

// Member of the seeded inequality family: sigma^s times a ring bump, or a sigma-power profile.
struct FamilyMember {
  std::string kind;  // "bump" or "power"
  double s = 0.0;
  double c = 0.0;  // profile coefficient (power members)
  Field field;
  // S^p_{k,delta} and L^p_delta norms finite: always for bumps, s < delta for powers.
  bool finite_norm(double delta) const { return kind == "bump" || s < delta; }
};
std::vector<FamilyMember> inequality_family(int n, int count, std::uint64_t seed);

SolveOptions solve_options(const RunConfig& cfg);
SubellipticOperator configured_operator(const RunConfig& cfg);

// Serialized grid function {"kind": "GridFunction", "schema_version", "grid", "values"}.
nlohmann::json grid_function_to_json(const GridFunctionD& f);
GridFunctionD grid_function_from_json(const nlohmann::json& j);

struct SolveOutput {
  nlohmann::json payload;  // deterministic
  std::string history_csv;
  double seconds = 0.0;
};
// Solves P u = f for the configured operator and right-hand side. Solver precondition and convergence
// failures propagate unchanged.
SolveOutput run_solve(const RunConfig& cfg);

class report_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MergedReport {
  std::string markdown;
  std::vector<std::string> warnings;
};
// Inputs are (label, parsed report). Throws report_error for documents that are not reports.
MergedReport merge_reports(const std::vector<std::pair<std::string, nlohmann::json>>& reports);
nlohmann::json read_report(const std::string& path);

// Writes via a temporary file in the same directory and a rename.
void write_file_atomic(const std::string& path, const std::string& contents);
// Attaches the non-deterministic run_info field (timestamp, wall time) to a payload.
nlohmann::json with_run_info(nlohmann::json payload, double seconds);
// Removes run_info so that payloads of repeated runs compare byte for byte.
nlohmann::json strip_run_info(nlohmann::json report);

}  // namespace heis
