// Run configuration: sectioned key=value files, HEIS_ environment overrides, validation.
#pragma once

#include "heis/norms.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace heis {

inline constexpr int kSchemaVersion = 1;

class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  // [run]
  int n = 1;
  std::uint64_t seed = 1;
  std::string profile = "full";  // "full" or "quick" (smaller grids and families)
  // [grid]
  double r_min = 1.0 / 64;
  double R_max = 64.0;
  Resolution res = {4, 8, 8};
  // [norm]
  std::vector<double> p = {2.0, 3.0};
  std::vector<double> delta = {-0.5, -1.0, -2.0};
  double q = 0.0;  // 0 selects 2Q
  // [kernel]
  std::vector<double> kernel_a = {0.5, 1.0, 1.5, 2.5};
  std::vector<double> kernel_b = {0.5, 1.0, 1.5};
  std::vector<int> kernel_J = {4, 5, 6};
  // [operator]
  std::string op = "af";  // "flat" or "af"
  double A_p = 0.1 / (8.0 * M_PI);  // |4 c~_1 A_p| = 0.1 for n = 1, a_n = 1
  double a_n = 1.0;
  double rho_0 = 1.0;
  double tau = 1.0;
  // [solve]
  std::string f = "ring_bump";  // named test function or a path to a serialized grid function (.json)
  double solve_p = 2.0;
  double solve_delta = -1.0;
  double tol = 1e-6;
  int max_iter = 60;
  double check_Rmax = 8.0;
  // [fredholm]
  double fredholm_p = 2.0;
  double fredholm_delta = -1.0;
  std::vector<int> refinements = {7, 15, 31};
  double box_L = 2.0;

  bool quick() const { return profile == "quick"; }
  int Q() const { return homogeneous_dimension(n); }
  double q_exp() const { return q > 0.0 ? q : 2.0 * Q(); }

  // Throws config_error naming the offending key.
  void validate() const;
  nlohmann::json to_json() const;
};

// Keys are "section.key". Unknown keys and malformed values throw config_error.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::vector<std::string> config_keys();

// Parses an INI-style file ([section] then key = value; '#' or ';' comments).
RunConfig load_config(const std::string& path, RunConfig base = {});
RunConfig parse_config(const std::string& text, RunConfig base = {});

// HEIS_<SECTION>_<KEY> (upper case), e.g. HEIS_RUN_SEED, HEIS_SOLVE_TOL.
std::string env_name(const std::string& key);
void apply_env(RunConfig& cfg, const std::map<std::string, std::string>& env);
std::map<std::string, std::string> process_env();

}  // namespace heis
