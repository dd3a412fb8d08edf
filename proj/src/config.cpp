#include "heis/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <functional>
#include <sstream>

extern char** environ;

namespace heis {

namespace {

double parse_double(const std::string& key, const std::string& s) {
  const std::string t = boost::trim_copy(s);
  if (t == "inf") return kInf;
  try {
    size_t pos = 0;
    const double v = std::stod(t, &pos);
    if (pos == t.size()) return v;
  } catch (const std::exception&) {
  }
  throw config_error(key + ": expected a number, got '" + s + "'");
}

long long parse_int(const std::string& key, const std::string& s) {
  const std::string t = boost::trim_copy(s);
  try {
    size_t pos = 0;
    const long long v = std::stoll(t, &pos);
    if (pos == t.size()) return v;
  } catch (const std::exception&) {
  }
  throw config_error(key + ": expected an integer, got '" + s + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(","));
  for (auto& p : parts) boost::trim(p);
  if (parts.size() == 1 && parts[0].empty()) parts.clear();
  return parts;
}

std::vector<double> parse_doubles(const std::string& key, const std::string& s) {
  std::vector<double> v;
  for (const auto& p : split_list(s)) v.push_back(parse_double(key, p));
  if (v.empty()) throw config_error(key + ": empty list");
  return v;
}

std::vector<int> parse_ints(const std::string& key, const std::string& s) {
  std::vector<int> v;
  for (const auto& p : split_list(s)) v.push_back(static_cast<int>(parse_int(key, p)));
  if (v.empty()) throw config_error(key + ": empty list");
  return v;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

template <typename T>
Setter number(T RunConfig::*m) {
  return [m](RunConfig& c, const std::string& k, const std::string& v) {
    if constexpr (std::is_floating_point_v<T>)
      c.*m = parse_double(k, v);
    else
      c.*m = static_cast<T>(parse_int(k, v));
  };
}

Setter text(std::string RunConfig::*m) {
  return [m](RunConfig& c, const std::string&, const std::string& v) { c.*m = boost::trim_copy(v); };
}

Setter doubles(std::vector<double> RunConfig::*m) {
  return [m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = parse_doubles(k, v); };
}

Setter ints(std::vector<int> RunConfig::*m) {
  return [m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = parse_ints(k, v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"run.n", number(&RunConfig::n)},
      {"run.seed", number(&RunConfig::seed)},
      {"run.profile", text(&RunConfig::profile)},
      {"grid.r_min", number(&RunConfig::r_min)},
      {"grid.R_max", number(&RunConfig::R_max)},
      {"grid.res",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const auto r = parse_ints(k, v);
         if (r.size() != 3) throw config_error(k + ": expected three integers (radial, psi, angular)");
         c.res = {r[0], r[1], r[2]};
       }},
      {"norm.p", doubles(&RunConfig::p)},
      {"norm.delta", doubles(&RunConfig::delta)},
      {"norm.q", number(&RunConfig::q)},
      {"kernel.a", doubles(&RunConfig::kernel_a)},
      {"kernel.b", doubles(&RunConfig::kernel_b)},
      {"kernel.J", ints(&RunConfig::kernel_J)},
      {"operator.kind", text(&RunConfig::op)},
      {"operator.A_p", number(&RunConfig::A_p)},
      {"operator.a_n", number(&RunConfig::a_n)},
      {"operator.rho_0", number(&RunConfig::rho_0)},
      {"operator.tau", number(&RunConfig::tau)},
      {"solve.f", text(&RunConfig::f)},
      {"solve.p", number(&RunConfig::solve_p)},
      {"solve.delta", number(&RunConfig::solve_delta)},
      {"solve.tol", number(&RunConfig::tol)},
      {"solve.max_iter", number(&RunConfig::max_iter)},
      {"solve.check_Rmax", number(&RunConfig::check_Rmax)},
      {"fredholm.p", number(&RunConfig::fredholm_p)},
      {"fredholm.delta", number(&RunConfig::fredholm_delta)},
      {"fredholm.refinements", ints(&RunConfig::refinements)},
      {"fredholm.L", number(&RunConfig::box_L)},
  };
  return table;
}

}  // namespace

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw config_error("unknown configuration key '" + key + "'");
  it->second(cfg, key, value);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> k;
  for (const auto& [name, _] : setters()) k.push_back(name);
  return k;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& msg) { throw config_error(key + ": " + msg); };
  if (n < 1 || n > 2) fail("run.n", "n must be 1 or 2");
  if (profile != "full" && profile != "quick") fail("run.profile", "expected 'full' or 'quick'");
  if (!(r_min > 0.0 && R_max > r_min) || std::isinf(R_max)) fail("grid", "need 0 < r_min < R_max < inf");
  if (res.nr < 1 || res.npsi < 1 || res.nang < 1) fail("grid.res", "resolutions must be positive");
  for (double v : p)
    if (!(v >= 1.0)) fail("norm.p", "exponents must be >= 1");
  const double qq = q_exp();
  if (!(qq > Q())) fail("norm.q", "need q > Q = " + std::to_string(Q()));
  if (kernel_J.empty() || *std::min_element(kernel_J.begin(), kernel_J.end()) < 1) fail("kernel.J", "need J >= 1");
  if (op != "flat" && op != "af") fail("operator.kind", "expected 'flat' or 'af'");
  if (!(a_n > 0.0)) fail("operator.a_n", "must be positive");
  if (!(rho_0 > 0.0)) fail("operator.rho_0", "must be positive");
  if (!(tau > 0.0 && tau < 2.0 * n)) fail("operator.tau", "need 0 < tau < 2n");
  if (!(solve_delta < 0.0 && solve_delta > -2.0 * n)) fail("solve.delta", "need -2n < delta < 0");
  if (!(solve_p > 1.0) || std::isinf(solve_p)) fail("solve.p", "need 1 < p < inf");
  if (!(tol > 0.0)) fail("solve.tol", "must be positive");
  if (max_iter < 1) fail("solve.max_iter", "must be >= 1");
  if (!(check_Rmax > 1.0)) fail("solve.check_Rmax", "must exceed 1");
  if (f.empty()) fail("solve.f", "empty");
  if (!(fredholm_delta < 0.0 && fredholm_delta > -2.0 * n)) fail("fredholm.delta", "need -2n < delta < 0");
  if (!(fredholm_p > qq / (qq - 1.0) && fredholm_p <= qq))
    fail("fredholm.p", "need q/(q-1) < p <= q with q = " + std::to_string(qq));
  if (refinements.size() < 3) fail("fredholm.refinements", "need at least three refinements");
  for (size_t i = 0; i < refinements.size(); ++i)
    if (refinements[i] < 3 || (i > 0 && refinements[i] <= refinements[i - 1]))
      fail("fredholm.refinements", "need increasing sizes >= 3");
  if (!(box_L > 0.0)) fail("fredholm.L", "must be positive");
}

nlohmann::json RunConfig::to_json() const {
  return {{"run", {{"n", n}, {"seed", seed}, {"profile", profile}}},
          {"grid", {{"r_min", r_min}, {"R_max", R_max}, {"res", {res.nr, res.npsi, res.nang}}}},
          {"norm", {{"p", p}, {"delta", delta}, {"q", q_exp()}}},
          {"kernel", {{"a", kernel_a}, {"b", kernel_b}, {"J", kernel_J}}},
          {"operator", {{"kind", op}, {"A_p", A_p}, {"a_n", a_n}, {"rho_0", rho_0}, {"tau", tau}}},
          {"solve",
           {{"f", f}, {"p", solve_p}, {"delta", solve_delta}, {"tol", tol}, {"max_iter", max_iter}, {"check_Rmax", check_Rmax}}},
          {"fredholm", {{"p", fredholm_p}, {"delta", fredholm_delta}, {"refinements", refinements}, {"L", box_L}}}};
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  boost::property_tree::ptree pt;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : pt) {
    if (body.empty()) throw config_error("config: key '" + section + "' outside a [section]");
    for (const auto& [key, val] : body) {
      std::string v = val.get_value<std::string>();
      // inline comments
      const auto hash = v.find_first_of("#;");
      if (hash != std::string::npos) v = v.substr(0, hash);
      set_config_value(base, section + "." + key, v);
    }
  }
  return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string env_name(const std::string& key) {
  std::string s = "HEIS_" + key;
  for (char& c : s) c = c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

void apply_env(RunConfig& cfg, const std::map<std::string, std::string>& env) {
  for (const auto& key : config_keys()) {
    const auto it = env.find(env_name(key));
    if (it != env.end()) set_config_value(cfg, key, it->second);
  }
}

std::map<std::string, std::string> process_env() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e && *e; ++e) {
    const std::string kv(*e);
    const auto eq = kv.find('=');
    if (eq != std::string::npos && kv.rfind("HEIS_", 0) == 0) env[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return env;
}

}  // namespace heis
