#include "heis/suites.hpp"

#include "heis/af_model.hpp"
#include "heis/clifford.hpp"
#include "heis/test_functions.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <tuple>

namespace heis {

using nlohmann::json;

// ---- SuiteResult --------------------------------------------------------------------------

bool SuiteResult::pass() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

void SuiteResult::check(std::string name, bool ok, json detail) {
  assertions.push_back({std::move(name), ok, std::move(detail)});
}

void SuiteResult::absorb(const SuiteResult& part) {
  assertions.insert(assertions.end(), part.assertions.begin(), part.assertions.end());
  for (const auto& [k, v] : part.data.items()) {
    if (k == "constants" && data.contains(k))
      data[k].update(v);
    else
      data[k] = v;
  }
  tables.insert(part.tables.begin(), part.tables.end());
}

json SuiteResult::payload(const RunConfig& cfg) const {
  json as = json::array();
  for (const auto& a : assertions) as.push_back({{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});
  return {{"schema_version", kSchemaVersion},
          {"kind", "verify"},
          {"suite", suite},
          {"test_library", kTestLibraryVersion},
          {"config", cfg.to_json()},
          {"pass", pass()},
          {"assertions", as},
          {"data", data},
          {"tables", [&] {
             json t = json::array();
             for (const auto& [name, _] : tables) t.push_back(name);
             return t;
           }()}};
}

namespace {

GridPtr grid_of(int n, double rmin, double rmax, Resolution r, bool core) {
  GridOptions o;
  o.n = n;
  o.r_min = rmin;
  o.R_max = rmax;
  o.core = core;
  o.res = r;
  return make_grid(o);
}

NormSpec norm_spec(int k, double p, double delta, Flavor fl = Flavor::Sigma) {
  NormSpec s;
  s.k = k;
  s.p = p;
  s.delta = delta;
  s.flavor = fl;
  return s;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

double max_abs_coord(const HPoint<double>& p) {
  double m = 0.0;
  for (int i = 0; i < 2 * p.n() + 1; ++i) m = std::max(m, std::abs(p.coord(i)));
  return m;
}

double rel_dist(const HPoint<double>& a, const HPoint<double>& b) {
  double d = 0.0;
  for (int i = 0; i < 2 * a.n() + 1; ++i) d = std::max(d, std::abs(a.coord(i) - b.coord(i)));
  return d / std::max({1.0, max_abs_coord(a), max_abs_coord(b)});
}

double cached_c0(int n) {
  static std::map<int, double> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_c0(n).c0).first;
  return it->second;
}

// Polynomial sum_m c_m prod_i x_i^{e_i} in the 2n+1 coordinates.
struct Monomial {
  double c;
  std::vector<int> e;
};

Field polynomial_field(const std::vector<Monomial>& terms) {
  return make_field("polynomial", [terms](const auto& p) {
    using S = std::decay_t<decltype(p.t)>;
    S s(0.0);
    for (const auto& m : terms) {
      S v(m.c);
      for (size_t i = 0; i < m.e.size(); ++i)
        for (int k = 0; k < m.e[i]; ++k) v = v * p.coord(static_cast<int>(i));
      s = s + v;
    }
    return s;
  });
}

double eval_poly(const std::vector<Monomial>& terms, const HPoint<double>& p, bool absolute) {
  double s = 0.0;
  for (const auto& m : terms) {
    double v = m.c;
    for (size_t i = 0; i < m.e.size(); ++i) v *= std::pow(p.coord(static_cast<int>(i)), m.e[i]);
    s += absolute ? std::abs(v) : v;
  }
  return s;
}

std::vector<Monomial> random_cubic(int n, std::mt19937_64& rng) {
  const int d = 2 * n + 1;
  std::uniform_int_distribution<int> C(-3, 3);
  std::vector<Monomial> out;
  std::vector<int> e(d, 0);
  // all exponent vectors with total degree <= 3
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == d) {
      out.push_back({static_cast<double>(C(rng)), e});
      return;
    }
    for (int k = 0; k <= left; ++k) {
      e[i] = k;
      rec(i + 1, left - k);
    }
    e[i] = 0;
  };
  rec(0, 3);
  return out;
}

std::vector<Monomial> d_dt(const std::vector<Monomial>& terms) {
  std::vector<Monomial> out;
  for (const auto& m : terms) {
    const int it = static_cast<int>(m.e.size()) - 1;
    if (m.e[it] == 0) continue;
    Monomial d = m;
    d.c *= m.e[it];
    d.e[it] -= 1;
    out.push_back(d);
  }
  return out;
}

}  // namespace

// ---- group --------------------------------------------------------------------------------

SuiteResult group_checks(const RunConfig& cfg) {
  SuiteResult r;
  r.suite = "group";
  const int points = cfg.quick() ? 1000 : 10000;
  constexpr double tol = 1e-12;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> U(-2.0, 2.0), logR(std::log(1e-2), std::log(1e2));
  std::ostringstream csv;
  csv << "n,check,max_relative_error\n";
  json rows = json::array();
  for (int n : {1, 2}) {
    auto draw = [&] {
      HPoint<double> p(n);
      for (int i = 0; i < 2 * n + 1; ++i) p.coord(i) = U(rng);
      return p;
    };
    double assoc = 0.0, inv = 0.0, hom = 0.0, dil = 0.0;
    for (int k = 0; k < points; ++k) {
      const HPoint<double> a = draw(), b = draw(), c = draw();
      const double R = std::exp(logR(rng));
      assoc = std::max(assoc, rel_dist(group_mul(group_mul(a, b), c), group_mul(a, group_mul(b, c))));
      const double sa = std::max(1.0, max_abs_coord(a) * max_abs_coord(a));
      inv = std::max({inv, max_abs_coord(group_mul(a, inverse(a))) / sa, max_abs_coord(group_mul(inverse(a), a)) / sa});
      const double ra = rho(a);
      hom = std::max(hom, std::abs(rho(dilate(R, a)) - R * ra) / (R * ra));
      dil = std::max(dil, rel_dist(dilate(R, group_mul(a, b)), group_mul(dilate(R, a), dilate(R, b))));
    }
    // [X_j, Y_j] = -4 d/dt on random cubics, d/dt taken from the polynomial coefficients
    double bracket = 0.0;
    for (int q = 0; q < 20; ++q) {
      const auto terms = random_cubic(n, rng);
      const auto dt = d_dt(terms);
      const Field f = polynomial_field(terms);
      for (int k = 0; k < 25; ++k) {
        const HPoint<double> x = draw();
        const double expect = -4.0 * eval_poly(dt, x, false);
        const double scale = 1.0 + 4.0 * eval_poly(dt, x, true) + eval_poly(terms, x, true);
        for (int j = 0; j < n; ++j) {
          const double lhs = frame_apply2(j, n + j, f, x) - frame_apply2(n + j, j, f, x);
          bracket = std::max(bracket, std::abs(lhs - expect) / scale);
        }
      }
    }
    const std::string sn = " n=" + std::to_string(n);
    r.check("associativity" + sn, assoc <= tol, {{"max_relative_error", assoc}, {"points", points}});
    r.check("inverse" + sn, inv <= tol, {{"max_relative_error", inv}});
    r.check("gauge dilation homogeneity" + sn, hom <= tol, {{"max_relative_error", hom}});
    r.check("dilation automorphism" + sn, dil <= tol, {{"max_relative_error", dil}});
    r.check("bracket [X_j,Y_j] = -4 d/dt" + sn, bracket <= tol, {{"max_relative_error", bracket}, {"polynomials", 20}});
    for (const auto& [name, v] : {std::pair{"associativity", assoc}, {"inverse", inv}, {"homogeneity", hom},
                                  {"dilation", dil}, {"bracket", bracket}}) {
      csv << n << ',' << name << ',' << num(v) << '\n';
      rows.push_back({{"n", n}, {"check", name}, {"max_relative_error", v}});
    }
  }
  r.data["group"] = rows;
  r.tables["group.csv"] = csv.str();
  return r;
}

// ---- scaling ------------------------------------------------------------------------------

SuiteResult scaling_checks(const RunConfig& cfg) {
  SuiteResult r;
  r.suite = "scaling";
  const GridPtr g = grid_of(cfg.n, cfg.r_min, cfg.R_max, cfg.res, false);
  auto names = scaling_test_names();
  if (cfg.quick()) names.resize(2);
  const std::vector<double> Rs = {2.0, 4.0, 8.0};
  std::ostringstream csv;
  csv << "function,n,k,p,delta,R,ratio\n";
  json rows = json::array();
  double worst_all = 0.0;
  for (const auto& name : names) {
    const Field u = named_test_function(name, cfg.n);
    std::vector<Field> scaled;
    for (double R : Rs) scaled.push_back(rescale(u, R));
    for (int k : {0, 1}) {
      double worst = 0.0;
      for (double p : cfg.p) {
        for (double d : cfg.delta) {
          const NormSpec s = norm_spec(k, p, d, Flavor::Rho);
          const double base = fs_norm(u, s, g).value;
          for (size_t i = 0; i < Rs.size(); ++i) {
            const double ratio = fs_norm(scaled[i], s, g).value / (std::pow(Rs[i], d) * base);
            worst = std::max(worst, std::abs(ratio - 1.0));
            csv << name << ',' << cfg.n << ',' << k << ',' << num(p) << ',' << num(d) << ',' << num(Rs[i]) << ','
                << num(ratio) << '\n';
            rows.push_back({{"function", name}, {"k", k}, {"p", p}, {"delta", d}, {"R", Rs[i]}, {"ratio", ratio}});
          }
        }
      }
      worst_all = std::max(worst_all, worst);
      r.check("dilation identity " + name + " k=" + std::to_string(k), worst < 1e-3, {{"max_deviation", worst}});
    }
  }
  r.data["scaling_rows"] = rows;
  r.data["constants"]["scaling_max_deviation"] = worst_all;
  r.tables["scaling.csv"] = csv.str();
  return r;
}

// ---- solver pieces --------------------------------------------------------------------------

SolveOptions solve_options(const RunConfig& cfg) {
  SolveOptions o;
  o.p = cfg.solve_p;
  o.delta = cfg.solve_delta;
  o.tol = cfg.tol;
  o.max_iter = cfg.max_iter;
  o.check_Rmax = cfg.check_Rmax;
  if (cfg.quick()) {
    o.check_Rmax = std::min(cfg.check_Rmax, 4.0);
    o.k0.near = {10, 20, 20};
    o.k0.source = {14, 28, 28};
  }
  return o;
}

SubellipticOperator configured_operator(const RunConfig& cfg) {
  if (cfg.op == "flat") return SubellipticOperator::flat(cfg.n);
  const AFModel m{cfg.n, cfg.A_p, cfg.a_n, cfg.rho_0};
  return build_perturbed_sublaplacian(m, cfg.tau, cfg.q_exp());
}

SuiteResult harmonicity_checks(const RunConfig&) {
  SuiteResult r;
  r.suite = "solver";
  json reps = json::array();
  for (int n : {1, 2}) {
    const auto h = harmonicity_check(n, {0.1, 0.05, 0.025, 0.0125});
    const bool ok = h.ratios.size() == 3 && std::all_of(h.ratios.begin(), h.ratios.end(), [](double x) { return x >= 3.5; });
    r.check("harmonicity of rho^{2-Q} n=" + std::to_string(n), ok, h.to_json());
    reps.push_back(h.to_json());
  }
  r.data["harmonicity"] = reps;
  return r;
}

SuiteResult fundamental_checks(const RunConfig& cfg) {
  SuiteResult r;
  r.suite = "solver";
  const int n = cfg.n, Q = cfg.Q();
  FundamentalConstant fc;
  try {
    fc = compute_c0(n);
  } catch (const std::runtime_error& e) {
    r.check("c0 stable across resolutions", false, {{"error", e.what()}});
    return r;
  }
  r.check("c0 stable across resolutions", fc.stable, fc.to_json());
  r.check("c0 oracles agree", fc.oracles_agree, fc.to_json());
  r.data["c0"] = fc.to_json();
  r.data["constants"]["c0"] = fc.c0;

  K0Options k0;
  if (cfg.quick()) {
    k0.near = {10, 20, 20};
    k0.source = {14, 28, 28};
  }
  const GridPtr g = grid_of(n, 0.125, 16.0, {3, 6, 6}, false);
  const auto fam = bump_family(n, cfg.quick() ? 1 : 3, cfg.seed);
  std::ostringstream csv;
  csv << "member,delta,relative_error\n";
  json rows = json::array();
  double worst = 0.0;
  for (size_t i = 0; i < fam.size(); ++i) {
    const Field f = apply(SubellipticOperator::flat(n), fam[i]);
    const K0Convolver K0(f, n, fc.c0, k0);
    const GridFunctionD us = sample(fam[i], g), vs = sample(K0.as_field(), g);
    GridFunctionD e = vs;
    e.values -= us.values;
    for (double d : {-0.5, -1.0, -1.5}) {
      const NormSpec s = norm_spec(0, 2.0, d, Flavor::Rho);
      const double rel = weighted_norm(e, s).value / weighted_norm(us, s).value;
      worst = std::max(worst, rel);
      csv << i << ',' << num(d) << ',' << num(rel) << '\n';
      rows.push_back({{"member", i}, {"delta", d}, {"relative_error", rel}});
    }
  }
  r.check("K0 round trip within 2%", worst < 0.02, {{"max_relative_error", worst}, {"members", fam.size()}});
  r.data["round_trip"] = rows;
  r.tables["round_trip.csv"] = csv.str();

  const K0Convolver K0f(named_test_function(cfg.f.ends_with(".json") ? "ring_bump" : cfg.f, n), n, fc.c0, k0);
  const auto ff = far_field(K0f, {8.0, 16.0, 32.0, 64.0});
  const double expect = 2.0 - Q;
  r.check("far-field slope 2-Q within 3%", std::abs(ff.slope - expect) <= 0.03 * std::abs(expect), ff.to_json());
  r.data["far_field"] = ff.to_json();
  std::ostringstream fcsv;
  fcsv << "R,mean_abs_u\n";
  for (size_t i = 0; i < ff.radii.size(); ++i) fcsv << num(ff.radii[i]) << ',' << num(ff.mean_abs[i]) << '\n';
  r.tables["far_field.csv"] = fcsv.str();
  return r;
}

SuiteResult perturbed_solve_checks(const RunConfig& cfg) {
  SuiteResult r;
  r.suite = "solver";
  const int n = cfg.n;
  const double c0 = cached_c0(n);
  const SolveOptions o = solve_options(cfg);
  const Field u = bump_family(n, 1, cfg.seed)[0];

  const AFModel m{n, cfg.A_p, cfg.a_n, cfg.rho_0};
  const SubellipticOperator P = build_perturbed_sublaplacian(m, cfg.tau, cfg.q_exp());
  const Field f = apply(P, u);
  json model = m.to_json();
  model["leading_abs"] = std::abs(m.leading());
  try {
    const SolveReport rep = solve_perturbed(P, f, c0, o);
    const GridFunctionD t = sample(u, rep.u.grid);
    GridFunctionD e = rep.u;
    e.values -= t.values;
    const NormSpec s = norm_spec(0, o.p, o.delta);
    const double err = weighted_norm(e, s).value / weighted_norm(t, s).value;
    json d = rep.to_json();
    d["solution_error"] = err;
    d["model"] = model;
    r.check("perturbed solve converges", rep.converged, {{"iterations", rep.iterations}});
    r.check("contraction factor below 1/2", rep.contraction_bound < 0.5 && rep.max_contraction < 0.5,
            {{"contraction_bound", rep.contraction_bound}, {"max_contraction", rep.max_contraction}});
    r.check("weighted residual below 1e-3 ||f||", rep.residual_norm < 1e-3 * rep.f_norm,
            {{"residual_norm", rep.residual_norm},
             {"f_norm", rep.f_norm},
             {"quadrature_residual", rep.quadrature_residual}});
    r.data["perturbed"] = d;
    r.data["constants"]["C_K0"] = rep.C_K0;
    r.data["constants"]["contraction_bound"] = rep.contraction_bound;
    r.data["constants"]["max_contraction"] = rep.max_contraction;
    r.tables["convergence.csv"] = rep.history_csv();
  } catch (const std::exception& e) {
    r.check("perturbed solve converges", false, {{"error", e.what()}, {"model", model}});
  }

  // degenerate case: the flat operator through the iteration against the direct flat solve
  const Field f0 = apply(SubellipticOperator::flat(n), u);
  const SolveReport a = solve_perturbed(SubellipticOperator::flat(n), f0, c0, o);
  const SolveReport b = solve_flat(f0, n, c0, o);
  const double diff = (a.u.values - b.u.values).cwiseAbs().maxCoeff();
  const double allow = o.tol * b.u.values.cwiseAbs().maxCoeff() + 1e-12;
  r.check("flat operator matches solve_flat", a.converged && diff <= allow,
          {{"max_difference", diff}, {"allowed", allow}, {"iterations", a.iterations}});
  return r;
}

SuiteResult estimate_checks(const RunConfig& cfg) {
  SuiteResult r;
  r.suite = "solver";
  const int n = cfg.n;
  const double c0 = cached_c0(n);
  const SubellipticOperator P = configured_operator(cfg);
  const auto fam = bump_family(n, cfg.quick() ? 4 : 6, cfg.seed);
  const GridPtr g = grid_of(n, 1.0 / 16, 32.0, {3, 6, 6}, false);
  json est = json::object();
  for (auto [kind, label] : {std::pair{EstimateKind::Injectivity, "injectivity"}, {EstimateKind::Weighted, "weighted"}}) {
    const ConstantEstimate ce = estimate_constant(kind, P, fam, cfg.solve_p, cfg.solve_delta, g);
    r.check(std::string("estimate constant finite: ") + label, std::isfinite(ce.C) && ce.C > 0.0, ce.to_json());
    est[label] = ce.to_json();
    r.data["constants"][std::string("C_") + label] = ce.C;
  }
  if (!P.is_flat()) {
    const ScaleBrokenConstants sb = scale_broken_constants(P, c0, fam, cfg.solve_p, cfg.solve_delta, g);
    r.check("estimate constant finite: scale-broken", std::isfinite(sb.estimate.C) && sb.estimate.C > 0.0, sb.to_json());
    est["scale_broken"] = sb.to_json();
    r.data["constants"]["C_scale_broken"] = sb.estimate.C;
  }
  r.data["estimates"] = est;

  // f >= 0 forces u = K_0 f <= 0 with its extremes controlled by the boundary
  RunConfig q = cfg;
  q.profile = "quick";
  SolveOptions o = solve_options(q);
  const Field f = named_test_function("ring_bump", n);
  const SolveReport s = solve_flat(f, n, c0, o);
  const MaxPrincipleReport mp = maximum_principle_check(SubellipticOperator::flat(n), s.u, sample(f, s.u.grid).values);
  r.check("maximum principle for the flat solve", mp.pass && mp.sign <= 0, mp.to_json());
  r.data["maximum_principle"] = mp.to_json();
  return r;
}

// ---- kernels --------------------------------------------------------------------------------

SuiteResult kernel_region_checks(const RunConfig& cfg) {
  SuiteResult r;
  r.suite = "kernels-region";
  const int n = cfg.n, Q = cfg.Q();
  std::vector<double> as = cfg.kernel_a, bs = cfg.kernel_b;
  std::vector<int> Js = cfg.kernel_J;
  if (cfg.quick()) {
    as = {1.0, 2.5};
    bs = {1.0};
    Js = {3, 4};
  }
  json sweeps = json::object();
  for (double p : cfg.p) {
    if (!(p > 1.0) || std::isinf(p)) throw config_error("norm.p: kernel sweeps need 1 < p < inf");
    const auto rows = region_sweep(n, p, as, bs, Js);
    r.tables["kernels_region_p" + num(p) + ".csv"] = region_sweep_csv(rows);
    json js = json::array();
    for (const auto& row : rows)
      js.push_back({{"a", row.a}, {"b", row.b}, {"J", row.J}, {"estimate", row.estimate}, {"label", row.label}});
    sweeps[num(p)] = js;
  }
  r.data["region_sweeps"] = sweeps;

  // truncation doubling at p = 2
  const std::vector<int> J = cfg.quick() ? std::vector<int>{5, 6} : std::vector<int>{6, 7};
  const TruncationSweep in = truncation_sweep({1.0, 1.0, 2.0}, n, J);
  const TruncationSweep out = truncation_sweep({2.5, 1.0, 2.0}, n, J);
  r.check("(a,b)=(1,1) op norm grows < 5% per doubling", in.growth.back() < kStableGrowth, in.to_json());
  r.check("(a,b)=(2.5,1) op norm grows > 20% per doubling", out.growth.back() > kDivergentGrowth, out.to_json());
  r.data["truncation"] = {in.to_json(), out.to_json()};
  r.data["constants"]["op_norm_(1,1)"] = in.estimates.back();

  std::ostringstream csv;
  csv << "a,b,R,v,w\n";
  json probes = json::array();
  for (const KernelSpec& K : {KernelSpec{1.0, 1.0, 2.0}, KernelSpec{2.5, 1.0, 2.0}, KernelSpec{2.0, 0.5, 2.0}}) {
    const auto pr = necessity_probes(K, n, {8.0, 16.0, 32.0, 64.0});
    const double ev = -Q + K.b, ew = -Q + K.a;
    const bool ok = std::abs(pr.v_slope - ev) <= 0.05 * std::abs(ev) && std::abs(pr.w_slope - ew) <= 0.05 * std::abs(ew);
    r.check("necessity slopes (a,b)=(" + num(K.a) + "," + num(K.b) + ")", ok, pr.to_json());
    probes.push_back(pr.to_json());
    for (size_t i = 0; i < pr.radii.size(); ++i)
      csv << num(K.a) << ',' << num(K.b) << ',' << num(pr.radii[i]) << ',' << num(pr.v[i]) << ',' << num(pr.w[i]) << '\n';
  }
  r.tables["necessity.csv"] = csv.str();
  r.data["necessity"] = probes;

  json neg = json::array();
  for (double a : {-0.5, -1.0, -2.0}) {
    const KernelSpec K{a, 1.0 - a, 2.0};
    const double obs = negative_a_crosscheck(K, n, cfg.quick() ? 500 : 2000, cfg.seed);
    const double C = std::max(1.0, std::pow(2.0, -a - 1.0));
    r.check("negative a comparison a=" + num(a), obs <= C + 1e-12, {{"observed", obs}, {"constant", C}});
    neg.push_back({{"a", a}, {"observed", obs}, {"constant", C}});
  }
  r.data["negative_a"] = neg;
  return r;
}

// ---- inequalities ---------------------------------------------------------------------------

std::vector<FamilyMember> inequality_family(int n, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto bumps = bump_family_params(count, seed);
  std::vector<FamilyMember> fam;
  for (int i = 0; i < count; ++i) {
    FamilyMember m;
    if (i % 2 == 0) {
      m.kind = "bump";
      m.s = -2.0 * U(rng);
      const auto& b = bumps[i];
      m.field = sigma_power_field(n, m.s) * gaussian_ring(n, b.a, b.b, b.w);
    } else {
      m.kind = "power";
      m.s = -0.25 - 2.0 * U(rng);
      m.c = -0.5 + U(rng);
      m.field = sigma_power_profile(n, m.s, m.c);
    }
    fam.push_back(std::move(m));
  }
  return fam;
}

namespace {

int family_size(const RunConfig& cfg) { return cfg.quick() ? 20 : 100; }

GridPtr inequality_grid(const RunConfig& cfg, double scale = 1.0) {
  return grid_of(cfg.n, 1.0, cfg.R_max * scale, cfg.res, true);
}

}  // namespace

SuiteResult embedding_checks(const RunConfig& cfg) {
  SuiteResult r;
  r.suite = "embeddings";
  const GridPtr g1 = inequality_grid(cfg), g2 = inequality_grid(cfg, 2.0);
  const auto fam = inequality_family(cfg.n, family_size(cfg), cfg.seed);
  std::mt19937_64 rng(cfg.seed + 1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::ostringstream csv;
  csv << "member,kind,s,check,p,q,d1,d2,ratio,bound,holds\n";
  int violations = 0, holder_violations = 0, sup_inexact = 0;
  double m1 = 0.0, m2 = 0.0, holder_max = 0.0;
  for (size_t i = 0; i < fam.size(); ++i) {
    const FamilyMember& u = fam[i];
    const double p = 1.0 + 2.0 * U(rng);
    const double q = U(rng) < 0.2 ? kInf : p + 3.0 * U(rng);
    const double d1 = -1.0 + 2.0 * U(rng), d2 = d1 - 0.2 - 1.5 * U(rng);
    const RatioReport a = check_embedding(u.field, p, q, d1, d2, g1), b = check_embedding(u.field, p, q, d1, d2, g2);
    violations += !a.holds + !b.holds;
    if (u.finite_norm(d2)) {
      m1 = std::max(m1, a.ratio);
      m2 = std::max(m2, b.ratio);
    }
    csv << i << ',' << u.kind << ',' << num(u.s) << ",embedding," << num(p) << ',' << num(q) << ',' << num(d1) << ','
        << num(d2) << ',' << num(a.ratio) << ',' << num(a.bound) << ',' << a.holds << '\n';

    // p = q = inf with d2 < d1: sigma^{-d1} <= sigma^{-d2} node by node
    const RatioReport s = check_embedding(u.field, kInf, kInf, 0.0, -1.0, g1);
    sup_inexact += !(s.bound == 1.0 && s.ratio <= 1.0);
    csv << i << ',' << u.kind << ',' << num(u.s) << ",sup,inf,inf,0,-1," << num(s.ratio) << ',' << num(s.bound) << ','
        << (s.ratio <= 1.0) << '\n';

    const FamilyMember& v = fam[(i + 1) % fam.size()];
    const double hq = 2.0 + 3.0 * U(rng), hr = 2.0 + 3.0 * U(rng), hp = 1.0 / (1.0 / hq + 1.0 / hr);
    const double e1 = -U(rng), e2 = -U(rng);
    const RatioReport h = check_holder(u.field, v.field, hp, hq, hr, e1, e2, g1);
    holder_violations += !h.holds;
    holder_max = std::max(holder_max, h.ratio);
    csv << i << ',' << u.kind << ',' << num(u.s) << ",holder," << num(hp) << ',' << num(hq) << ',' << num(e1) << ','
        << num(e2) << ',' << num(h.ratio) << ',' << num(h.bound) << ',' << h.holds << '\n';
  }
  const int N = static_cast<int>(fam.size());
  r.check("embedding holds over the family", violations == 0, {{"members", N}, {"violations", violations}});
  r.check("embedding family constant stable under domain doubling", std::isfinite(m2) && std::abs(m2 / m1 - 1.0) < 0.1,
          {{"sup_ratio", m1}, {"sup_ratio_doubled", m2}});
  r.check("p = inf monotone embedding exact on nodes", sup_inexact == 0, {{"members", N}, {"failures", sup_inexact}});
  r.check("Hoelder holds over the family", holder_violations == 0,
          {{"members", N}, {"violations", holder_violations}, {"max_ratio", holder_max}});
  r.data["constants"]["embedding_sup_ratio"] = m1;
  r.data["constants"]["holder_sup_ratio"] = holder_max;
  r.tables["embeddings.csv"] = csv.str();
  return r;
}

SuiteResult sobolev_checks(const RunConfig& cfg) {
  SuiteResult r;
  r.suite = "sobolev";
  const int Q = cfg.Q();
  const double delta = -1.0;
  const double psup = Q / 2.0 + 1.0;  // Q - 2p < 0
  const SobolevClaim leb{SobolevRegime::Lebesgue, 1, 2.0, 3.0, delta};
  const SobolevClaim sup{SobolevRegime::Sup, 2, psup, psup, delta};
  const SobolevClaim dec{SobolevRegime::Decay, 2, psup, psup, delta};
  const GridPtr g1 = inequality_grid(cfg), g2 = inequality_grid(cfg, 2.0);
  const auto fam = inequality_family(cfg.n, family_size(cfg), cfg.seed);
  std::ostringstream csv;
  csv << "member,kind,s,finite_norm,lebesgue_ratio,sup_ratio,decay_slope,decreasing\n";
  double L1 = 0.0, L2 = 0.0, S1 = 0.0, S2 = 0.0;
  int nonfinite = 0, not_decreasing = 0, finite_members = 0, short_fit = 0;
  json members = json::array();
  for (size_t i = 0; i < fam.size(); ++i) {
    const FamilyMember& u = fam[i];
    const bool fin = u.finite_norm(delta);
    const SobolevReport d = check_sobolev_decay(u.field, dec, g1);
    double lr = 0.0, sr = 0.0;
    if (fin) {
      ++finite_members;
      const SobolevReport l1 = check_sobolev_decay(u.field, leb, g1), l2 = check_sobolev_decay(u.field, leb, g2);
      const SobolevReport s1 = check_sobolev_decay(u.field, sup, g1), s2 = check_sobolev_decay(u.field, sup, g2);
      for (double x : {l1.ratio, l2.ratio, s1.ratio, s2.ratio}) nonfinite += !std::isfinite(x);
      L1 = std::max(L1, l1.ratio);
      L2 = std::max(L2, l2.ratio);
      S1 = std::max(S1, s1.ratio);
      S2 = std::max(S2, s2.ratio);
      lr = l1.ratio;
      sr = s1.ratio;
      not_decreasing += !d.decreasing;
      short_fit += d.radii.size() < 4;
    }
    csv << i << ',' << u.kind << ',' << num(u.s) << ',' << fin << ',' << num(lr) << ',' << num(sr) << ','
        << num(d.slope) << ',' << d.decreasing << '\n';
    members.push_back({{"kind", u.kind}, {"s", u.s}, {"finite_norm", fin}, {"decreasing", d.decreasing}});
  }
  r.check("Sobolev ratios finite", nonfinite == 0, {{"members_checked", finite_members}, {"nonfinite", nonfinite}});
  r.check("Lebesgue-regime constant stable under domain doubling", std::abs(L2 / L1 - 1.0) < 0.1,
          {{"sup_ratio", L1}, {"sup_ratio_doubled", L2}, {"claim", "k=1 p=2 q=3 delta=-1"}});
  r.check("sup-regime constant stable under domain doubling", std::abs(S2 / S1 - 1.0) < 0.1,
          {{"sup_ratio", S1}, {"sup_ratio_doubled", S2}, {"claim", "k=2 p=" + num(psup) + " delta=-1"}});
  r.check("decay surrogate decreasing over 4 dyadic annuli", not_decreasing == 0 && short_fit == 0,
          {{"members_checked", finite_members}, {"not_decreasing", not_decreasing}, {"short_fits", short_fit}});
  r.data["constants"]["sobolev_lebesgue_sup_ratio"] = L1;
  r.data["constants"]["sobolev_sup_sup_ratio"] = S1;
  r.data["sobolev_members"] = members;
  r.tables["sobolev.csv"] = csv.str();
  return r;
}

// ---- Fredholm -------------------------------------------------------------------------------

SuiteResult fredholm_checks(const RunConfig& cfg) {
  SuiteResult r;
  r.suite = "fredholm";
  if (cfg.n != 1) throw config_error("run.n: the finite-difference probe supports n = 1 only");
  const std::vector<int> N = cfg.quick() ? std::vector<int>{5, 9, 17} : cfg.refinements;
  const double p = cfg.fredholm_p, d = cfg.fredholm_delta;
  const FredholmProbe fp = fredholm_probe(SubellipticOperator::flat(1), p, d, N, cfg.box_L);
  const auto& h = fp.sigma_min_history;
  const double lo = *std::min_element(h.begin(), h.end()), hi = *std::max_element(h.begin(), h.end());
  r.check("sigma_min bounded below (varies < 2x)", lo > 0.0 && hi < 2.0 * lo, {{"sigma_min", h}});
  r.check("flat kernel trivial", fp.N_P == 0 && fp.N_Pstar == 0, {{"N_P", fp.N_P}, {"N_Pstar", fp.N_Pstar}});
  r.check("flat index zero", fp.index == 0, {{"index", fp.index}});
  const double expect = 2.0 - cfg.Q() - d;
  r.check("dual weight arithmetic exact", fp.delta_star == expect, {{"delta_star", fp.delta_star}, {"expected", expect}});
  r.data["flat"] = fp.to_json();
  r.data["constants"]["sigma_min_finest"] = h.back();

  if (cfg.op == "af") {
    const SubellipticOperator P = configured_operator(cfg);
    const FredholmProbe pp = fredholm_probe(P, p, d, N, cfg.box_L);
    r.check("blow-up operator index zero", pp.index == 0 && pp.N_P == 0, pp.to_json());
    r.data["af"] = pp.to_json();
  }
  std::ostringstream csv;
  csv << "N,sigma_min,sigma_min_star\n";
  for (size_t i = 0; i < N.size(); ++i)
    csv << N[i] << ',' << num(fp.sigma_min_history[i]) << ',' << num(fp.sigma_min_star_history[i]) << '\n';
  r.tables["fredholm.csv"] = csv.str();
  return r;
}

// ---- blow-up model --------------------------------------------------------------------------

SuiteResult af_checks(const RunConfig& cfg) {
  SuiteResult r;
  r.suite = "af";
  const int n = cfg.n;
  const AFModel m{n, cfg.A_p, cfg.a_n, cfg.rho_0};
  m.validate();
  r.data["model"] = m.to_json();
  r.check("leading coefficient 4 c~_n A_p", m.leading() == 4.0 * (2.0 * M_PI / (n * cfg.a_n)) * cfg.A_p,
          {{"leading", m.leading()}});

  const SubellipticOperator P = build_perturbed_sublaplacian(m, cfg.tau, cfg.q_exp());
  const GridPtr g = grid_of(n, cfg.rho_0, 64.0 * cfg.rho_0, {4, 8, 8}, true);
  const AsymptoticReport ar = validate_asymptotic(P, g, cfg.seed);
  r.check("perturbed sub-Laplacian asymptotic to flat", ar.pass && ar.elliptic, ar.to_json());
  r.data["asymptotic"] = ar.to_json();
  r.data["constants"]["lambda"] = P.lambda;
  r.data["constants"]["C1"] = P.C1;

  bool threw = false;
  try {
    build_perturbed_sublaplacian(m, 2.0 * n, cfg.q_exp());
  } catch (const std::invalid_argument&) {
    threw = true;
  }
  r.check("tau = 2n rejected", threw);

  // model coefficient against the field on rho >= rho_0, and the frame expansion
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double coef_err = 0.0, defect_err = 0.0;
  bool orders = true;
  const Field bf = blowup_field(m);
  for (int k = 0; k < 50; ++k) {
    HPoint<double> x(n);
    for (int i = 0; i < 2 * n + 1; ++i) x.coord(i) = U(rng);
    const double R = cfg.rho_0 * std::pow(2.0, 1 + k % 5) / rho(x);
    x = dilate(R, x);
    coef_err = std::max(coef_err, std::abs(blowup_coefficient(m, x) - bf(x)));
    const FrameExpansion fe = frame_expansion(m, x);
    defect_err = std::max(defect_err, std::abs(fe.frame * fe.coframe - 1.0 - fe.product_defect));
    orders = orders && fe.remainder_order == 2 * n + 1 && fe.cross_remainder_order == 2 * n + 2;
  }
  r.check("blow-up field equals the model coefficient on rho >= rho_0", coef_err <= 1e-14, {{"max_error", coef_err}});
  r.check("frame expansion product defect", defect_err <= 1e-15 && orders, {{"max_error", defect_err}});

  const auto claims = model_decay_claims(m);
  const auto res = validate_decay(claims, model_decay_fields(m), n);
  std::ostringstream csv;
  csv << "field,s,R,sup\n";
  json dj = json::array();
  for (const auto& d : res) {
    r.check("decay " + d.claim.field, d.pass, d.to_json());
    dj.push_back(d.to_json());
    for (size_t i = 0; i < d.claim.radii.size(); ++i)
      csv << d.claim.field << ',' << num(d.claim.s) << ',' << num(d.claim.radii[i]) << ',' << num(d.sup_values[i]) << '\n';
  }
  r.data["decay"] = dj;
  r.tables["af_decay.csv"] = csv.str();
  return r;
}

// ---- Clifford -------------------------------------------------------------------------------

SuiteResult clifford_checks(const RunConfig& cfg) {
  SuiteResult r;
  r.suite = "clifford";
  json reps = json::array();
  for (int n = 1; n <= 3; ++n) {
    const CliffordRep rep = build_rep(n);
    const CliffordChecks c = check_rep(rep);
    const std::string sn = " n=" + std::to_string(n);
    r.check("Clifford relations" + sn, c.relations, c.to_json());
    r.check("parity reversing generators" + sn, c.parity_reversing && c.quadratic_parity && c.even_dim == c.odd_dim,
            c.to_json());
    const WeitzenbockTerm w = weitzenbock_term(rep);
    r.check("Omega skew with imaginary spectrum" + sn, w.skew_hermitian && w.imaginary_spectrum && w.preserves_parity,
            w.to_json());
    reps.push_back({{"n", n}, {"checks", c.to_json()}, {"weitzenbock", w.to_json()}});
    if (n == 2) {
      r.check("n=2 even spectrum computed exactly", w.spectrum_even.eigenvalues.has_value(), w.to_json()["spectrum_even"]);
      r.data["omega_even_spectrum_n2"] = w.to_json()["spectrum_even"];
    }
  }
  r.data["representations"] = reps;
  for (int n : {1, 2}) {
    const PrincipalPartReport pp = principal_part_check(n, cfg.seed, 6);
    r.check("spinor Laplacian principal part n=" + std::to_string(n), pp.pass, pp.to_json());
    r.data["principal_part_n" + std::to_string(n)] = pp.to_json();
  }
  return r;
}

// ---- orchestration --------------------------------------------------------------------------

std::vector<std::string> suite_names() {
  return {"group", "scaling", "embeddings", "sobolev", "kernels-region", "solver", "fredholm", "af", "clifford"};
}

SuiteResult run_suite(const std::string& name, const RunConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  SuiteResult r;
  if (name == "group") {
    r = group_checks(cfg);
  } else if (name == "scaling") {
    r = scaling_checks(cfg);
  } else if (name == "embeddings") {
    r = embedding_checks(cfg);
  } else if (name == "sobolev") {
    r = sobolev_checks(cfg);
  } else if (name == "kernels-region") {
    r = kernel_region_checks(cfg);
  } else if (name == "solver") {
    r.absorb(harmonicity_checks(cfg));
    r.absorb(fundamental_checks(cfg));
    r.absorb(perturbed_solve_checks(cfg));
    r.absorb(estimate_checks(cfg));
  } else if (name == "fredholm") {
    r = fredholm_checks(cfg);
  } else if (name == "af") {
    r = af_checks(cfg);
  } else if (name == "clifford") {
    r = clifford_checks(cfg);
  } else {
    throw config_error("unknown suite '" + name + "'");
  }
  r.suite = name;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// ---- solve ----------------------------------------------------------------------------------

json grid_function_to_json(const GridFunctionD& f) {
  return {{"kind", "GridFunction"},
          {"schema_version", kSchemaVersion},
          {"grid", f.grid->to_json()},
          {"values", std::vector<double>(f.values.data(), f.values.data() + f.size())}};
}

GridFunctionD grid_function_from_json(const json& j) {
  if (!j.is_object() || j.value("kind", "") != "GridFunction")
    throw std::invalid_argument("not a serialized GridFunction");
  auto g = std::make_shared<AnnularGrid>(AnnularGrid::from_json(j.at("grid")));
  const auto v = j.at("values").get<std::vector<double>>();
  return GridFunctionD(g, Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

SolveOutput run_solve(const RunConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const int n = cfg.n;
  const double c0 = cached_c0(n);
  const SolveOptions o = solve_options(cfg);
  json payload = {{"schema_version", kSchemaVersion},
                  {"kind", "solve"},
                  {"test_library", kTestLibraryVersion},
                  {"config", cfg.to_json()}};
  SolveOutput out;
  if (cfg.f.ends_with(".json")) {
    if (cfg.op != "flat") throw config_error("solve.f: serialized grid functions need operator.kind = flat");
    std::ifstream in(cfg.f);
    if (!in) throw config_error("solve.f: cannot open '" + cfg.f + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw config_error("solve.f: " + std::string(e.what()));
    }
    GridFunctionD fs;
    try {
      fs = grid_function_from_json(j);
    } catch (const std::exception& e) {
      throw config_error("solve.f: " + std::string(e.what()));
    }
    if (fs.grid->n != n) throw config_error("solve.f: grid dimension differs from run.n");
    o.validate(n);
    const GridPtr g = make_grid(o.check_grid(n));
    Eigen::VectorXd u(g->size());
    for (int i = 0; i < g->size(); ++i) u(i) = convolve_k0(fs, c0, g->point(i));
    const GridFunctionD ug(g, u);
    const NormSpec s = norm_spec(0, o.p, o.delta);
    payload["operator"] = SubellipticOperator::flat(n).to_json();
    payload["rhs"] = {{"source", "grid_function"}, {"nodes", fs.size()}};
    payload["report"] = {{"method", "convolve_k0"},
                         {"n", n},
                         {"p", o.p},
                         {"delta", o.delta},
                         {"u_norm", weighted_norm(ug, s).value},
                         {"u_nodes", g->size()},
                         {"converged", true}};
    payload["pass"] = true;
    payload["solution"] = grid_function_to_json(ug)["values"];
    out.history_csv = "iteration,residual,contraction\n";
  } else {
    const Field f = named_test_function(cfg.f, n);
    const SubellipticOperator P = configured_operator(cfg);
    const SolveReport rep = cfg.op == "flat" ? solve_flat(f, n, c0, o) : solve_perturbed(P, f, c0, o);
    payload["operator"] = P.to_json();
    payload["rhs"] = {{"source", "named"}, {"name", cfg.f}};
    payload["report"] = rep.to_json();
    payload["pass"] = rep.converged && rep.residual_norm <= o.tol * rep.f_norm;
    payload["solution"] = grid_function_to_json(rep.u)["values"];
    out.history_csv = rep.history_csv();
  }
  out.payload = payload;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// ---- reports --------------------------------------------------------------------------------

json read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw report_error("cannot open report '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw report_error("malformed report '" + path + "': " + e.what());
  }
  return j;
}

MergedReport merge_reports(const std::vector<std::pair<std::string, json>>& reports) {
  MergedReport out;
  if (reports.empty()) return out;
  for (const auto& [label, j] : reports) {
    if (!j.is_object() || !j.contains("schema_version") || !j["schema_version"].is_number_integer() ||
        !j.contains("kind"))
      throw report_error("malformed report '" + label + "': missing schema_version or kind");
    const std::string kind = j["kind"].get<std::string>();
    if (kind != "verify" && kind != "solve") throw report_error("malformed report '" + label + "': unknown kind '" + kind + "'");
    if (kind == "verify" && (!j.contains("assertions") || !j["assertions"].is_array()))
      throw report_error("malformed report '" + label + "': missing assertions");
  }
  const int v0 = reports.front().second["schema_version"].get<int>();
  for (const auto& [label, j] : reports) {
    const int v = j["schema_version"].get<int>();
    if (v != v0 || v != kSchemaVersion)
      out.warnings.push_back("schema_version conflict: '" + label + "' has " + std::to_string(v) + ", '" +
                             reports.front().first + "' has " + std::to_string(v0) + ", this build writes " +
                             std::to_string(kSchemaVersion));
  }
  const std::string lib0 = reports.front().second.value("test_library", "");
  for (const auto& [label, j] : reports)
    if (j.value("test_library", "") != lib0)
      out.warnings.push_back("test-function library conflict: '" + label + "' uses " + j.value("test_library", "?") +
                             ", '" + reports.front().first + "' uses " + lib0);

  std::ostringstream md;
  md << "# Verification summary\n\n";
  md << "## Pass/fail matrix\n\n| report | suite | assertion | result |\n|---|---|---|---|\n";
  int passed = 0, total = 0;
  for (const auto& [label, j] : reports) {
    if (j["kind"] == "solve") {
      const bool ok = j.value("pass", false);
      md << "| " << label << " | solve | converged within tolerance | " << (ok ? "PASS" : "FAIL") << " |\n";
      passed += ok;
      ++total;
      continue;
    }
    for (const auto& a : j["assertions"]) {
      const bool ok = a.value("pass", false);
      md << "| " << label << " | " << j.value("suite", "?") << " | " << a.value("name", "?") << " | "
         << (ok ? "PASS" : "FAIL") << " |\n";
      passed += ok;
      ++total;
    }
  }
  md << "\n" << passed << " of " << total << " assertions pass.\n";

  std::ostringstream consts;
  for (const auto& [label, j] : reports) {
    if (j.contains("data") && j["data"].contains("constants"))
      for (const auto& [k, v] : j["data"]["constants"].items())
        consts << "| " << label << " | " << j.value("suite", "?") << " | " << k << " | " << v.dump() << " |\n";
    if (j["kind"] == "solve" && j.contains("report") && j["report"].contains("estimate_constants"))
      for (const auto& [k, v] : j["report"]["estimate_constants"].items())
        consts << "| " << label << " | solve | " << k << " | " << v.dump() << " |\n";
  }
  if (!consts.str().empty())
    md << "\n## Empirical constants\n\n| report | suite | constant | value |\n|---|---|---|---|\n" << consts.str();

  using Key = std::tuple<double, double, double, int, std::string, std::string>;
  std::vector<std::pair<Key, double>> rows;
  for (const auto& [label, j] : reports) {
    if (!j.contains("data") || !j["data"].contains("scaling_rows")) continue;
    for (const auto& s : j["data"]["scaling_rows"])
      rows.push_back({{s.at("p").get<double>(), s.at("delta").get<double>(), s.at("R").get<double>(), s.at("k").get<int>(),
                       s.at("function").get<std::string>(), label},
                      s.at("ratio").get<double>()});
  }
  if (!rows.empty()) {
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    md << "\n## Scaling identity\n\n| p | delta | R | k | function | ratio | report |\n|---|---|---|---|---|---|---|\n";
    for (const auto& [k, v] : rows)
      md << "| " << num(std::get<0>(k)) << " | " << num(std::get<1>(k)) << " | " << num(std::get<2>(k)) << " | "
         << std::get<3>(k) << " | " << std::get<4>(k) << " | " << num(v) << " | " << std::get<5>(k) << " |\n";
  }
  if (!out.warnings.empty()) {
    md << "\n## Warnings\n\n";
    for (const auto& w : out.warnings) md << "- " << w << "\n";
  }
  out.markdown = md.str();
  return out;
}

// ---- files --------------------------------------------------------------------------------

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

json with_run_info(json payload, double seconds) {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ts;
  ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  payload["run_info"] = {{"timestamp", ts.str()}, {"seconds", seconds}};
  return payload;
}

json strip_run_info(json report) {
  report.erase("run_info");
  return report;
}

}  // namespace heis
