#include "heis/solver.hpp"

#include <sstream>

namespace heis {

namespace {

nlohmann::json num(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(std::isnan(v) ? "nan" : "inf");
}

NormSpec lp(double p, double delta, Flavor fl = Flavor::Sigma, Region r = Region::all()) {
  NormSpec s;
  s.p = p;
  s.delta = delta;
  s.flavor = fl;
  s.region = r;
  return s;
}

double norm_of(const GridPtr& g, const Eigen::VectorXd& v, const NormSpec& s) {
  return weighted_norm_of_values(g, v.cwiseAbs(), s).value;
}

// Per-node value, |nabla u|, |nabla^2 u| and Lap u of u = K_0 g.
struct NodeJets {
  Eigen::VectorXd value, d1, d2, lap;
};

NodeJets node_jets(const K0Convolver& K0, const AnnularGrid& g) {
  NodeJets r;
  const int N = g.size();
  r.value.resize(N);
  r.d1.resize(N);
  r.d2.resize(N);
  r.lap.resize(N);
  for (int i = 0; i < N; ++i) {
    const auto fj = K0.frame(g.point(i));
    r.value(i) = fj.value;
    r.d1(i) = fj.d1.norm();
    r.d2(i) = fj.d2.norm();
    r.lap(i) = fj.d2.trace();
  }
  return r;
}

double injectivity_ratio(const GridPtr& g, const NodeJets& J, double p, double delta, double rmin) {
  const Region ext = Region::exterior(rmin);
  const double lhs = norm_of(g, J.value, lp(p, delta, Flavor::Rho, ext)) +
                     norm_of(g, J.d1, lp(p, delta - 1.0, Flavor::Rho, ext)) +
                     norm_of(g, J.d2, lp(p, delta - 2.0, Flavor::Rho, ext));
  const double rhs = norm_of(g, J.lap, lp(p, delta - 2.0, Flavor::Rho, ext));
  return rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? kInf : 0.0);
}

}  // namespace

GridOptions SolveOptions::check_grid(int n) const {
  GridOptions o;
  o.n = n;
  o.r_min = check_rmin;
  o.R_max = check_Rmax;
  o.core = true;
  o.res = check_res;
  return o;
}

void SolveOptions::validate(int n) const {
  if (!(delta > -2.0 * n && delta < 0.0)) throw std::invalid_argument("solve: delta must lie in (-2n, 0)");
  if (!(p > 1.0) || std::isinf(p)) throw std::invalid_argument("solve: need 1 < p < inf");
  if (!(tol > 0.0)) throw std::invalid_argument("solve: tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("solve: max_iter must be >= 1");
}

nlohmann::json SolveReport::to_json() const {
  return {{"method", method},
          {"n", n},
          {"p", p},
          {"delta", delta},
          {"f_norm", num(f_norm)},
          {"residual_norm", num(residual_norm)},
          {"quadrature_residual", num(quadrature_residual)},
          {"iterations", iterations},
          {"residual_history", residual_history},
          {"contraction_history", contraction_history},
          {"converged", converged},
          {"estimate_constants",
           {{"C_K0", num(C_K0)},
            {"R0", R0},
            {"tail_norm", num(tail_norm)},
            {"interior_term", num(interior_term)},
            {"contraction_bound", num(contraction_bound)},
            {"max_contraction", num(max_contraction)},
            {"contraction_within_bound", max_contraction <= contraction_bound},
            {"injectivity_constant", num(injectivity_constant)}}},
          {"tail_share", tail_share},
          {"u_nodes", u.size()}};
}

std::string SolveReport::history_csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "iteration,residual,contraction\n";
  for (size_t i = 0; i < residual_history.size(); ++i) {
    os << i << ',' << residual_history[i] << ',';
    if (i > 0 && i - 1 < contraction_history.size()) os << contraction_history[i - 1];
    os << '\n';
  }
  return os.str();
}

SolveReport solve_flat(const Field& f, int n, double c0, const SolveOptions& opt) {
  opt.validate(n);
  const GridPtr g = make_grid(opt.check_grid(n));
  SolveReport rep;
  rep.method = "flat";
  rep.n = n;
  rep.p = opt.p;
  rep.delta = opt.delta;
  rep.iterations = 1;
  rep.converged = true;
  const GridFunctionD fs = sample(f, g);
  rep.f_norm = norm_of(g, fs.values, lp(opt.p, opt.delta - 2.0));
  rep.residual_history = {0.0};
  if (f.is_zero() || rep.f_norm == 0.0) {
    rep.u_field = Field::zero();
    rep.u = GridFunctionD(g, Eigen::VectorXd::Zero(g->size()));
    return rep;
  }
  const K0Convolver K0(f, n, c0, opt.k0);
  rep.tail_share = K0.tail_share();
  rep.u_field = K0.as_field();
  const NodeJets J = node_jets(K0, *g);
  rep.u = GridFunctionD(g, J.value);
  rep.quadrature_residual = norm_of(g, J.lap - fs.values, lp(opt.p, opt.delta - 2.0));
  rep.injectivity_constant = injectivity_ratio(g, J, opt.p, opt.delta, opt.check_rmin);
  return rep;
}

AbsorptionBound absorption_bound(const SubellipticOperator& P, double c0, const SolveOptions& opt, const GridPtr& grid) {
  AbsorptionBound ab;
  ab.C_K0 = k0_bound(P.n, c0, opt.p, opt.delta, opt.kernel_J);
  for (double R0 : opt.R0_candidates) {
    if (R0 < 1.0 || R0 >= grid->levels.back().hi) continue;
    const double t = tail_op_norm(P, R0, grid), in = interior_deviation(P, R0, grid);
    const double b = ab.C_K0 * (t + in);
    if (b < ab.bound) {
      ab.bound = b;
      ab.R0 = R0;
      ab.tail = t;
      ab.interior = in;
    }
  }
  return ab;
}

namespace {

GridPtr default_validation_grid(int n) {
  GridOptions o;
  o.n = n;
  o.r_min = 1.0;
  o.R_max = 256.0;
  o.core = true;
  o.res = {4, 8, 8};
  return make_grid(o);
}

// S_M(beta) = sum_{k=0}^{M} (1 - beta)^k: g_M = S_M(beta) f.
template <typename S>
S geometric_sum(const S& beta, int M) {
  const S q = 1.0 - beta;
  S s(1.0), pw(1.0);
  for (int k = 0; k < M; ++k) {
    pw = pw * q;
    s = s + pw;
  }
  return s;
}

Field density_multiplier(const Field& beta, int M) {
  return Field(
      "S_" + std::to_string(M) + "(" + beta.name() + ")",
      [beta, M](const HPoint<double>& p) { return geometric_sum(beta(p), M); },
      [beta, M](const HPoint<J1>& p) { return geometric_sum(beta(p), M); });
}

}  // namespace

SolveReport solve_perturbed(const SubellipticOperator& P, const Field& f, double c0, const SolveOptions& opt,
                            const GridPtr& validation_grid) {
  opt.validate(P.n);
  P.check();
  if (!(P.isotropic() && !P.has_b() && !P.has_c()))
    throw std::invalid_argument("solve_perturbed: supports a = beta I with b = c = 0; use fd_solve for '" + P.name + "'");
  const int n = P.n;
  const GridPtr vg = validation_grid ? validation_grid : default_validation_grid(n);
  const AsymptoticReport ar = validate_asymptotic(P, vg);
  if (!ar.pass)
    throw precondition_error("solve_perturbed: operator '" + P.name + "' fails asymptotic validation: " + ar.to_json().dump());
  const AbsorptionBound ab = absorption_bound(P, c0, opt, vg);
  if (!(ab.bound < 1.0))
    throw precondition_error("solve_perturbed: absorption bound C_K0 (tail + interior) = " + std::to_string(ab.bound) +
                             " >= 1 for every R0");

  SolveReport rep;
  rep.method = "perturbed";
  rep.n = n;
  rep.p = opt.p;
  rep.delta = opt.delta;
  rep.C_K0 = ab.C_K0;
  rep.R0 = ab.R0;
  rep.tail_norm = ab.tail;
  rep.interior_term = ab.interior;
  rep.contraction_bound = ab.bound;

  const GridPtr g = make_grid(opt.check_grid(n));
  const Field beta = P.a.empty() ? Field::constant(1.0) : P.a[0];
  const Eigen::VectorXd fv = sample(f, g).values, bv = sample(beta, g).values;
  const NormSpec rs = lp(opt.p, opt.delta - 2.0);
  rep.f_norm = norm_of(g, fv, rs);
  if (f.is_zero() || rep.f_norm == 0.0) {
    rep.u_field = Field::zero();
    rep.u = GridFunctionD(g, Eigen::VectorXd::Zero(g->size()));
    rep.converged = true;
    rep.residual_history = {0.0};
    return rep;
  }

  // P K_0 g = beta g exactly, so the iteration acts on densities node by node.
  Eigen::VectorXd dens = fv;
  int M = 0;
  double r = norm_of(g, fv - bv.cwiseProduct(dens), rs);
  rep.residual_history.push_back(r);
  while (r >= opt.tol * rep.f_norm && M < opt.max_iter) {
    dens += fv - bv.cwiseProduct(dens);
    ++M;
    const double rn = norm_of(g, fv - bv.cwiseProduct(dens), rs);
    rep.contraction_history.push_back(r > 0.0 ? rn / r : 0.0);
    rep.residual_history.push_back(rn);
    r = rn;
  }
  rep.iterations = M + 1;
  rep.residual_norm = r;
  rep.converged = r < opt.tol * rep.f_norm;
  for (double c : rep.contraction_history) rep.max_contraction = std::max(rep.max_contraction, c);
  if (!rep.converged) {
    std::ostringstream os;
    os << "solve_perturbed: no convergence in " << opt.max_iter << " iterations; residual history";
    for (double h : rep.residual_history) os << ' ' << h;
    throw convergence_error(os.str());
  }

  const Field gfield = f * density_multiplier(beta, M);
  const K0Convolver K0(gfield, n, c0, opt.k0);
  rep.tail_share = K0.tail_share();
  rep.u_field = K0.as_field();
  const NodeJets J = node_jets(K0, *g);
  rep.u = GridFunctionD(g, J.value);
  rep.quadrature_residual = norm_of(g, bv.cwiseProduct(J.lap) - fv, rs);
  rep.injectivity_constant = injectivity_ratio(g, J, opt.p, opt.delta, opt.check_rmin);
  return rep;
}

// ---- empirical constants -------------------------------------------------------------------

nlohmann::json ConstantEstimate::to_json() const {
  static const char* names[] = {"injectivity", "weighted", "scale_broken"};
  return {{"kind", names[static_cast<int>(kind)]},
          {"p", p},
          {"delta", delta},
          {"R", R},
          {"ratios", ratios},
          {"C", num(C)},
          {"C_half", num(C_half)},
          {"stable", stable}};
}

ConstantEstimate estimate_constant(EstimateKind kind, const SubellipticOperator& P, const std::vector<Field>& family,
                                   double p, double delta, const GridPtr& grid, double R) {
  if (family.size() < 2) throw std::invalid_argument("estimate_constant: family needs at least two members");
  if (kind == EstimateKind::ScaleBroken && !(R > 0.0)) throw std::invalid_argument("estimate_constant: R must be positive");
  const int Q = homogeneous_dimension(P.n);
  ConstantEstimate ce;
  ce.kind = kind;
  ce.p = p;
  ce.delta = delta;
  ce.R = R;
  const Flavor fl = kind == EstimateKind::Injectivity ? Flavor::Rho : Flavor::Sigma;
  for (const Field& u : family) {
    NormSpec s = lp(p, delta, fl);
    s.k = 2;
    const double lhs = fs_norm(u, s, grid).value;
    double rhs;
    if (kind == EstimateKind::Injectivity) {
      rhs = weighted_norm(sublaplacian(u), lp(p, delta - 2.0, fl), grid).value;
    } else {
      rhs = weighted_norm(apply(P, u), lp(p, delta - 2.0), grid).value;
      rhs += kind == EstimateKind::Weighted ? weighted_norm(u, lp(p, delta), grid).value
                                            : weighted_norm(u, lp(p, -Q / p, Flavor::Sigma, Region::ball(R)), grid).value;
    }
    ce.ratios.push_back(rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? kInf : 0.0));
  }
  const size_t half = ce.ratios.size() / 2;
  for (size_t i = 0; i < ce.ratios.size(); ++i) {
    ce.C = std::max(ce.C, ce.ratios[i]);
    if (i < half) ce.C_half = std::max(ce.C_half, ce.ratios[i]);
  }
  ce.stable = std::isfinite(ce.C) && ce.C <= 1.1 * ce.C_half;
  return ce;
}

nlohmann::json ScaleBrokenConstants::to_json() const { return {{"R", R}, {"estimate", estimate.to_json()}}; }

ScaleBrokenConstants scale_broken_constants(const SubellipticOperator& P, double c0, const std::vector<Field>& family,
                                            double p, double delta, const GridPtr& grid) {
  const double CK = k0_bound(P.n, c0, p, delta);
  ScaleBrokenConstants out;
  const double top = grid->levels.back().hi;
  out.R = top;
  for (double R = 1.0; R < top; R *= 2.0) {
    if (CK * tail_op_norm(P, R, grid) <= 0.5) {
      out.R = R;
      break;
    }
  }
  out.estimate = estimate_constant(EstimateKind::ScaleBroken, P, family, p, delta, grid, out.R);
  return out;
}

// ---- maximum principle ------------------------------------------------------------------------

nlohmann::json MaxPrincipleReport::to_json() const {
  return {{"interior_max", interior_max},     {"interior_min", interior_min},   {"boundary_max", boundary_max},
          {"boundary_min", boundary_min},     {"residual_above", residual_above}, {"residual_below", residual_below},
          {"slack", slack},                   {"sign", sign},                   {"pass", pass}};
}

MaxPrincipleReport maximum_principle_check(const SubellipticOperator& P, const GridFunctionD& u, const Eigen::VectorXd& Pu) {
  const AnnularGrid& g = *u.grid;
  if (Pu.size() != g.size()) throw std::invalid_argument("maximum_principle_check: residual size mismatch");
  if (P.has_c()) {
    const Eigen::VectorXd c = sample(P.c_field(), u.grid).values;
    if (c.maxCoeff() > 0.0) throw std::invalid_argument("maximum_principle_check: requires c <= 0");
  }
  const auto& bl = g.levels.back();
  MaxPrincipleReport r;
  r.interior_max = r.boundary_max = -kInf;
  r.interior_min = r.boundary_min = kInf;
  double z2 = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    const double v = u.values(i);
    if (i >= bl.first && i < bl.first + bl.count) {
      r.boundary_max = std::max(r.boundary_max, v);
      r.boundary_min = std::min(r.boundary_min, v);
      continue;
    }
    r.interior_max = std::max(r.interior_max, v);
    r.interior_min = std::min(r.interior_min, v);
    r.residual_above = std::max(r.residual_above, Pu(i));
    r.residual_below = std::max(r.residual_below, -Pu(i));
    double zz = 0.0;
    for (int j = 0; j < 2 * g.n; ++j) zz += g.nodes(j, i) * g.nodes(j, i);
    z2 = std::max(z2, zz);
  }
  const double lam = P.lambda > 0.0 ? P.lambda : 1.0;
  const double barrier = z2 / (4.0 * g.n * lam);
  const double up = r.residual_below * barrier, down = r.residual_above * barrier;
  r.slack = std::max(up, down);
  const double eps = 1e-12 * std::max(1.0, u.values.cwiseAbs().maxCoeff());
  r.pass = r.interior_max <= std::max(r.boundary_max, 0.0) + up + eps &&
           r.interior_min >= std::min(r.boundary_min, 0.0) - down - eps;
  const bool nonneg = u.values.minCoeff() >= 0.0, nonpos = u.values.maxCoeff() <= 0.0;
  r.sign = nonneg && !nonpos ? 1 : (nonpos && !nonneg ? -1 : 0);
  return r;
}

MaxPrincipleReport maximum_principle_check(const SubellipticOperator& P, const Field& u, const GridPtr& grid) {
  const Field Pu = apply(P, u);
  return maximum_principle_check(P, sample(u, grid), sample(Pu, grid).values);
}

}  // namespace heis
