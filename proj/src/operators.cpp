#include "heis/operators.hpp"

#include <Eigen/Eigenvalues>

#include <random>

namespace heis {

SubellipticOperator SubellipticOperator::flat(int n) {
  SubellipticOperator P;
  P.n = n;
  P.name = "flat";
  return P;
}

Field SubellipticOperator::a_entry(int i, int j) const {
  const int m = 2 * n;
  if (i < 0 || j < 0 || i >= m || j >= m) throw std::out_of_range("a_entry: index out of range");
  if (a.empty()) return Field::constant(i == j ? 1.0 : 0.0);
  if (a.size() == 1) return i == j ? a[0] : Field::zero();
  return a[i * m + j];
}

Field SubellipticOperator::beta() const {
  if (!isotropic()) throw std::logic_error("operator '" + name + "' is not isotropic");
  return a.empty() ? Field::constant(1.0) : a[0];
}

void SubellipticOperator::check() const {
  const size_t m = 2 * n;
  if (n < 1) throw std::invalid_argument("operator: n must be >= 1");
  if (!(a.size() <= 1 || a.size() == m * m)) throw std::invalid_argument("operator: a needs 0, 1 or (2n)^2 entries");
  if (!(b.empty() || b.size() == m)) throw std::invalid_argument("operator: b needs 0 or 2n entries");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("operator: lambda must lie in (0, 1]");
  if (!(tau >= 0.0)) throw std::invalid_argument("operator: tau must be >= 0");
  if (!(q() > homogeneous_dimension(n))) throw std::invalid_argument("operator: q must exceed Q");
}

nlohmann::json SubellipticOperator::to_json() const {
  std::vector<std::string> an, bn;
  for (const auto& f : a) an.push_back(f.name());
  for (const auto& f : b) bn.push_back(f.name());
  return {{"name", name},
          {"n", n},
          {"structure", is_flat() ? "flat" : (isotropic() ? "isotropic" : "general")},
          {"a", an},
          {"b", bn},
          {"c", has_c() ? c.name() : "0"},
          {"lambda", lambda},
          {"tau", tau},
          {"q", q()},
          {"C1", C1}};
}

namespace {

template <typename S, typename U>
S apply_jet(const SubellipticOperator& P, const U& u, const HPoint<S>& p) {
  const FrameJet<S> fj = frame_jet(u, p);
  const int m = 2 * P.n;
  S r(0.0);
  if (P.isotropic()) {
    S tr(0.0);
    for (int i = 0; i < m; ++i) tr = tr + fj.d2(i, i);
    r = P.a.empty() ? tr : P.a[0](p) * tr;
  } else {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) r = r + P.a[i * m + j](p) * fj.d2(i, j);
  }
  for (size_t i = 0; i < P.b.size(); ++i) r = r + P.b[i](p) * fj.d1(static_cast<int>(i));
  if (P.has_c()) r = r + P.c(p) * fj.value;
  return r;
}

bool coefficients_have_jets(const SubellipticOperator& P) {
  for (const auto& f : P.a)
    if (!f.has_jets()) return false;
  for (const auto& f : P.b)
    if (!f.has_jets()) return false;
  return !P.has_c() || P.c.has_jets();
}

bool coefficients_singular(const SubellipticOperator& P) {
  for (const auto& f : P.a)
    if (f.singular_at_origin()) return true;
  for (const auto& f : P.b)
    if (f.singular_at_origin()) return true;
  return P.has_c() && P.c.singular_at_origin();
}

}  // namespace

double apply_at(const SubellipticOperator& P, const Field& u, const HPoint<double>& x) {
  check_same_dim(P.n, x.n());
  return apply_jet(P, u(seed<J1>(x)), x);
}

Field apply(const SubellipticOperator& P, const Field& u) {
  P.check();
  if (P.is_flat()) return sublaplacian(u);
  Field::F0 f0 = [P, u](const HPoint<double>& x) { return apply_jet(P, u(seed<J1>(x)), x); };
  Field::F1 f1;
  if (u.jet_order() >= 4 && coefficients_have_jets(P))
    f1 = [P, u](const HPoint<J1>& x) { return apply_jet(P, u(lift(x)), x); };
  Field r(P.name + "(" + u.name() + ")", std::move(f0), std::move(f1));
  r.mark_singular(u.singular_at_origin() || coefficients_singular(P));
  return r;
}

Eigen::MatrixXd coefficient_matrix(const SubellipticOperator& P, const HPoint<double>& x) {
  const int m = 2 * P.n;
  if (P.a.empty()) return Eigen::MatrixXd::Identity(m, m);
  if (P.a.size() == 1) return P.a[0](x) * Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd M(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) M(i, j) = P.a[i * m + j](x);
  return M;
}

namespace {

// |a - I|_op at x.
double deviation_op(const SubellipticOperator& P, const HPoint<double>& x) {
  if (P.a.empty()) return 0.0;
  if (P.a.size() == 1) return std::abs(P.a[0](x) - 1.0);
  const int m = 2 * P.n;
  const Eigen::MatrixXd D = coefficient_matrix(P, x) - Eigen::MatrixXd::Identity(m, m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (D + D.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Per-node |a - I| and |nabla a| in Frobenius norm.
Eigen::MatrixXd deviation_magnitudes(const SubellipticOperator& P, const AnnularGrid& g) {
  const int N = g.size(), m = 2 * P.n;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(N, 2);
  if (P.a.empty()) return out;
  if (P.a.size() == 1) {
    const Field dev = P.a[0] - Field::constant(1.0);
    out = derivative_magnitudes(dev, g, 1) * std::sqrt(static_cast<double>(m));
    return out;
  }
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      const Field dev = i == j ? P.a[i * m + j] - Field::constant(1.0) : P.a[i * m + j];
      const Eigen::MatrixXd d = derivative_magnitudes(dev, g, 1);
      out += (i == j ? 1.0 : 2.0) * d.cwiseProduct(d);
    }
  }
  return out.cwiseSqrt();
}

Eigen::VectorXd b_magnitudes(const SubellipticOperator& P, const AnnularGrid& g) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(g.size());
  for (const auto& f : P.b) {
    const Eigen::MatrixXd d = derivative_magnitudes(f, g, 0);
    out += d.col(0).cwiseProduct(d.col(0));
  }
  return out.cwiseSqrt();
}

Eigen::VectorXd c_magnitudes(const SubellipticOperator& P, const AnnularGrid& g) {
  if (!P.has_c()) return Eigen::VectorXd::Zero(g.size());
  return derivative_magnitudes(P.c, g, 0).col(0);
}

NormSpec lebesgue(double p, double delta, Region r = Region::all()) {
  NormSpec s;
  s.p = p;
  s.delta = delta;
  s.region = r;
  return s;
}

double upper(const NormReport& r) { return r.divergent ? kInf : r.value + r.tail_bound; }

}  // namespace

nlohmann::json AsymptoticReport::to_json() const {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf"); };
  return {{"lambda_observed", lambda_observed},
          {"min_eig", min_eig},
          {"max_eig", max_eig},
          {"a_term", num(a_term)},
          {"b_term", num(b_term)},
          {"c_term", num(c_term)},
          {"lhs", num(lhs)},
          {"divergent", divergent},
          {"elliptic", elliptic},
          {"pass", pass}};
}

AsymptoticReport validate_asymptotic(const SubellipticOperator& P, const GridPtr& grid, std::uint64_t seed,
                                     int directions) {
  P.check();
  check_same_dim(P.n, grid->n);
  AsymptoticReport rep;
  const int m = 2 * P.n;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01(0.0, 1.0);
  double lo = kInf, hi = 0.0;
  for (int i = 0; i < grid->size(); ++i) {
    const Eigen::MatrixXd M = coefficient_matrix(P, grid->point(i));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
    hi = std::max(hi, es.eigenvalues().maxCoeff());
    for (int k = 0; k < directions; ++k) {
      Eigen::VectorXd z(m);
      for (int a = 0; a < m; ++a) z(a) = N01(rng);
      const double r = z.dot(M * z) / z.squaredNorm();
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  rep.min_eig = lo;
  rep.max_eig = hi;
  rep.lambda_observed = lo > 0.0 ? std::min({1.0, lo, 1.0 / hi}) : 0.0;
  rep.elliptic = lo >= P.lambda * (1.0 - 1e-12) && hi <= (1.0 + 1e-12) / P.lambda;

  const double q = P.q();
  const Eigen::MatrixXd da = deviation_magnitudes(P, *grid);
  const NormReport a0 = weighted_norm_of_values(grid, da.col(0), lebesgue(q, -P.tau));
  const NormReport a1 = weighted_norm_of_values(grid, da.col(1), lebesgue(q, -P.tau - 1.0));
  const NormReport bn = weighted_norm_of_values(grid, b_magnitudes(P, *grid), lebesgue(q, -1.0 - P.tau));
  const NormReport cn = weighted_norm_of_values(grid, c_magnitudes(P, *grid), lebesgue(q / 2.0, -2.0 - P.tau));
  rep.a_term = upper(a0) + upper(a1);
  rep.b_term = upper(bn);
  rep.c_term = upper(cn);
  rep.divergent = a0.divergent || a1.divergent || bn.divergent || cn.divergent;
  rep.lhs = rep.a_term + rep.b_term + rep.c_term;
  rep.pass = rep.elliptic && !rep.divergent && rep.lhs <= P.C1;
  return rep;
}

double interior_deviation(const SubellipticOperator& P, double R, const GridPtr& grid) {
  double s = 0.0;
  for (int i = 0; i < grid->size(); ++i)
    if (grid->rho(i) <= R) s = std::max(s, deviation_op(P, grid->point(i)));
  return s;
}

double tail_op_norm(const SubellipticOperator& P, double R, const GridPtr& grid) {
  if (!(R >= 1.0)) throw std::invalid_argument("tail_op_norm: R must be >= 1");
  P.check();
  double sup = 0.0;
  for (int i = 0; i < grid->size(); ++i)
    if (grid->rho(i) >= R) sup = std::max(sup, deviation_op(P, grid->point(i)));
  double lower = 0.0;
  const double q = P.q();
  if (P.has_b())
    lower += upper(weighted_norm_of_values(grid, b_magnitudes(P, *grid), lebesgue(q, -1.0 - P.tau, Region::exterior(R))));
  if (P.has_c())
    lower +=
        upper(weighted_norm_of_values(grid, c_magnitudes(P, *grid), lebesgue(q / 2.0, -2.0 - P.tau, Region::exterior(R))));
  return sup + kTailSobolevConstant * lower;
}

double stencil_sublaplacian(const Field& f, const HPoint<double>& x, double h) {
  // e_a e_a by two central differences along the same one-parameter subgroup: step 2h second difference.
  const int n = x.n();
  const double f0 = f(x);
  double s = 0.0;
  for (int a = 0; a < 2 * n; ++a) {
    const double fp = f(group_mul(x, horizontal<double>(n, a, 2.0 * h)));
    const double fm = f(group_mul(x, horizontal<double>(n, a, -2.0 * h)));
    s += (fp - 2.0 * f0 + fm) / (4.0 * h * h);
  }
  return s;
}

nlohmann::json HarmonicityReport::to_json() const {
  return {{"n", n}, {"steps", steps}, {"residuals", residuals}, {"ratios", ratios}, {"jet_residual", jet_residual}};
}

HarmonicityReport harmonicity_check(int n, const std::vector<double>& steps, const Resolution& res) {
  if (steps.size() < 2) throw std::invalid_argument("harmonicity_check: need at least two steps");
  HarmonicityReport rep;
  rep.n = n;
  rep.steps = steps;
  const int Q = homogeneous_dimension(n);
  const Field u = rho_power_field(n, 2.0 - Q);
  const ShellRule shell = shell_rule(n, 1.0, 2.0, res);
  std::vector<HPoint<double>> pts;
  for (int i = 0; i < shell.nodes.cols(); ++i) {
    HPoint<double> x(n);
    for (int c = 0; c < 2 * n + 1; ++c) x.coord(c) = shell.nodes(c, i);
    pts.push_back(x);
  }
  for (double h : steps) {
    double r = 0.0;
    for (const auto& x : pts) r = std::max(r, std::abs(stencil_sublaplacian(u, x, h)));
    rep.residuals.push_back(r);
  }
  for (size_t i = 1; i < rep.residuals.size(); ++i) rep.ratios.push_back(rep.residuals[i - 1] / rep.residuals[i]);
  for (const auto& x : pts) rep.jet_residual = std::max(rep.jet_residual, std::abs(flat_sublaplacian(u, x)));
  return rep;
}

double boundedness_ratio(const SubellipticOperator& P, const Field& u, double p, double delta, const GridPtr& grid) {
  const double lhs = weighted_norm(apply(P, u), lebesgue(p, delta - 2.0), grid).value;
  NormSpec s = lebesgue(p, delta);
  s.k = 2;
  const double rhs = fs_norm(u, s, grid).value;
  return rhs > 0.0 ? lhs / rhs : 0.0;
}

}  // namespace heis
