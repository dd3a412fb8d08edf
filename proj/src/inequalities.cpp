#include "heis/inequalities.hpp"

#include <cmath>
#include <stdexcept>

namespace heis {

namespace {

nlohmann::json num(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(std::isnan(v) ? "nan" : "inf");
}

NormSpec lebesgue(double p, double delta) {
  NormSpec s;
  s.p = p;
  s.delta = delta;
  return s;
}

// Exact discrete inequalities are checked with a rounding allowance only.
constexpr double kRoundoff = 1e-12;

RatioReport finish(double lhs, double rhs, double bound) {
  RatioReport r;
  r.lhs = lhs;
  r.rhs = rhs;
  r.bound = bound;
  if (rhs == 0.0) {
    r.degenerate = true;
    r.holds = lhs == 0.0;
    return r;
  }
  r.ratio = lhs / rhs;
  r.holds = std::isfinite(r.ratio) && r.ratio <= bound * (1.0 + kRoundoff);
  return r;
}

}  // namespace

nlohmann::json RatioReport::to_json() const {
  return {{"lhs", num(lhs)}, {"rhs", num(rhs)},           {"ratio", num(ratio)},
          {"bound", num(bound)}, {"degenerate", degenerate}, {"holds", holds}};
}

nlohmann::json InterpolationReport::to_json() const {
  return {{"eps", eps}, {"required_C", required_C}, {"norm_s1", norm_s1}, {"norm_s2", norm_s2}, {"norm_0", norm_0}};
}

nlohmann::json SobolevReport::to_json() const {
  const char* names[] = {"lebesgue", "sup", "decay"};
  return {{"regime", names[static_cast<int>(claim.regime)]},
          {"k", claim.k},
          {"p", claim.p},
          {"q", claim.q},
          {"delta", claim.delta},
          {"lhs", num(lhs)},
          {"rhs", num(rhs)},
          {"ratio", num(ratio)},
          {"radii", radii},
          {"annulus_sup", annulus_sup},
          {"annulus_norm", annulus_norm},
          {"slope", num(slope)},
          {"decreasing", decreasing}};
}

double embedding_constant(const AnnularGrid& g, double p, double q, double d1, double d2) {
  if (p == q) return 1.0;
  const int Q = homogeneous_dimension(g.n);
  const double e = std::isinf(q) ? -(d1 - d2) * p - Q : -(d1 - d2) * p * q / (q - p) - Q;
  const double outer = std::isinf(q) ? 1.0 / p : (q - p) / (p * q);
  double s = 0.0;
  for (int i = 0; i < g.size(); ++i) s += g.weights(i) * std::pow(sigma(g.point(i)), e);
  return std::pow(s, outer);
}

RatioReport check_embedding(const Field& u, double p, double q, double d1, double d2, const GridPtr& grid) {
  if (!(p >= 1.0 && p <= q)) throw std::invalid_argument("check_embedding: need 1 <= p <= q <= inf");
  if (!(d2 < d1)) throw std::invalid_argument("check_embedding: need delta2 < delta1");
  const GridFunctionD s = sample(u, grid);
  const double lhs = weighted_norm(s, lebesgue(p, d1)).value;
  const double rhs = weighted_norm(s, lebesgue(q, d2)).value;
  return finish(lhs, rhs, embedding_constant(*grid, p, q, d1, d2));
}

RatioReport check_holder(const Field& u, const Field& v, double p, double q, double r, double d1, double d2,
                         const GridPtr& grid) {
  const double inv = (std::isinf(q) ? 0.0 : 1.0 / q) + (std::isinf(r) ? 0.0 : 1.0 / r);
  if (!(p >= 1.0) || std::abs(1.0 / p - inv) > 1e-12)
    throw std::invalid_argument("check_holder: exponents must satisfy 1/p = 1/q + 1/r");
  const GridFunctionD su = sample(u, grid), sv = sample(v, grid);
  const GridFunctionD uv(grid, su.values.cwiseProduct(sv.values));
  const double lhs = weighted_norm(uv, lebesgue(p, d1 + d2)).value;
  const double rhs = weighted_norm(su, lebesgue(q, d1)).value * weighted_norm(sv, lebesgue(r, d2)).value;
  return finish(lhs, rhs, 1.0);
}

InterpolationReport check_interpolation(const Field& u, int s, double p, double delta, const std::vector<double>& eps,
                                        const GridPtr& grid) {
  if (s != 0) throw derivative_unavailable("interpolation check supports s = 0 only");
  if (!(p >= 1.0) || std::isinf(p)) throw std::invalid_argument("check_interpolation: need 1 <= p < inf");
  InterpolationReport rep;
  rep.eps = eps;
  const Eigen::MatrixXd mags = derivative_magnitudes(u, *grid, 2);
  double terms[3];
  for (int j = 0; j < 3; ++j) terms[j] = weighted_norm_of_values(grid, mags.col(j), lebesgue(p, delta - j)).value;
  rep.norm_0 = terms[0];
  rep.norm_s1 = terms[0] + terms[1];
  rep.norm_s2 = terms[0] + terms[1] + terms[2];
  for (double e : eps) {
    if (!(e > 0.0)) throw std::invalid_argument("check_interpolation: eps must be positive");
    rep.required_C.push_back(rep.norm_0 > 0.0 ? e * std::max(0.0, rep.norm_s1 - e * rep.norm_s2) / rep.norm_0 : 0.0);
  }
  return rep;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 matching samples");
  double mx = 0.0, my = 0.0;
  const double m = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / m;
    my += std::log(y[i]) / m;
  }
  double sxy = 0.0, sxx = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

SobolevReport check_sobolev_decay(const Field& u, const SobolevClaim& c, const GridPtr& grid) {
  const int Q = homogeneous_dimension(grid->n);
  const double gap = Q - c.k * c.p;
  SobolevReport rep;
  rep.claim = c;
  if (c.k < 0 || c.k > 2) throw derivative_unavailable("Sobolev checks use k <= 2");
  if (c.regime == SobolevRegime::Lebesgue) {
    if (!(gap > 0.0)) throw std::invalid_argument("regime mismatch: Lebesgue claim needs Q - kp > 0");
    const double pstar = Q * c.p / gap;
    if (!(c.p > 1.0 && c.p <= c.q && c.q <= pstar))
      throw std::invalid_argument("regime mismatch: need 1 < p <= q <= Qp/(Q-kp)");
    rep.lhs = weighted_norm(u, lebesgue(pstar, c.delta), grid).value;
    NormSpec s = lebesgue(c.q, c.delta);
    s.k = c.k;
    rep.rhs = fs_norm(u, s, grid).value;
  } else {
    if (!(gap < 0.0)) throw std::invalid_argument("regime mismatch: sup and decay claims need Q - kp < 0");
    rep.lhs = weighted_norm(u, lebesgue(kInf, c.delta), grid).value;
    NormSpec s = lebesgue(c.p, c.delta);
    s.k = c.k;
    rep.rhs = fs_norm(u, s, grid).value;
  }
  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
  if (c.regime != SobolevRegime::Decay) return rep;

  // Annulus profile over the outermost four dyadic annuli.
  std::vector<double> radii;
  for (const auto& lev : grid->levels)
    if (!lev.core && lev.lo >= 1.0) radii.push_back(lev.lo);
  if (radii.size() > 4) radii.erase(radii.begin(), radii.end() - 4);
  if (radii.size() < 2) throw std::invalid_argument("decay check needs at least two annuli with R >= 1");
  const Eigen::MatrixXd mags = derivative_magnitudes(u, *grid, c.k);
  for (double R : radii) {
    const int l = grid->level_of_radius(1.5 * R);
    const auto& lev = grid->levels[l];
    double sup = 0.0;
    for (int i = lev.first; i < lev.first + lev.count; ++i)
      sup = std::max(sup, mags(i, 0) * std::pow(grid->rho(i), -c.delta));
    rep.radii.push_back(R);
    rep.annulus_sup.push_back(sup);
    double nrm = 0.0;
    for (int j = 0; j <= c.k; ++j) {
      NormSpec s = lebesgue(c.p, c.delta - j);
      s.region = Region::annulus(R);
      nrm += weighted_norm_of_values(grid, mags.col(j), s).value;
    }
    rep.annulus_norm.push_back(nrm);
  }
  rep.decreasing = true;
  for (size_t i = 1; i < rep.annulus_sup.size(); ++i)
    if (!(rep.annulus_sup[i] < rep.annulus_sup[i - 1] || rep.annulus_sup[i] == 0.0)) rep.decreasing = false;
  bool positive = true;
  for (double v : rep.annulus_sup) positive = positive && v > 0.0;
  rep.slope = positive ? loglog_slope(rep.radii, rep.annulus_sup) : -kInf;
  return rep;
}

}  // namespace heis
