#include "heis/norms.hpp"

#include <cmath>
#include <sstream>

namespace heis {

void NormSpec::validate() const {
  if (k < 0) throw std::invalid_argument("NormSpec: k must be >= 0");
  if (!(p >= 1.0)) throw std::invalid_argument("NormSpec: p must be >= 1 or infinite");
}

nlohmann::json NormSpec::to_json() const {
  return {{"k", k},
          {"p", std::isinf(p) ? nlohmann::json("inf") : nlohmann::json(p)},
          {"delta", delta},
          {"flavor", flavor == Flavor::Sigma ? "sigma" : "rho"},
          {"region", region.describe()}};
}

nlohmann::json NormReport::to_json() const {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(std::isnan(v) ? "nan" : "inf"); };
  return {{"spec", spec.to_json()},
          {"value", num(value)},
          {"quadrature_error", num(quadrature_error)},
          {"tail_bound", num(tail_bound)},
          {"divergent", divergent}};
}

FrameJet<double> stencil_frame_jet(const Field& f, const HPoint<double>& x, double h) {
  const int n = x.n(), m = 2 * n;
  FrameJet<double> r;
  r.value = f(x);
  r.d1.resize(m);
  r.d2.resize(m, m);
  for (int a = 0; a < m; ++a) {
    const auto xp = group_mul(x, horizontal<double>(n, a, h));
    const auto xm = group_mul(x, horizontal<double>(n, a, -h));
    r.d1(a) = (f(xp) - f(xm)) / (2.0 * h);
    for (int b = 0; b < m; ++b) {
      const auto hb = horizontal<double>(n, b, h), hbm = horizontal<double>(n, b, -h);
      // e_a (e_b f): outer difference along a, inner along b
      const double fpp = f(group_mul(xp, hb)), fpm = f(group_mul(xp, hbm));
      const double fmp = f(group_mul(xm, hb)), fmm = f(group_mul(xm, hbm));
      r.d2(a, b) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
    }
  }
  return r;
}

Eigen::MatrixXd derivative_magnitudes(const Field& u, const AnnularGrid& grid, int k) {
  if (k > 2) throw derivative_unavailable("derivatives beyond order 2 are unavailable for norms");
  if (u.singular_at_origin() && grid.has_core())
    throw std::invalid_argument("field '" + u.name() + "' is singular at the origin; use a grid without core");
  const int N = grid.size();
  Eigen::MatrixXd out(N, k + 1);
  for (int i = 0; i < N; ++i) {
    const auto x = grid.point(i);
    if (k == 0) {
      out(i, 0) = std::abs(u(x));
      continue;
    }
    const FrameJet<double> fj = u.has_jets() ? frame_jet(u, x)
                                             : stencil_frame_jet(u, x, stencil_step(grid.rho(i)));
    out(i, 0) = std::abs(fj.value);
    out(i, 1) = fj.d1.norm();
    if (k >= 2) out(i, 2) = fj.d2.norm();
  }
  return out;
}

NormReport weighted_norm_of_values(const GridPtr& gp, const Eigen::VectorXd& a, const NormSpec& spec) {
  spec.validate();
  const AnnularGrid& g = *gp;
  if (spec.flavor == Flavor::Rho && g.has_core() && spec.region.contains_origin())
    throw std::invalid_argument("primed norm requested with the origin in the region");
  const int Q = homogeneous_dimension(g.n);
  const bool sup = std::isinf(spec.p);
  NormReport rep;
  rep.spec = spec;
  const int L = static_cast<int>(g.levels.size());
  rep.level_terms = Eigen::VectorXd::Zero(L);
  for (int l = 0; l < L; ++l) {
    const auto& lev = g.levels[l];
    double acc = 0.0;
    for (int i = lev.first; i < lev.first + lev.count; ++i) {
      if (!spec.region.contains(g.rho(i))) continue;
      const double v = a(i);
      if (!std::isfinite(v)) throw std::domain_error("weighted_norm: non-finite value");
      if (v == 0.0) continue;
      const HPoint<double> x = g.point(i);
      const double W = spec.flavor == Flavor::Sigma ? sigma(x) : g.rho(i);
      const double wv = std::pow(W, -spec.delta) * v;
      if (sup) {
        acc = std::max(acc, wv);
      } else {
        acc += g.weights(i) * std::pow(wv, spec.p) * std::pow(W, -Q);
      }
    }
    rep.level_terms(l) = acc;
  }
  if (sup) {
    rep.value = L ? rep.level_terms.maxCoeff() : 0.0;
  } else {
    rep.value = std::pow(rep.level_terms.sum(), 1.0 / spec.p);
  }

  // Tail from the geometric decay of the last two annuli, when the region reaches the truncation radius.
  const bool reaches_end = spec.region.kind == Region::Kind::All || spec.region.kind == Region::Kind::Exterior;
  if (reaches_end && L >= 2 && !g.levels[L - 2].core) {
    const double c1 = rep.level_terms(L - 2), c2 = rep.level_terms(L - 1);
    if (c2 > 0.0) {
      const double r = c1 > 0.0 ? c2 / c1 : kInf;
      if (sup) {
        if (r >= 1.0) {
          rep.divergent = true;
          rep.tail_bound = kInf;
        } else {
          rep.tail_bound = std::max(0.0, c2 * r - rep.value);
        }
      } else if (r >= 1.0 - 1e-9) {
        rep.divergent = true;
        rep.tail_bound = kInf;
      } else {
        const double S = rep.level_terms.sum();
        rep.tail_bound = std::pow(S + c2 * r / (1.0 - r), 1.0 / spec.p) - rep.value;
      }
    }
  }
  return rep;
}

NormReport weighted_norm(const GridFunctionD& u, const NormSpec& spec) {
  if (spec.k != 0) throw derivative_unavailable("grid functions carry no derivatives; use k = 0");
  return weighted_norm_of_values(u.grid, u.values.cwiseAbs(), spec);
}

NormReport weighted_norm(const Field& u, const NormSpec& spec, const GridPtr& grid) {
  NormSpec s = spec;
  s.k = 0;
  return weighted_norm(sample(u, grid), s);
}

NormReport fs_norm(const Field& u, const NormSpec& spec, const GridPtr& grid) {
  spec.validate();
  const Eigen::MatrixXd mags = derivative_magnitudes(u, *grid, spec.k);
  NormReport total;
  total.spec = spec;
  for (int j = 0; j <= spec.k; ++j) {
    NormSpec sj = spec;
    sj.k = 0;
    sj.delta = spec.delta - j;
    const NormReport r = weighted_norm_of_values(grid, mags.col(j), sj);
    total.value += r.value;
    total.tail_bound += r.tail_bound;
    total.divergent = total.divergent || r.divergent;
    if (j == 0) total.level_terms = r.level_terms;
  }
  return total;
}

NormReport fs_norm_with_error(const Field& u, const NormSpec& spec, const GridOptions& opts) {
  GridOptions coarse = opts;
  coarse.res = opts.res.halved();
  NormReport fine = fs_norm(u, spec, make_grid(opts));
  const NormReport crs = fs_norm(u, spec, make_grid(coarse));
  fine.quadrature_error = std::abs(fine.value - crs.value);
  return fine;
}

}  // namespace heis
