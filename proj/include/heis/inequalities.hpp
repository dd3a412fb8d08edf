// Empirical checks of the embedding, Hoelder, interpolation and Sobolev/decay inequalities.
#pragma once

#include "heis/norms.hpp"

#include <vector>

namespace heis {

struct RatioReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  // lhs / rhs; 0 when degenerate
  double bound = kInf;  // constant the inequality is checked against
  bool degenerate = false;
  bool holds = true;

  nlohmann::json to_json() const;
};

// Hoelder constant c with ||u||_{p,d1} <= c ||u||_{q,d2} on the grid's node set:
// c = (sum w sigma^{-(d1-d2) p q/(q-p) - Q})^{(q-p)/(p q)}; 1 when p = q.
double embedding_constant(const AnnularGrid& grid, double p, double q, double d1, double d2);

// ||u||_{p,d1} <= c ||u||_{q,d2} for 1 <= p <= q <= inf, d2 < d1.
RatioReport check_embedding(const Field& u, double p, double q, double d1, double d2, const GridPtr& grid);

// ||uv||_{p,d1+d2} <= ||u||_{q,d1} ||v||_{r,d2} with 1/p = 1/q + 1/r.
RatioReport check_holder(const Field& u, const Field& v, double p, double q, double r, double d1, double d2,
                         const GridPtr& grid);

struct InterpolationReport {
  std::vector<double> eps;
  std::vector<double> required_C;  // smallest C(eps) making the inequality hold for u
  double norm_s1 = 0.0, norm_s2 = 0.0, norm_0 = 0.0;
  nlohmann::json to_json() const;
};

// ||u||_{s+1,p,d} <= eps ||u||_{s+2,p,d} + C/eps ||u||_{0,p,d}; s = 0 with jet-based derivatives.
InterpolationReport check_interpolation(const Field& u, int s, double p, double delta, const std::vector<double>& eps,
                                        const GridPtr& grid);

enum class SobolevRegime {
  Lebesgue,  // ||u||_{Qp/(Q-kp),d} <= C ||u||_{k,q,d}, Q - kp > 0, 1 < p <= q <= Qp/(Q-kp)
  Sup,       // ||u||_{inf,d} <= C ||u||_{k,p,d}, Q - kp < 0
  Decay      // |u| = o(rho^d): annulus sups of |u| rho^{-d}
};

struct SobolevClaim {
  SobolevRegime regime = SobolevRegime::Sup;
  int k = 2;
  double p = 3.0;
  double q = 3.0;  // Lebesgue regime only
  double delta = -1.0;
};

struct SobolevReport {
  SobolevClaim claim;
  double lhs = 0.0, rhs = 0.0, ratio = 0.0;
  std::vector<double> radii;        // annuli A_R, R dyadic
  std::vector<double> annulus_sup;  // sup_{A_R} |u| rho^{-d}
  std::vector<double> annulus_norm; // ||u||_{k,p,d;A_R}
  double slope = 0.0;               // log-log fit of annulus_sup against R
  bool decreasing = false;          // annulus_sup strictly decreasing over the fitted radii
  nlohmann::json to_json() const;
};

SobolevReport check_sobolev_decay(const Field& u, const SobolevClaim& claim, const GridPtr& grid);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace heis
