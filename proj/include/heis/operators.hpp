// Second-order operators P u = a^{ij} e_i e_j u + b^i e_i u + c u asymptotic to the flat sub-Laplacian.
#pragma once

#include "heis/inequalities.hpp"
#include "heis/norms.hpp"

#include <cstdint>
#include <vector>

namespace heis {

struct SubellipticOperator {
  int n = 1;
  std::string name = "flat";
  // Empty: identity. One entry: beta * identity. (2n)^2 entries: row-major symmetric matrix.
  std::vector<Field> a;
  std::vector<Field> b;  // empty (zero) or 2n entries
  Field c;               // invalid: zero
  double lambda = 1.0;
  double tau = 1.0;
  double q_exp = 0.0;  // 0 selects 2Q
  double C1 = 0.0;

  static SubellipticOperator flat(int n);

  bool isotropic() const { return a.size() <= 1; }
  bool has_b() const { return !b.empty(); }
  bool has_c() const { return c.valid() && !c.is_zero(); }
  bool is_flat() const { return a.empty() && !has_b() && !has_c(); }
  double q() const { return q_exp > 0.0 ? q_exp : 2.0 * homogeneous_dimension(n); }

  Field a_entry(int i, int j) const;
  Field beta() const;  // isotropic factor; throws otherwise
  Field c_field() const { return c.valid() ? c : Field::zero(); }

  void check() const;
  nlohmann::json to_json() const;
};

// P u as a derived field (one jet level lower than u and the coefficients).
Field apply(const SubellipticOperator& P, const Field& u);
double apply_at(const SubellipticOperator& P, const Field& u, const HPoint<double>& x);

// a(x) as a dense matrix.
Eigen::MatrixXd coefficient_matrix(const SubellipticOperator& P, const HPoint<double>& x);

struct AsymptoticReport {
  double lambda_observed = 1.0;
  double min_eig = 1.0, max_eig = 1.0;
  double a_term = 0.0, b_term = 0.0, c_term = 0.0;
  double lhs = 0.0;  // left side of the decay condition, tail bounds included
  bool divergent = false;
  bool elliptic = true;
  bool pass = true;
  nlohmann::json to_json() const;
};

// Ellipticity over nodes (eigenvalues and seeded random directions) and the weighted decay norms
// ||a - I||_{1,q,-tau} + ||b||_{0,q,-1-tau} + ||c||_{0,q/2,-2-tau} against C1.
AsymptoticReport validate_asymptotic(const SubellipticOperator& P, const GridPtr& grid, std::uint64_t seed = 1,
                                     int directions = 8);

// Sobolev constant used in the tail bound; the weighted Sobolev embedding has no explicit constant.
inline constexpr double kTailSobolevConstant = 1.0;

// Upper estimate of ||P - flat||_{op} on functions supported in E_R:
// sup_{E_R} |a - I|_op + C_S (||b||_{q,-1-tau;E_R} + ||c||_{q/2,-2-tau;E_R}).
double tail_op_norm(const SubellipticOperator& P, double R, const GridPtr& grid);

// sup_{B_R} |a - I|_op over grid nodes.
double interior_deviation(const SubellipticOperator& P, double R, const GridPtr& grid);

// Flat sub-Laplacian by composed group-flow central differences with step h.
double stencil_sublaplacian(const Field& f, const HPoint<double>& x, double h);

struct HarmonicityReport {
  int n = 1;
  std::vector<double> steps;
  std::vector<double> residuals;  // max |stencil Laplacian of rho^{2-Q}| over nodes with 1 <= rho <= 2
  std::vector<double> ratios;     // successive residual ratios
  double jet_residual = 0.0;      // same quantity with forward-mode derivatives
  nlohmann::json to_json() const;
};

HarmonicityReport harmonicity_check(int n, const std::vector<double>& steps, const Resolution& res = {3, 6, 6});

// ||P u||_{p,delta-2} / ||u||_{2,p,delta}.
double boundedness_ratio(const SubellipticOperator& P, const Field& u, double p, double delta, const GridPtr& grid);

}  // namespace heis
