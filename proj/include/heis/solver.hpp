// Weighted-space solves of P u = f: the flat inverse K_0, density iteration for perturbed operators,
// empirical estimate constants, a maximum-principle diagnostic, and a finite-difference Fredholm probe.
#pragma once

#include "heis/kernels.hpp"
#include "heis/operators.hpp"

#include <Eigen/Sparse>

#include <stdexcept>

namespace heis {

class precondition_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class convergence_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolveOptions {
  double p = 2.0;
  double delta = -1.0;
  double tol = 1e-6;  // on ||P u - f||_{p,delta-2} / ||f||_{p,delta-2}
  int max_iter = 60;
  K0Options k0;
  // Nodes where norms, residuals and the iteration are evaluated.
  double check_rmin = 0.25;
  double check_Rmax = 8.0;
  Resolution check_res = {2, 4, 4};
  int kernel_J = 6;  // truncation for the empirical bound of K_0
  std::vector<double> R0_candidates = {1.0, 2.0, 4.0, 8.0, 16.0};

  GridOptions check_grid(int n) const;
  void validate(int n) const;
};

struct SolveReport {
  std::string method;
  int n = 1;
  double p = 2.0, delta = -1.0;
  Field u_field;
  GridFunctionD u;  // u on the check grid
  double f_norm = 0.0;         // ||f||_{p,delta-2}
  double residual_norm = 0.0;  // ||P u - f||_{p,delta-2} with P K_0 evaluated through Lap K_0 = I
  double quadrature_residual = 0.0;  // same with Lap u from the jets of the K_0 quadrature
  int iterations = 0;
  std::vector<double> residual_history;
  std::vector<double> contraction_history;
  bool converged = false;
  // absorption bound C_K0 (tail(R0) + interior(R0)), minimized over R0
  double C_K0 = 0.0;
  double R0 = 0.0;
  double tail_norm = 0.0;
  double interior_term = 0.0;
  double contraction_bound = 0.0;
  double max_contraction = 0.0;
  double tail_share = 0.0;
  // ||u||'_{2,p,delta} / ||Lap u||'_{p,delta-2} on the check grid
  double injectivity_constant = 0.0;

  nlohmann::json to_json() const;
  std::string history_csv() const;
};

// u = K_0 f. Throws std::invalid_argument for delta outside (-2n, 0) and std::domain_error when f is not
// integrable against the kernel on the truncated domain.
SolveReport solve_flat(const Field& f, int n, double c0, const SolveOptions& opt = {});

// Density iteration g_{m+1} = g_m + f - P K_0 g_m, u = K_0 g, for P = beta I with b = c = 0.
// Throws precondition_error when P fails validation or the absorption bound is >= 1, convergence_error
// after max_iter, and std::invalid_argument for other operator structures (see fd_solve).
SolveReport solve_perturbed(const SubellipticOperator& P, const Field& f, double c0, const SolveOptions& opt = {},
                            const GridPtr& validation_grid = nullptr);

// Bound used by solve_perturbed: min over R0 of C_K0 (tail_op_norm(R0) + sup_{B_R0} |a - I|).
struct AbsorptionBound {
  double C_K0 = 0.0, R0 = 0.0, tail = 0.0, interior = 0.0, bound = kInf;
};
AbsorptionBound absorption_bound(const SubellipticOperator& P, double c0, const SolveOptions& opt, const GridPtr& grid);

// ---- empirical estimate constants ---------------------------------------------------------

enum class EstimateKind {
  Injectivity,  // ||u||'_{2,p,delta} <= C ||Lap u||'_{p,delta-2}
  Weighted,     // ||u||_{2,p,delta} <= C (||P u||_{p,delta-2} + ||u||_{p,delta})
  ScaleBroken,  // ||u||_{2,p,delta} <= C (||P u||_{p,delta-2} + ||u||_{L^p(B_R)})
};

struct ConstantEstimate {
  EstimateKind kind;
  double p = 2.0, delta = -1.0;
  double R = 0.0;  // ball radius for ScaleBroken
  std::vector<double> ratios;
  double C = 0.0;       // sup over the family
  double C_half = 0.0;  // sup over the first half of the family
  bool stable = false;  // C <= 1.1 C_half
  nlohmann::json to_json() const;
};

ConstantEstimate estimate_constant(EstimateKind kind, const SubellipticOperator& P, const std::vector<Field>& family,
                                   double p, double delta, const GridPtr& grid, double R = 0.0);

struct ScaleBrokenConstants {
  double R = 0.0;  // smallest dyadic R with C_K0 tail_op_norm(R) <= 1/2
  ConstantEstimate estimate;
  nlohmann::json to_json() const;
};

ScaleBrokenConstants scale_broken_constants(const SubellipticOperator& P, double c0, const std::vector<Field>& family,
                                            double p, double delta, const GridPtr& grid);

// ---- maximum principle ----------------------------------------------------------------------

struct MaxPrincipleReport {
  double interior_max = 0.0, interior_min = 0.0;
  double boundary_max = 0.0, boundary_min = 0.0;  // outermost level of the grid
  double residual_above = 0.0, residual_below = 0.0;  // max(P u, 0) and max(-P u, 0) on interior nodes
  double slack = 0.0;  // barrier allowance from the residual
  int sign = 0;        // +1 / -1 if u has one sign on the nodes, 0 otherwise
  bool pass = true;
  nlohmann::json to_json() const;
};

// Comparison with the barrier |z|^2 / (4 n lambda): u <= max(sup_bdry u, 0) + slack(P u < 0 part), and the
// symmetric lower bound. Throws if c > 0 somewhere on the grid.
MaxPrincipleReport maximum_principle_check(const SubellipticOperator& P, const GridFunctionD& u,
                                           const Eigen::VectorXd& Pu);
MaxPrincipleReport maximum_principle_check(const SubellipticOperator& P, const Field& u, const GridPtr& grid);

// ---- finite differences on a box (n = 1) -------------------------------------------------------

// [-L, L]^2 x [-L^2, L^2] with N interior points per axis.
struct FDBox {
  double L = 2.0;
  int N = 15;
  double hx() const { return 2.0 * L / (N + 1); }
  double ht() const { return 2.0 * L * L / (N + 1); }
  int size() const { return N * N * N; }
  HPoint<double> point(int idx) const;
};

// Central-difference matrix of P on the interior of the box (Dirichlet).
Eigen::SparseMatrix<double> fd_matrix(const SubellipticOperator& P, const FDBox& box);

struct FDSolveReport {
  FDBox box;
  Eigen::VectorXd u;  // interior values
  double relative_residual = 0.0;
  nlohmann::json to_json() const;
};

// Dense cross-check solve of P u = f with Dirichlet data g on the box boundary.
FDSolveReport fd_solve(const SubellipticOperator& P, const Field& f, const Field& g, const FDBox& box);

struct FredholmProbe {
  int n = 1;
  double p = 2.0;
  double delta = -1.0;
  double delta_star = 0.0;
  std::vector<int> N;
  std::vector<std::vector<double>> sigma;       // smallest singular values per refinement (P, delta)
  std::vector<std::vector<double>> sigma_star;  // same for P* at delta_star
  std::vector<double> sigma_min_history;
  std::vector<double> sigma_min_star_history;
  int N_P = 0;
  int N_Pstar = 0;
  int index = 0;
  nlohmann::json to_json() const;
};

inline constexpr int kFredholmModes = 3;

// Weight-conjugated finite-difference probe: D_{delta-2} A D_delta^{-1} with D_delta = diag(sigma^{-delta-Q/p});
// a singular value counts toward the kernel when it at least halves under every refinement.
FredholmProbe fredholm_probe(const SubellipticOperator& P, double p, double delta, const std::vector<int>& refinements,
                             double L = 2.0);

}  // namespace heis
