// Annular grids adapted to parabolic dilations, grid functions and quadrature.
#pragma once

#include "heis/field.hpp"
#include "heis/heisenberg.hpp"

#include <Eigen/Core>
#include "json.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace heis {

// Per-annulus tensor budget: radial Gauss nodes, t/|z|^2 slice nodes, angular nodes.
struct Resolution {
  int nr = 8;
  int npsi = 16;
  int nang = 16;

  Resolution halved() const { return {std::max(2, nr / 2), std::max(2, npsi / 2), std::max(4, nang / 2)}; }
  Resolution doubled() const { return {2 * nr, 2 * npsi, 2 * nang}; }
};

struct GridOptions {
  int n = 1;
  double r_min = 1.0;  // radius of the core ball / innermost annulus boundary (power of 2)
  double R_max = 16.0;  // outer radius (power of 2)
  bool core = true;     // include B_{r_min}; primed grids leave it out
  Resolution res;
};

struct GridLevel {
  int first = 0;
  int count = 0;
  double lo = 0.0;  // rho range covered by this level
  double hi = 0.0;
  bool core = false;
};

// Gauss rule on the unit gauge sphere with respect to the polar measure dmu (dV = rho^{Q-1} drho dmu).
struct SphereRule {
  int n = 1;
  Eigen::MatrixXd nodes;  // (2n+1) x M, rho = 1
  Eigen::VectorXd weights;
};

SphereRule sphere_rule(int n, int npsi, int nang);

class AnnularGrid {
 public:
  int n = 1;
  GridOptions options;
  Eigen::MatrixXd nodes;  // (2n+1) x N
  Eigen::VectorXd weights;
  Eigen::VectorXd rho;
  std::vector<GridLevel> levels;

  int size() const { return static_cast<int>(weights.size()); }
  int dim() const { return 2 * n + 1; }
  HPoint<double> point(int i) const;
  bool has_core() const { return options.core; }
  double r_min() const { return options.r_min; }
  double R_max() const { return options.R_max; }
  int level_of_radius(double r) const;

  nlohmann::json to_json() const;
  static AnnularGrid from_json(const nlohmann::json& j);
};

using GridPtr = std::shared_ptr<const AnnularGrid>;

AnnularGrid build_grid(const GridOptions& opts);
GridPtr make_grid(const GridOptions& opts);

// Nodes of the rule for a single annulus [lo, hi] (or the ball B_hi when lo == 0).
struct ShellRule {
  Eigen::MatrixXd nodes;
  Eigen::VectorXd weights;
  Eigen::VectorXd rho;
};
ShellRule shell_rule(int n, double lo, double hi, const Resolution& res);

// Gauss-Legendre nodes and weights on [a, b].
void gauss_legendre(int m, double a, double b, Eigen::VectorXd& x, Eigen::VectorXd& w);

struct Region {
  enum class Kind { All, Ball, Annulus, Exterior };
  Kind kind = Kind::All;
  double R = 0.0;

  static Region all() { return {}; }
  static Region ball(double R) { return {Kind::Ball, R}; }
  static Region annulus(double R) { return {Kind::Annulus, R}; }  // A_R = B_{2R} minus B_R
  static Region exterior(double R) { return {Kind::Exterior, R}; }

  bool contains(double rho) const;
  bool contains_origin() const { return kind == Kind::All || kind == Kind::Ball; }
  std::string describe() const;
};

template <typename Scalar>
struct GridFunction {
  GridPtr grid;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;

  GridFunction() = default;
  GridFunction(GridPtr g, Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid->size()) throw std::invalid_argument("GridFunction: value count differs from node count");
  }
  int size() const { return static_cast<int>(values.size()); }
};

using GridFunctionD = GridFunction<double>;

GridFunctionD sample(const Field& f, const GridPtr& grid);

// sum_i w_i f_i over nodes in region; rejects non-finite integrand values.
template <typename Scalar>
Scalar integrate(const GridFunction<Scalar>& f, const Region& region = Region::all());

double integrate(const Field& f, const GridPtr& grid, const Region& region = Region::all());

struct IntegralEstimate {
  double value = 0.0;
  double error = 0.0;  // |I(res) - I(res halved)|
};
IntegralEstimate integrate_with_error(const Field& f, const GridOptions& opts, const Region& region = Region::all());

// Per-level partial sums (core first, then annuli outward).
Eigen::VectorXd level_sums(const GridFunctionD& f);

// Kernel k(w) evaluated at w = y^{-1} x, homogeneous of the given degree near w = 0.
struct SingularKernel {
  std::function<double(const HPoint<double>&)> k;
  double degree = 0.0;
  // int_{B_1} k dV; filled from the sphere rule when not given.
  double unit_ball_integral = std::numeric_limits<double>::quiet_NaN();
};

SingularKernel rho_power_kernel(int n, double degree);

// Integral of k(y^{-1}x) f(y) over region with the gauge ball B_eps(x) excised and replaced by
// f(x) * int_{B_eps} k. eps <= 0 selects one local grid spacing at x.
double singular_integrate(const SingularKernel& kernel, const HPoint<double>& x, const GridFunctionD& f,
                          double fx, const Region& region = Region::all(), double eps = -1.0);
double singular_integrate(const SingularKernel& kernel, const HPoint<double>& x, const Field& f, const GridPtr& grid,
                          const Region& region = Region::all(), double eps = -1.0);

// Volume-equivalent spacing of the level containing rho.
double local_spacing(const AnnularGrid& g, double rho);

}  // namespace heis
