// Fundamental solution of the flat sub-Laplacian, the convolution inverse K_0, and two-weight kernels
// |x|^{-a} |y^{-1}x|^{-Q+a+b} |y|^{-b}.
#pragma once

#include "heis/grid.hpp"
#include "heis/norms.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace heis {

// ---- fundamental constant ------------------------------------------------------------------

// c_0 with Lap(c_0^{-1} rho^{-2n}) = -delta_0.
struct FundamentalConstant {
  int n = 1;
  double c0 = 0.0;
  double flux_coarse = 0.0, flux_fine = 0.0;  // flux oracle at two sphere resolutions
  double flux_R2 = 0.0;                       // flux through rho = 2 (fine resolution)
  double alt_coarse = 0.0, alt_fine = 0.0;    // -int Lap((1 + rho^4)^{-n/2}) at two grid resolutions
  bool stable = false;                        // coarse/fine flux within 0.5%
  bool oracles_agree = false;                 // flux and alternative oracle within 1%
  std::string method;
  nlohmann::json to_json() const;
};

// -R^{Q-1} int_{rho=1} sum_a (e_a rho^{-2n})(e_a rho)(delta_R w) dmu(w)
double flux_constant(int n, double R, int npsi, int nang);

// -int_{B_Rmax} Lap((1 + rho^4)^{-n/2}) dV plus the geometric tail estimate of the last two annuli.
double alternative_c0(int n, const Resolution& res, double R_max = 64.0);

// Throws std::runtime_error if the flux resolutions disagree by more than 0.5%.
FundamentalConstant compute_c0(int n);

// ---- K_0 -------------------------------------------------------------------------------------

struct K0Options {
  double kappa = 0.7;                      // near-ball radius relative to rho(x)
  double radius_cap = 1.0;                 // rho(x) is clamped to [source_rmin, radius_cap] in the radius
  Resolution near = {14, 28, 28};          // template rule on B_1
  Resolution source = {20, 40, 40};        // per-annulus source rule
  double source_rmin = 1.0 / 16.0;
  double source_Rmax = 32.0;
  double tail_tolerance = 1e-3;            // max share of int |f| carried by the outermost annulus
};

// u = K_0 f = -c_0^{-1} int rho(y^{-1}x)^{-2n} f(y) dV_y, so that Lap u = f.
// Split with the partition chi(rho(x^{-1}y)/r), r = kappa rho(x) (rho clamped), chi(s) = (1 - s^2)^3 on s < 1:
// the far part uses the source grid, the near part a dilated ball template around x.
class K0Convolver {
 public:
  K0Convolver(const Field& f, int n, double c0, const K0Options& opt = {});

  double operator()(const HPoint<double>& x) const;
  // Cartesian 2-jet of u at x (derivatives with r held fixed; the split is exact for every r).
  Jet<double> jet(const HPoint<double>& x) const;
  FrameJet<double> frame(const HPoint<double>& x) const;

  // u as a field: values and first-level jets.
  Field as_field() const;

  int n() const { return n_; }
  double c0() const { return c0_; }
  double source_integral() const { return f_integral_; }  // int f dV over the source grid
  double tail_share() const { return tail_share_; }
  const GridPtr& source_grid() const { return src_; }

 private:
  double far_value(const HPoint<double>& x, double r) const;
  Jet<double> far_jet(const HPoint<double>& x, double r) const;

  int n_;
  double c0_;
  K0Options opt_;
  Field f_;
  GridPtr src_;
  Eigen::VectorXd fw_;  // f(y) w_y at source nodes
  Eigen::MatrixXd near_nodes_;
  Eigen::VectorXd near_coef_;  // w rho^{-2n} chi(rho) on the template
  double f_integral_ = 0.0;
  double tail_share_ = 0.0;
};

// K_0 applied to grid samples with excision at one local spacing (f(x) taken from the nearest node).
double convolve_k0(const GridFunctionD& f, double c0, const HPoint<double>& x);

struct FarFieldReport {
  std::vector<double> radii;
  std::vector<double> mean_abs;  // mean |u| over sphere directions at radius R
  double slope = 0.0;            // expected 2 - Q
  double limit_ratio = 0.0;      // u rho^{2n} / (-c_0^{-1} int f) at the largest radius
  nlohmann::json to_json() const;
};

FarFieldReport far_field(const K0Convolver& K0, const std::vector<double>& radii);

// ---- two-weight kernels -------------------------------------------------------------------

struct KernelSpec {
  double a = 1.0;
  double b = 1.0;
  double p = 2.0;

  double pprime() const { return p / (p - 1.0); }
  void validate() const;  // a + b > 0, 1 < p < inf
  nlohmann::json to_json() const;
};

double two_weight_kernel(const KernelSpec& K, const HPoint<double>& x, const HPoint<double>& y);

struct KernelApplyResult {
  std::vector<double> values;
  std::vector<double> singular_part;  // excised-ball contribution per point
  double tail_share = 0.0;            // share of int |u| on the outermost annulus of the source grid
};

// (K u)(x) = int K(x, y) u(y) dV_y on a primed source grid, gauge ball of one spacing excised.
KernelApplyResult two_weight_apply(const KernelSpec& K, const Field& u, const GridPtr& source,
                                   const std::vector<HPoint<double>>& points);

struct OpNormEstimate {
  KernelSpec K;
  int J = 6;          // truncation B_T minus B_{1/T}, T = 2^J
  double estimate = 0.0;
  double random_lower = 0.0;  // best ratio over seeded random positive test vectors
  int iterations = 0;
  int nodes = 0;
  nlohmann::json to_json() const;
};

inline const Resolution kOpNormResolution = {3, 6, 8};

// Lower bound on the L^p operator norm of the discretized kernel (power iteration for p = 2,
// Boyd's iteration otherwise).
OpNormEstimate op_norm_estimate(const KernelSpec& K, int n, int J, const Resolution& res = kOpNormResolution,
                                std::uint64_t seed = 1);

struct TruncationSweep {
  KernelSpec K;
  std::vector<int> J;
  std::vector<double> estimates;
  std::vector<double> growth;  // estimate(J+1)/estimate(J) - 1
  std::string label;           // "stabilizes" (< 5%), "diverges" (> 20%), or "inconclusive"
  nlohmann::json to_json() const;
};

inline constexpr double kStableGrowth = 0.05;
inline constexpr double kDivergentGrowth = 0.20;

TruncationSweep truncation_sweep(const KernelSpec& K, int n, const std::vector<int>& Js,
                                 const Resolution& res = kOpNormResolution);

struct NecessityProbe {
  KernelSpec K;
  std::vector<double> radii;
  std::vector<double> v, w;  // v(x) = int_{B_1} K(x, y) dy, w(y) = int_{B_1} K(x, y) dx, averaged over directions
  double v_slope = 0.0;      // expected -Q + b
  double w_slope = 0.0;      // expected -Q + a
  nlohmann::json to_json() const;
};

NecessityProbe necessity_probes(const KernelSpec& K, int n, const std::vector<double>& radii,
                                const Resolution& res = {8, 12, 12});

// Negative a: K_{(a,b)} <= C (K_{(0,b)} + K_{(0,a+b)}) with C = max(1, 2^{-a-1}); returns the largest
// observed K_{(a,b)} / (K_{(0,b)} + K_{(0,a+b)}) over seeded random pairs.
double negative_a_crosscheck(const KernelSpec& K, int n, int samples, std::uint64_t seed);

struct RegionRow {
  double a, b, p;
  int J;
  double estimate;
  std::string label;
};

std::vector<RegionRow> region_sweep(int n, double p, const std::vector<double>& as, const std::vector<double>& bs,
                                    const std::vector<int>& Js, const Resolution& res = kOpNormResolution);
std::string region_sweep_csv(const std::vector<RegionRow>& rows);

// Empirical bound of K_0: S'_{p,delta-2} -> S'_{p,delta}, through the two-weight kernel with
// a = delta + Q/p, b = 2 - a, divided by c_0.
double k0_bound(int n, double c0, double p, double delta, int J = 6);

}  // namespace heis
