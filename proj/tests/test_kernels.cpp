#include "doctest.h"
#include "heis/kernels.hpp"
#include "heis/operators.hpp"
#include "heis/test_functions.hpp"

#include <random>

using namespace heis;

namespace {

// 2n c_vol |S^{2n-1}| int_{-pi/2}^{pi/2} cos^n
double analytic_c0(int n) {
  Eigen::VectorXd x, w;
  gauss_legendre(64, -M_PI / 2, M_PI / 2, x, w);
  double I = 0.0;
  for (int i = 0; i < x.size(); ++i) I += w(i) * std::pow(std::cos(x(i)), n);
  const double cvol = std::pow(4.0, n) * std::tgamma(n + 1.0);
  const double sphere = 2.0 * std::pow(M_PI, n) / std::tgamma(n);
  return 2.0 * n * cvol * sphere * I;
}

HPoint<double> pt(double x, double y, double t) {
  HPoint<double> p(1);
  p.x(0) = x;
  p.y(0) = y;
  p.t = t;
  return p;
}

GridPtr primed_grid(int n, double rmin, double rmax, Resolution r) {
  GridOptions o;
  o.n = n;
  o.r_min = rmin;
  o.R_max = rmax;
  o.core = false;
  o.res = r;
  return make_grid(o);
}

}  // namespace

TEST_CASE("fundamental constant") {
  CHECK(analytic_c0(1) == doctest::Approx(32.0 * M_PI).epsilon(1e-13));
  CHECK(analytic_c0(2) == doctest::Approx(128.0 * std::pow(M_PI, 3)).epsilon(1e-13));
  for (int n : {1, 2}) {
    const auto fc = compute_c0(n);
    CHECK(fc.stable);
    CHECK(fc.oracles_agree);
    CHECK(fc.c0 == doctest::Approx(analytic_c0(n)).epsilon(1e-8));
    CHECK(fc.flux_R2 == doctest::Approx(fc.c0).epsilon(1e-10));
    CHECK(fc.alt_fine == doctest::Approx(analytic_c0(n)).epsilon(1e-2));
  }
}

TEST_CASE("K0 far field and integrability guard") {
  const double c0 = analytic_c0(1);
  const Field f = named_test_function("ring_bump", 1);
  const K0Convolver K0(f, 1, c0);
  CHECK(K0.tail_share() < 1e-3);
  const auto ff = far_field(K0, {8.0, 16.0, 32.0, 64.0});
  CHECK(ff.slope == doctest::Approx(-2.0).epsilon(0.03));
  CHECK(ff.limit_ratio == doctest::Approx(1.0).epsilon(1e-2));

  CHECK_THROWS_AS(K0Convolver(sigma_power_field(1, -3.0), 1, c0), std::domain_error);
  CHECK_THROWS_AS(K0Convolver(f, 1, -1.0), std::invalid_argument);
}

TEST_CASE("K0 inverts the flat sub-Laplacian") {
  const double c0 = analytic_c0(1);
  const Field u = bump_family(1, 1, 5)[0];
  const Field f = apply(SubellipticOperator::flat(1), u);
  const K0Convolver K0(f, 1, c0);
  const auto g = primed_grid(1, 0.125, 16.0, {3, 6, 6});
  const GridFunctionD us = sample(u, g), vs = sample(K0.as_field(), g);
  GridFunctionD e = vs;
  e.values -= us.values;
  for (double d : {-0.5, -1.0, -1.5}) {
    NormSpec s;
    s.p = 2.0;
    s.delta = d;
    s.flavor = Flavor::Rho;
    CHECK(weighted_norm(e, s).value < 0.02 * weighted_norm(us, s).value);
  }
  // second-order jets reproduce f
  for (const auto& x : {pt(0.3, 0.2, 0.1), pt(0.7, -0.2, 0.3), pt(-0.4, 0.9, -0.5)}) {
    const auto fj = K0.frame(x);
    CHECK(std::abs(fj.d2.trace() - f(x)) < 0.03 * std::max(std::abs(f(x)), 0.1));
    CHECK(fj.value == doctest::Approx(K0(x)).epsilon(1e-12));
  }
  // jets agree with value differences
  const HPoint<double> x = pt(0.5, 0.3, -0.2);
  const auto j = K0.jet(x);
  const double h = 1e-3;
  for (int c = 0; c < 3; ++c) {
    HPoint<double> a = x, b = x;
    a.coord(c) += h;
    b.coord(c) -= h;
    CHECK(std::abs(j.g(c) - (K0(a) - K0(b)) / (2 * h)) < 1e-3 * (1.0 + std::abs(j.g(c))));
  }
}

TEST_CASE("K0 on grid samples") {
  const double c0 = analytic_c0(1);
  const Field f = named_test_function("ring_bump", 1);
  const K0Convolver K0(f, 1, c0);
  GridOptions o;
  o.n = 1;
  o.r_min = 1.0 / 16;
  o.R_max = 16.0;
  o.core = true;
  o.res = {8, 16, 16};
  const auto g = make_grid(o);
  const auto fs = sample(f, g);
  for (const auto& x : {pt(0.5, 0.5, 0.0), pt(2.0, -1.0, 3.0)}) CHECK(convolve_k0(fs, c0, x) == doctest::Approx(K0(x)).epsilon(0.05));
}

TEST_CASE("two-weight kernel: preconditions and homogeneity") {
  CHECK_THROWS_AS(KernelSpec({1.0, -1.0, 2.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec({0.0, 0.0, 2.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec({1.0, 1.0, 1.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(op_norm_estimate({-1.0, 0.5, 2.0}, 1, 4), std::invalid_argument);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  const KernelSpec K{1.3, 0.4, 2.0};
  for (int k = 0; k < 100; ++k) {
    const auto x = pt(U(rng), U(rng), U(rng)), y = pt(U(rng), U(rng), U(rng));
    for (double R : {0.5, 3.0}) CHECK(two_weight_kernel(K, dilate(R, x), dilate(R, y)) == doctest::Approx(std::pow(R, -4.0) * two_weight_kernel(K, x, y)).epsilon(1e-12));
  }

  // (K u_R)(x) = (K u)(delta_R x) on a dilation-invariant grid
  const auto g = primed_grid(1, std::ldexp(1.0, -6), std::ldexp(1.0, 6), {3, 6, 6});
  const Field u = gaussian_ring(1, 1.0, 2.0, 0.5);
  const Field uR = rescale(u, 2.0);
  const std::vector<HPoint<double>> xs = {pt(0.3, 0.1, 0.2), pt(1.0, -0.5, 0.7)};
  std::vector<HPoint<double>> xs2;
  for (const auto& x : xs) xs2.push_back(dilate(2.0, x));
  const auto a = two_weight_apply(K, uR, g, xs), b = two_weight_apply(K, u, g, xs2);
  for (size_t i = 0; i < xs.size(); ++i) CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-3));
}

TEST_CASE("two-weight kernel: operator norms") {
  const auto s11 = truncation_sweep({1.0, 1.0, 2.0}, 1, {4, 5, 6});
  CHECK(s11.growth.back() < kStableGrowth);
  CHECK(s11.label == "stabilizes");
  const auto s25 = truncation_sweep({2.5, 1.0, 2.0}, 1, {4, 5, 6});
  CHECK(s25.growth.back() > kDivergentGrowth);
  CHECK(s25.label == "diverges");

  const auto e = op_norm_estimate({1.0, 1.0, 2.0}, 1, 4);
  CHECK(e.estimate >= e.random_lower);
  CHECK(e.random_lower > 0.0);

  // adjoint symmetry (a, b, p) <-> (b, a, p')
  const auto A = op_norm_estimate({1.5, 0.5, 3.0}, 1, 4), B = op_norm_estimate({0.5, 1.5, 1.5}, 1, 4);
  CHECK(A.estimate == doctest::Approx(B.estimate).epsilon(1e-8));

  const auto rows = region_sweep(1, 2.0, {1.0, -1.0}, {0.5}, {3, 4});
  CHECK(rows.size() == 2);  // (-1, 0.5) is outside a + b > 0
  const std::string csv = region_sweep_csv(rows);
  CHECK(csv.rfind("a,b,p,T,norm_estimate,label\n", 0) == 0);

  const double kb = k0_bound(1, analytic_c0(1), 2.0, -1.0, 4);
  CHECK(kb > 0.0);
  CHECK(std::isfinite(kb));
  CHECK_THROWS_AS(k0_bound(1, analytic_c0(1), 2.0, 0.5), std::invalid_argument);
}

TEST_CASE("two-weight kernel: necessity probes and negative a") {
  const std::vector<double> radii = {8.0, 16.0, 32.0, 64.0};
  for (const KernelSpec& K : {KernelSpec{1.0, 1.0, 2.0}, KernelSpec{2.0, 0.5, 2.0}, KernelSpec{1.0, 0.0, 2.0}}) {
    const auto pr = necessity_probes(K, 1, radii);
    CHECK(pr.v_slope == doctest::Approx(-4.0 + K.b).epsilon(0.05));
    CHECK(pr.w_slope == doctest::Approx(-4.0 + K.a).epsilon(0.05));
  }
  for (double a : {-0.5, -1.0, -2.0}) {
    const KernelSpec K{a, 1.0 - a, 2.0};
    CHECK(negative_a_crosscheck(K, 1, 2000, 3) <= std::max(1.0, std::pow(2.0, -a - 1.0)) + 1e-12);
  }
}
