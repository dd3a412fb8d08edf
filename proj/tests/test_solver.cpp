#include "doctest.h"
#include "heis/af_model.hpp"
#include "heis/solver.hpp"
#include "heis/test_functions.hpp"

using namespace heis;

namespace {

const double kC0 = 32.0 * M_PI;

// Smaller check grid and quadrature than the defaults to keep the unit tests quick.
SolveOptions quick() {
  SolveOptions o;
  o.check_rmin = 0.25;
  o.check_Rmax = 4.0;
  o.check_res = {2, 4, 4};
  o.k0.near = {10, 20, 20};
  o.k0.source = {14, 28, 28};
  return o;
}

GridPtr grid(int n, double rmin, double rmax, Resolution r, bool core = true) {
  GridOptions o;
  o.n = n;
  o.r_min = rmin;
  o.R_max = rmax;
  o.core = core;
  o.res = r;
  return make_grid(o);
}

double rel_error(const GridFunctionD& u, const Field& truth, double p, double delta) {
  const GridFunctionD t = sample(truth, u.grid);
  GridFunctionD e = u;
  e.values -= t.values;
  NormSpec s;
  s.p = p;
  s.delta = delta;
  return weighted_norm(e, s).value / weighted_norm(t, s).value;
}

SubellipticOperator af_operator(double A) { return build_perturbed_sublaplacian(AFModel{1, A}, 1.0); }

}  // namespace

TEST_CASE("flat solve") {
  const SolveOptions o = quick();
  const SolveReport z = solve_flat(Field::zero(), 1, kC0, o);
  CHECK(z.u.values.isZero());
  CHECK(z.converged);

  const Field u = bump_family(1, 1, 5)[0];
  const Field f = apply(SubellipticOperator::flat(1), u);
  const SolveReport r = solve_flat(f, 1, kC0, o);
  CHECK(r.converged);
  CHECK(rel_error(r.u, u, 2.0, -1.0) < 0.03);
  CHECK(r.quadrature_residual < 0.05 * r.f_norm);
  CHECK(r.tail_share < 1e-3);
  CHECK(std::isfinite(r.injectivity_constant));
  CHECK(r.injectivity_constant > 0.0);
  // u = K_0 f decays like rho^{-2n}
  const auto ff = far_field(*std::make_shared<K0Convolver>(f, 1, kC0, o.k0), {8.0, 16.0, 32.0});
  CHECK(ff.slope == doctest::Approx(-2.0).epsilon(0.05));

  SolveOptions bad = o;
  bad.delta = 0.0;
  CHECK_THROWS_AS(solve_flat(f, 1, kC0, bad), std::invalid_argument);
  bad.delta = -2.0;
  CHECK_THROWS_AS(solve_flat(f, 1, kC0, bad), std::invalid_argument);
  bad = o;
  bad.p = 1.0;
  CHECK_THROWS_AS(solve_flat(f, 1, kC0, bad), std::invalid_argument);
}

TEST_CASE("perturbed solve") {
  const SolveOptions o = quick();
  const Field u = bump_family(1, 1, 5)[0];

  SUBCASE("flat operator converges at once and matches the flat solve") {
    const Field f = apply(SubellipticOperator::flat(1), u);
    const SolveReport r = solve_perturbed(SubellipticOperator::flat(1), f, kC0, o);
    CHECK(r.converged);
    CHECK(r.iterations == 1);
    CHECK(r.residual_norm == 0.0);
    const SolveReport fl = solve_flat(f, 1, kC0, o);
    CHECK((r.u.values - fl.u.values).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("blow-up operator") {
    const SubellipticOperator P = af_operator(0.005);
    const Field f = apply(P, u);
    const SolveReport r = solve_perturbed(P, f, kC0, o);
    CHECK(r.converged);
    CHECK(r.residual_norm < o.tol * r.f_norm);
    CHECK(r.contraction_bound < 0.5);
    CHECK(r.max_contraction > 0.0);
    CHECK(r.max_contraction <= r.contraction_bound);
    for (size_t i = 1; i < r.residual_history.size(); ++i) CHECK(r.residual_history[i] < r.residual_history[i - 1]);
    CHECK(rel_error(r.u, u, 2.0, -1.0) < 0.03);
    CHECK(r.quadrature_residual < 0.05 * r.f_norm);
    const auto j = r.to_json();
    CHECK(j["estimate_constants"]["contraction_within_bound"] == true);
    CHECK(r.history_csv().rfind("iteration,residual,contraction\n", 0) == 0);
  }

  SUBCASE("failures") {
    const Field f = apply(SubellipticOperator::flat(1), u);
    // elliptic and decaying, but the absorption bound exceeds one
    CHECK_THROWS_AS(solve_perturbed(af_operator(0.028), f, kC0, o), precondition_error);
    SubellipticOperator no_c1 = af_operator(0.005);
    no_c1.C1 = 0.0;
    CHECK_THROWS_AS(solve_perturbed(no_c1, f, kC0, o), precondition_error);
    SolveOptions one = o;
    one.max_iter = 1;
    CHECK_THROWS_AS(solve_perturbed(af_operator(0.005), f, kC0, one), convergence_error);

    SubellipticOperator aniso = SubellipticOperator::flat(1);
    aniso.a = {Field::constant(1.0), Field::constant(0.0), Field::constant(0.0), Field::constant(1.1)};
    CHECK_THROWS_AS(solve_perturbed(aniso, f, kC0, o), std::invalid_argument);
    SubellipticOperator drift = SubellipticOperator::flat(1);
    drift.b = {Field::zero(), gaussian(1)};
    CHECK_THROWS_AS(solve_perturbed(drift, f, kC0, o), std::invalid_argument);
    SolveOptions pos = o;
    pos.delta = 0.5;
    CHECK_THROWS_AS(solve_perturbed(SubellipticOperator::flat(1), f, kC0, pos), std::invalid_argument);
  }
}

TEST_CASE("absorption bound") {
  const SolveOptions o;
  const GridPtr vg = grid(1, 1.0, 256.0, {4, 8, 8});
  const AbsorptionBound flat = absorption_bound(SubellipticOperator::flat(1), kC0, o, vg);
  CHECK(flat.bound == 0.0);
  const AbsorptionBound ab = absorption_bound(af_operator(0.005), kC0, o, vg);
  CHECK(ab.C_K0 == doctest::Approx(k0_bound(1, kC0, 2.0, -1.0, 6)));
  CHECK(ab.bound == doctest::Approx(ab.C_K0 * (ab.tail + ab.interior)));
  CHECK(ab.bound < 1.0);
  // tail: max of 8 pi A rho^{-2} over the nodes with rho >= R0
  double tail = 0.0;
  for (int i = 0; i < vg->size(); ++i) {
    const double r = rho(vg->point(i));
    if (r >= ab.R0) tail = std::max(tail, 8.0 * M_PI * 0.005 / (r * r));
  }
  CHECK(ab.tail == doctest::Approx(tail).epsilon(1e-6));
  CHECK(ab.tail <= 8.0 * M_PI * 0.005 / (ab.R0 * ab.R0));
}

TEST_CASE("estimate constants") {
  const auto fam = bump_family(1, 6, 3);
  // primed norms need a grid away from the origin
  const GridPtr g = grid(1, 1.0 / 16, 32.0, {3, 6, 6}, false);
  const SubellipticOperator P = af_operator(0.005);
  for (EstimateKind k : {EstimateKind::Injectivity, EstimateKind::Weighted}) {
    const ConstantEstimate ce = estimate_constant(k, P, fam, 2.0, -1.0, g);
    CHECK(ce.ratios.size() == 6);
    CHECK(ce.C > 0.0);
    CHECK(ce.stable);
  }
  const ScaleBrokenConstants sb = scale_broken_constants(P, kC0, fam, 2.0, -1.0, g);
  CHECK(sb.R >= 1.0);
  CHECK(k0_bound(1, kC0, 2.0, -1.0) * tail_op_norm(P, sb.R, g) <= 0.5);
  CHECK(sb.estimate.stable);

  // a member vanishing on B_R: the ball term drops out and the ratio is ||u||_{2,p,delta} / ||P u||
  const double R = 2.0;
  const Field v = rho_power_cutoff(1, -3.0, R, 2.0 * R);
  const ConstantEstimate ce = estimate_constant(EstimateKind::ScaleBroken, P, {v, v}, 2.0, -1.0, g, R);
  NormSpec s;
  s.p = 2.0;
  s.delta = -1.0;
  s.k = 2;
  NormSpec r = s;
  r.k = 0;
  r.delta = -3.0;
  CHECK(ce.ratios[0] == doctest::Approx(fs_norm(v, s, g).value / weighted_norm(apply(P, v), r, g).value).epsilon(1e-12));
  CHECK_THROWS_AS(estimate_constant(EstimateKind::Weighted, P, {v}, 2.0, -1.0, g), std::invalid_argument);
  CHECK_THROWS_AS(estimate_constant(EstimateKind::ScaleBroken, P, fam, 2.0, -1.0, g, 0.0), std::invalid_argument);
}

TEST_CASE("maximum principle") {
  const SubellipticOperator P = SubellipticOperator::flat(1);
  const GridPtr g = grid(1, 0.25, 4.0, {2, 4, 4});
  const MaxPrincipleReport z = maximum_principle_check(P, Field::zero(), g);
  CHECK(z.pass);
  CHECK(z.sign == 0);

  // f >= 0 gives u = K_0 f <= 0
  const Field f = named_test_function("ring_bump", 1);
  const SolveReport r = solve_flat(f, 1, kC0, quick());
  const MaxPrincipleReport m = maximum_principle_check(P, r.u, sample(f, r.u.grid).values);
  CHECK(m.sign == -1);
  CHECK(m.pass);
  CHECK(m.residual_below == 0.0);

  // an interior maximum with P u = 0 violates the principle
  GridFunctionD u(g, Eigen::VectorXd::Zero(g->size()));
  u.values(g->size() / 3) = 1.0;
  const MaxPrincipleReport bad = maximum_principle_check(P, u, Eigen::VectorXd::Zero(g->size()));
  CHECK_FALSE(bad.pass);
  CHECK(bad.sign == 1);

  SubellipticOperator pc = P;
  pc.c = Field::constant(0.5);
  CHECK_THROWS_AS(maximum_principle_check(pc, u, Eigen::VectorXd::Zero(g->size())), std::invalid_argument);
  CHECK_THROWS_AS(maximum_principle_check(P, u, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("finite-difference box solve") {
  const Field u = gaussian(1);
  const SubellipticOperator P = af_operator(0.005);
  const Field f = apply(P, u);
  std::vector<double> err;
  for (int N : {15, 31}) {
    const FDBox box{2.0, N};
    const FDSolveReport r = fd_solve(P, f, u, box);
    CHECK(r.relative_residual < 1e-10);
    double e = 0.0, s = 0.0;
    for (int i = 0; i < box.size(); ++i) {
      e = std::max(e, std::abs(r.u(i) - u(box.point(i))));
      s = std::max(s, std::abs(u(box.point(i))));
    }
    err.push_back(e / s);
  }
  // second-order stencil: the error drops by about 4 when h halves
  CHECK(err[1] < err[0] / 3.0);
  CHECK(err[1] < 0.1);

  // the stencil is exact on quadratics in x, y
  SubellipticOperator flat = SubellipticOperator::flat(1);
  const Field q = coordinate_field(1, 0) * coordinate_field(1, 0) + coordinate_field(1, 1);
  const FDBox box{1.0, 7};
  const Eigen::SparseMatrix<double> A = fd_matrix(flat, box);
  CHECK(A.rows() == box.size());
  const FDSolveReport rq = fd_solve(flat, apply(flat, q), q, box);
  for (int i = 0; i < box.size(); ++i) CHECK(rq.u(i) == doctest::Approx(q(box.point(i))).epsilon(1e-9));

  SubellipticOperator n2 = SubellipticOperator::flat(2);
  CHECK_THROWS_AS(fd_matrix(n2, box), std::invalid_argument);
}

TEST_CASE("Fredholm probe") {
  const std::vector<int> N = {5, 9, 17};
  const FredholmProbe fp = fredholm_probe(SubellipticOperator::flat(1), 2.0, -1.0, N);
  CHECK(fp.delta_star == doctest::Approx(-1.0));
  CHECK(fp.N_P == 0);
  CHECK(fp.N_Pstar == 0);
  CHECK(fp.index == 0);
  REQUIRE(fp.sigma_min_history.size() == 3);
  for (size_t i = 1; i < N.size(); ++i) {
    const double ratio = fp.sigma_min_history[i] / fp.sigma_min_history[i - 1];
    CHECK(ratio > 0.5);
    CHECK(ratio < 2.0);
  }
  for (size_t i = 0; i < N.size(); ++i)
    for (int k = 0; k + 1 < kFredholmModes; ++k) CHECK(fp.sigma[i][k] <= fp.sigma[i][k + 1]);

  const FredholmProbe pp = fredholm_probe(af_operator(0.005), 2.0, -0.5, N);
  CHECK(pp.delta_star == doctest::Approx(-1.5));
  CHECK(pp.index == 0);
  CHECK(pp.N_P == 0);

  CHECK_THROWS_AS(fredholm_probe(SubellipticOperator::flat(1), 2.0, -1.0, {5, 9}), std::invalid_argument);
  CHECK_THROWS_AS(fredholm_probe(SubellipticOperator::flat(1), 2.0, 0.5, N), std::invalid_argument);
  CHECK_THROWS_AS(fredholm_probe(SubellipticOperator::flat(1), 1.05, -1.0, N), std::invalid_argument);
  CHECK_THROWS_AS(fredholm_probe(SubellipticOperator::flat(2), 2.0, -1.0, N), std::invalid_argument);
}
