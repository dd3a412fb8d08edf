#include "doctest.h"
#include "heis/af_model.hpp"
#include "heis/test_functions.hpp"

using namespace heis;

namespace {

GridPtr grid(int n, double rmin, double rmax, Resolution r) {
  GridOptions o;
  o.n = n;
  o.r_min = rmin;
  o.R_max = rmax;
  o.core = true;
  o.res = r;
  return make_grid(o);
}

HPoint<double> at(int n, double x, double y, double t) {
  HPoint<double> p(n);
  p.x(0) = x;
  p.y(0) = y;
  p.t = t;
  return p;
}

}  // namespace

TEST_CASE("model constants") {
  const AFModel m{1, 0.01};
  CHECK(m.c_n() == doctest::Approx(4.0 * M_PI));
  CHECK(m.c_tilde_n() == doctest::Approx(2.0 * M_PI));
  CHECK(m.leading() == doctest::Approx(0.08 * M_PI));
  const AFModel m2{2, 0.01, 2.0};
  CHECK(m2.c_n() == doctest::Approx(M_PI));
  CHECK_THROWS_AS((AFModel{1, 0.0, 0.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((AFModel{1, 0.0, 1.0, -1.0}).validate(), std::invalid_argument);
}

TEST_CASE("blow-up coefficient") {
  const AFModel m{1, 0.01};
  const HPoint<double> p = at(1, 2.0, 0.0, 0.0);
  CHECK(blowup_coefficient(m, p) == doctest::Approx(1.0 + m.leading() / 4.0).epsilon(1e-14));
  CHECK_THROWS_AS(blowup_coefficient(m, at(1, 0.3, 0.0, 0.0)), std::domain_error);
  const Field b = blowup_field(m);
  for (double x : {1.0, 1.7, 3.0, 10.0}) {
    const HPoint<double> q = at(1, x, 0.3, 0.5 * x * x);
    if (rho(q) >= m.rho_0) CHECK(b(q) == doctest::Approx(blowup_coefficient(m, q)).epsilon(1e-12));
  }
  CHECK(b(at(1, 0.1, 0.0, 0.0)) == 1.0);
  CHECK(blowup_field(AFModel{1, 0.0})(p) == 1.0);
}

TEST_CASE("builder passes its own validation") {
  const GridPtr g = grid(1, 0.25, 64.0, {4, 8, 8});
  for (double A : {0.005, -0.01, 0.02}) {
    const SubellipticOperator P = build_perturbed_sublaplacian(AFModel{1, A}, 1.0);
    const AsymptoticReport r = validate_asymptotic(P, g);
    CHECK(r.elliptic);
    CHECK(r.pass);
    CHECK(r.lhs <= P.C1);
    CHECK(P.lambda > 0.0);
    CHECK(P.lambda < 1.0);
  }
  const SubellipticOperator flat = build_perturbed_sublaplacian(AFModel{1, 0.0}, 1.0);
  CHECK(validate_asymptotic(flat, g).pass);
}

TEST_CASE("builder rejections") {
  const AFModel m{1, 0.01};
  CHECK_THROWS_AS(build_perturbed_sublaplacian(m, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_perturbed_sublaplacian(m, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(build_perturbed_sublaplacian(m, 2.5), std::invalid_argument);
  CHECK_THROWS_AS(build_perturbed_sublaplacian(m, 1.0, 3.0), std::invalid_argument);
  // |4 c~ A| = 1 at rho_0
  CHECK_THROWS_AS(build_perturbed_sublaplacian(AFModel{1, 1.0 / (8.0 * M_PI)}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_perturbed_sublaplacian(AFModel{1, -0.1}, 1.0), std::invalid_argument);
}

TEST_CASE("frame expansion") {
  const AFModel m{1, 0.02};
  for (double R : {2.0, 8.0, 32.0}) {
    const FrameExpansion fe = frame_expansion(m, at(1, R, 0.0, 0.0));
    const double e = m.c_tilde_n() * m.A_p / (R * R);
    CHECK(fe.frame == doctest::Approx(1.0 - e));
    CHECK(fe.coframe == doctest::Approx(1.0 + e));
    CHECK(fe.product_defect == doctest::Approx(-e * e).epsilon(1e-9));
  }
  CHECK(frame_expansion(m, at(1, 2.0, 0.0, 0.0)).remainder_order == 3);
  CHECK_THROWS_AS(frame_expansion(m, at(1, 0.5, 0.0, 0.0)), std::domain_error);
}

TEST_CASE("decay claims") {
  for (int n : {1, 2}) {
    const AFModel m{n, 0.01};
    const auto res = validate_decay(model_decay_claims(m), model_decay_fields(m), n);
    REQUIRE(res.size() == 4);
    for (const auto& r : res) {
      CHECK(r.pass);
      CHECK(r.slope == doctest::Approx(-r.claim.s).epsilon(0.05));
    }
  }
  // a field decaying slower than claimed fails
  const DecayClaim c{"slow", 3.0, {4.0, 8.0, 16.0}};
  const auto bad = validate_decay({c}, {rho_power_cutoff(1, -2.0)}, 1);
  CHECK_FALSE(bad[0].pass);
  CHECK(bad[0].slope == doctest::Approx(-2.0).epsilon(1e-6));
  const auto zero = validate_decay({c}, {Field::constant(0.0)}, 1);
  CHECK(zero[0].pass);
  CHECK_THROWS_AS(validate_decay({c}, {}, 1), std::invalid_argument);
  CHECK(zero[0].to_json()["slope"] == "-inf");
}
