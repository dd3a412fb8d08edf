#include "doctest.h"
#include "heis/inequalities.hpp"
#include "heis/test_functions.hpp"

#include <random>

using namespace heis;

namespace {

GridOptions opts(int n, double rmin, double rmax, Resolution r = {6, 12, 12}, bool core = true) {
  GridOptions o;
  o.n = n;
  o.r_min = rmin;
  o.R_max = rmax;
  o.core = core;
  o.res = r;
  return o;
}

Field sigma_bump(double s, const BumpParams& b) {
  return sigma_power_field(1, s) * gaussian_ring(1, b.a, b.b, b.w);
}

// Vanishes for rho >= 2.
Field compact_field() {
  return make_field("compact", [](const auto& p) {
    using S = std::decay_t<decltype(p.t)>;
    return smooth_step(S(1.0) - rho4(p) / 16.0);
  });
}

}  // namespace

TEST_CASE("embedding: degenerate, exact sup case, explicit constant") {
  const auto g = make_grid(opts(1, 1.0, 16.0));
  const auto z = check_embedding(Field::zero(), 2.0, 3.0, 0.0, -1.0, g);
  CHECK(z.degenerate);
  CHECK(z.holds);
  CHECK_THROWS_AS(check_embedding(Field::zero(), 3.0, 2.0, 0.0, -1.0, g), std::invalid_argument);
  CHECK_THROWS_AS(check_embedding(Field::zero(), 2.0, 3.0, -1.0, 0.0, g), std::invalid_argument);

  const auto fam = bump_family_params(20, 5);
  for (const auto& b : fam) {
    const Field u = sigma_bump(-0.5, b);
    const auto r = check_embedding(u, kInf, kInf, 0.0, -1.0, g);
    CHECK(r.bound == 1.0);
    CHECK(r.ratio <= 1.0);
  }

  // constant against a direct sum over nodes
  double s = 0.0;
  for (int i = 0; i < g->size(); ++i) s += g->weights(i) * std::pow(sigma(g->point(i)), -0.5 * 2 * 4 / 2.0 - 4);
  CHECK(embedding_constant(*g, 2.0, 4.0, 0.0, -0.5) == doctest::Approx(std::pow(s, 0.25)).epsilon(1e-14));
  CHECK(embedding_constant(*g, 3.0, 3.0, 0.0, -0.5) == 1.0);
}

TEST_CASE("embedding over a random family, stable under domain doubling") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto g1 = make_grid(opts(1, 1.0, 32.0)), g2 = make_grid(opts(1, 1.0, 64.0));
  const auto fam = bump_family_params(30, 9);
  double m1 = 0.0, m2 = 0.0;
  for (const auto& b : fam) {
    const double s = -2.0 * U(rng);
    const double p = 1.0 + 2.0 * U(rng);
    const double q = U(rng) < 0.2 ? kInf : p + 3.0 * U(rng);
    const double d1 = -1.0 + 2.0 * U(rng), d2 = d1 - 0.2 - 1.5 * U(rng);
    const Field u = sigma_bump(s, b);
    const auto r1 = check_embedding(u, p, q, d1, d2, g1), r2 = check_embedding(u, p, q, d1, d2, g2);
    CHECK(r1.holds);
    CHECK(r2.holds);
    m1 = std::max(m1, r1.ratio);
    m2 = std::max(m2, r2.ratio);
  }
  CHECK(std::isfinite(m2));
  CHECK(std::abs(m2 / m1 - 1.0) < 0.1);
}

TEST_CASE("Hoelder") {
  const auto g = make_grid(opts(1, 1.0, 16.0));
  const Field u = named_test_function("ring_bump", 1);
  const auto eq = check_holder(u, Field::constant(1.0), 2.0, 2.0, kInf, -1.0, 0.0, g);
  CHECK(eq.ratio == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(eq.holds);
  const auto eq2 = check_holder(u, sigma_power_field(1, -0.7), 3.0, 3.0, kInf, -1.0, -0.7, g);
  CHECK(eq2.rhs == doctest::Approx(weighted_norm(u, {0, 3.0, -1.0}, g).value).epsilon(1e-12));
  for (const auto& b : bump_family_params(20, 13)) {
    const Field f = sigma_bump(-0.3, b);
    const auto r = check_holder(f, f, 1.0, 2.0, 2.0, -0.5, -1.5, g);
    CHECK(r.holds);
    CHECK(r.ratio <= 1.0);
  }
  CHECK_THROWS_AS(check_holder(u, u, 1.0, 2.0, 3.0, 0.0, 0.0, g), std::invalid_argument);
}

TEST_CASE("interpolation") {
  const auto g = make_grid(opts(1, 1.0, 64.0));
  const std::vector<double> eps = {0.1, 1.0, 10.0};
  const auto z = check_interpolation(Field::zero(), 0, 2.0, -1.0, eps, g);
  for (double c : z.required_C) CHECK(c == 0.0);
  CHECK_THROWS_AS(check_interpolation(Field::zero(), 1, 2.0, -1.0, eps, g), derivative_unavailable);

  // family sup of the required constant: finite, and no growth from 20 to 40 members
  auto family_sup = [&](int count) {
    std::vector<double> sup(eps.size(), 0.0);
    for (const auto& f : bump_family(1, count, 21)) {
      const auto r = check_interpolation(f, 0, 2.0, -1.0, eps, g);
      for (size_t e = 0; e < eps.size(); ++e) sup[e] = std::max(sup[e], r.required_C[e]);
    }
    return sup;
  };
  const auto s20 = family_sup(20), s40 = family_sup(40);
  for (size_t e = 0; e < eps.size(); ++e) {
    CHECK(std::isfinite(s40[e]));
    CHECK(s40[e] <= 1.1 * s20[e] + 1e-12);
  }

  // dilated bumps: the required constant stays bounded as R grows
  const Field u = gaussian(1);
  std::vector<double> c;
  for (double R : {1.0, 2.0, 4.0, 8.0, 16.0}) c.push_back(check_interpolation(rescale(u, R), 0, 2.0, -1.0, {0.1}, g).required_C[0]);
  const double early = *std::max_element(c.begin(), c.begin() + 3);
  CHECK(c[3] <= early);
  CHECK(c[4] <= early);
}

TEST_CASE("Sobolev regimes") {
  const auto g = make_grid(opts(1, 1.0, 64.0));
  const Field u = named_test_function("ring_bump", 1);
  CHECK_THROWS_AS(check_sobolev_decay(u, {SobolevRegime::Sup, 1, 2.0, 2.0, -1.0}, g), std::invalid_argument);
  CHECK_THROWS_AS(check_sobolev_decay(u, {SobolevRegime::Lebesgue, 2, 3.0, 3.0, -1.0}, g), std::invalid_argument);
  CHECK_THROWS_AS(check_sobolev_decay(u, {SobolevRegime::Lebesgue, 1, 2.0, 5.0, -1.0}, g), std::invalid_argument);
  CHECK_THROWS_AS(check_sobolev_decay(u, {SobolevRegime::Decay, 1, 3.0, 3.0, -1.0}, g), std::invalid_argument);

  const auto leb = check_sobolev_decay(u, {SobolevRegime::Lebesgue, 1, 2.0, 3.0, -1.0}, g);
  CHECK(std::isfinite(leb.ratio));
  CHECK(leb.ratio > 0.0);
  const auto sup = check_sobolev_decay(u, {SobolevRegime::Sup, 2, 3.0, 3.0, -1.0}, g);
  CHECK(std::isfinite(sup.ratio));
  CHECK(sup.ratio > 0.0);
  CHECK(sup.to_json()["regime"] == "sup");
}

TEST_CASE("decay surrogate") {
  const auto g = make_grid(opts(1, 1.0, 64.0));
  const SobolevClaim claim{SobolevRegime::Decay, 2, 3.0, 3.0, -1.0};

  const auto c = check_sobolev_decay(compact_field(), claim, g);
  CHECK(c.annulus_sup.back() == 0.0);
  CHECK(c.decreasing);

  const auto r = check_sobolev_decay(rho_power_cutoff(1, -1.5), claim, g);
  REQUIRE(r.radii.size() == 4);
  CHECK(r.radii.front() == 4.0);
  CHECK(r.decreasing);
  CHECK(r.slope == doctest::Approx(-0.5).epsilon(0.02));
  CHECK(std::isfinite(r.rhs));

  // sigma^delta is not o(rho^delta) and its annulus norms do not vanish
  const auto neg = check_sobolev_decay(sigma_power_field(1, -1.0), claim, g);
  CHECK_FALSE(neg.decreasing);
  CHECK(neg.annulus_norm.back() > 0.5 * neg.annulus_norm.front());

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    const double s = -1.25 - U(rng), cc = -0.5 + U(rng);
    const auto f = check_sobolev_decay(sigma_power_profile(1, s, cc), claim, g);
    CHECK(f.decreasing);
    CHECK(std::isfinite(f.rhs));
  }
}
