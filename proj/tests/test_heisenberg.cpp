#include "doctest.h"
#include "heis/field.hpp"
#include "heis/heisenberg.hpp"

#include <random>

using namespace heis;

namespace {

HPoint<double> random_point(std::mt19937_64& rng, int n, double scale = 2.0) {
  std::uniform_real_distribution<double> U(-scale, scale);
  HPoint<double> p(n);
  for (int i = 0; i < 2 * n + 1; ++i) p.coord(i) = U(rng);
  return p;
}

double dist(const HPoint<double>& a, const HPoint<double>& b) {
  double m = 0.0;
  for (int i = 0; i < 2 * a.n() + 1; ++i) m = std::max(m, std::abs(a.coord(i) - b.coord(i)));
  return m;
}

// Oracle group law written with complex arithmetic: t + t' + 2 Im(sum z_j conj(z'_j)).
HPoint<double> complex_mul(const HPoint<double>& a, const HPoint<double>& b) {
  HPoint<double> r(a.n());
  std::complex<double> s = 0.0;
  for (int j = 0; j < a.n(); ++j) {
    const std::complex<double> za(a.x(j), a.y(j)), zb(b.x(j), b.y(j));
    r.x(j) = a.x(j) + b.x(j);
    r.y(j) = a.y(j) + b.y(j);
    s += za * std::conj(zb);
  }
  r.t = a.t + b.t + 2.0 * s.imag();
  return r;
}

}  // namespace

TEST_CASE("group law matches the complex-form convention") {
  std::mt19937_64 rng(7);
  for (int n : {1, 2, 3}) {
    for (int k = 0; k < 200; ++k) {
      const auto a = random_point(rng, n), b = random_point(rng, n);
      CHECK(dist(group_mul(a, b), complex_mul(a, b)) < 1e-14);
    }
  }
}

TEST_CASE("group axioms on random triples") {
  std::mt19937_64 rng(11);
  for (int n : {1, 2}) {
    const auto e = HPoint<double>::identity(n);
    for (int k = 0; k < 10000; ++k) {
      const auto a = random_point(rng, n), b = random_point(rng, n), c = random_point(rng, n);
      CHECK(dist(group_mul(group_mul(a, b), c), group_mul(a, group_mul(b, c))) < 1e-12);
      if (k % 50 == 0) {
        CHECK(dist(group_mul(e, a), a) == 0.0);
        CHECK(dist(group_mul(a, inverse(a)), e) < 1e-15);
        CHECK(dist(group_mul(inverse(a), a), e) < 1e-15);
        CHECK(dist(inverse(inverse(a)), a) == 0.0);
        CHECK(rho(inverse(a)) == doctest::Approx(rho(a)).epsilon(1e-15));
      }
    }
  }
  CHECK_THROWS_AS(group_mul(HPoint<double>(1), HPoint<double>(2)), std::invalid_argument);
}

TEST_CASE("dilations and gauge") {
  std::mt19937_64 rng(3);
  const auto p = HPoint<double>::make(0.3, -0.7, 1.1);
  const auto d = dilate(2.0, p);
  CHECK(d.x(0) == 0.6);
  CHECK(d.y(0) == -1.4);
  CHECK(d.t == doctest::Approx(4.4));
  CHECK(dist(dilate(1.0, p), p) == 0.0);
  CHECK_THROWS(dilate(0.0, p));
  CHECK_THROWS(dilate(-1.0, p));

  const auto g0 = gauge(HPoint<double>(1));
  CHECK(g0.rho == 0.0);
  CHECK(g0.sigma == 1.0);
  CHECK(gauge(HPoint<double>::make(0.6, 0.8, 0.0)).rho == doctest::Approx(1.0));
  const auto gt = gauge(HPoint<double>::make(0.0, 0.0, 1.0));
  CHECK(gt.rho == 1.0);
  CHECK(gt.sigma == doctest::Approx(std::pow(2.0, 0.25)));

  std::uniform_real_distribution<double> UR(0.1, 10.0);
  for (int k = 0; k < 10000; ++k) {
    const int n = 1 + k % 2;
    const auto x = random_point(rng, n, 3.0);
    const double R = UR(rng);
    CHECK(std::abs(rho(dilate(R, x)) - R * rho(x)) <= 1e-12 * R * rho(x));
    const auto y = random_point(rng, n);
    const double R2 = UR(rng);
    CHECK(dist(dilate(R, dilate(R2, y)), dilate(R * R2, y)) < 1e-12 * (1 + R * R * R2 * R2));
    const auto g = gauge(x);
    CHECK(g.sigma >= 1.0);
    CHECK(g.sigma >= g.rho);
    CHECK(g.sigma == doctest::Approx(std::pow(1.0 + std::pow(g.rho, 4), 0.25)).epsilon(1e-14));
  }
}

TEST_CASE("quasi-triangle constant is finite and stable") {
  auto gamma_for = [](int samples) {
    std::mt19937_64 rng(5);
    double g = 0.0;
    for (int k = 0; k < samples; ++k) {
      const auto a = random_point(rng, 1, 3.0), b = random_point(rng, 1, 3.0);
      g = std::max(g, rho(group_mul(a, b)) / (rho(a) + rho(b)));
    }
    return g;
  };
  const double g1 = gamma_for(20000), g2 = gamma_for(40000);
  CHECK(g1 >= 0.5);
  CHECK(std::isfinite(g2));
  CHECK(g2 / g1 < 1.05);
}

TEST_CASE("frame fields: examples and brackets") {
  const Field tf = coordinate_field(1, 2), x1 = coordinate_field(1, 0);
  const auto p = HPoint<double>::make(0.4, -1.3, 0.2);
  CHECK(frame_apply(0, tf, p) == doctest::Approx(2.0 * p.y(0)));
  CHECK(frame_apply(1, tf, p) == doctest::Approx(-2.0 * p.x(0)));
  CHECK(frame_apply(0, x1, p) == 1.0);
  CHECK_THROWS_AS(frame_apply(2, x1, p), std::out_of_range);

  // Random cubic polynomials in (x, y, t); d/dt computed from the explicit coefficients.
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int n : {1, 2}) {
    const int d = 2 * n + 1;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::array<int, 3>> monos;
      std::vector<double> coef;
      for (int m = 0; m < 12; ++m) {
        monos.push_back({static_cast<int>(rng() % d), static_cast<int>(rng() % d), static_cast<int>(rng() % d)});
        coef.push_back(U(rng));
      }
      const Field f = make_field("poly", [=](const auto& q) {
        using S = std::decay_t<decltype(q.t)>;
        S s(0.0);
        for (size_t m = 0; m < monos.size(); ++m) s = s + coef[m] * q.coord(monos[m][0]) * q.coord(monos[m][1]) * q.coord(monos[m][2]);
        return s;
      });
      auto dt = [&](const HPoint<double>& q) {
        double s = 0.0;
        for (size_t m = 0; m < monos.size(); ++m) {
          const auto& mo = monos[m];
          for (int k = 0; k < 3; ++k) {
            if (mo[k] != d - 1) continue;
            double prod = coef[m];
            for (int l = 0; l < 3; ++l)
              if (l != k) prod *= q.coord(mo[l]);
            s += prod;
          }
        }
        return s;
      };
      const auto q = random_point(rng, n);
      const auto fj = frame_jet(f, q);
      for (int a = 0; a < 2 * n; ++a) {
        for (int b = 0; b < 2 * n; ++b) {
          const double br = fj.d2(a, b) - fj.d2(b, a);
          double expect = 0.0;
          if (b == a + n) expect = -4.0 * dt(q);
          if (a == b + n) expect = 4.0 * dt(q);
          CHECK(br == doctest::Approx(expect).epsilon(1e-12).scale(1.0));
        }
      }
    }
  }
}

TEST_CASE("sub-Laplacian examples") {
  const auto p = HPoint<double>::make(0.4, -1.3, 0.2);
  const Field x2 = make_field("x^2", [](const auto& q) { return q.x(0) * q.x(0); });
  CHECK(flat_sublaplacian(x2, p) == doctest::Approx(2.0));
  CHECK(flat_sublaplacian(coordinate_field(1, 2), p) == doctest::Approx(0.0));
  // Jets of the sub-Laplacian field: Lap(t^2) = 8|z|^2, whose Lap is 32 for n = 1.
  const Field t2 = make_field("t^2", [](const auto& q) { return q.t * q.t; });
  CHECK(flat_sublaplacian(t2, p) == doctest::Approx(8.0 * abs_z2(p)));
  CHECK(flat_sublaplacian(sublaplacian(t2), p) == doctest::Approx(32.0));
  CHECK_THROWS_AS(flat_sublaplacian(sublaplacian(sublaplacian(t2)), p), derivative_unavailable);
}

TEST_CASE("Haar density and Koranyi ball volume") {
  CHECK(haar_volume_element(1) == 4.0);
  CHECK(haar_volume_element(2) == 32.0);
  CHECK(koranyi_ball_volume(1) == doctest::Approx(2.0 * M_PI * M_PI));
  CHECK(koranyi_ball_volume(1, 2.0) / koranyi_ball_volume(1) == doctest::Approx(16.0));
  // Cylindrical oracle: vol = c_vol |S^{2n-1}| int_0^1 r^{2n-1} 2 sqrt(1 - r^4) dr (midpoint rule).
  for (int n : {1, 2}) {
    const int m = 400000;
    double s = 0.0;
    for (int i = 0; i < m; ++i) {
      const double r = (i + 0.5) / m;
      s += std::pow(r, 2 * n - 1) * 2.0 * std::sqrt(1.0 - r * r * r * r) / m;
    }
    const double oracle = haar_volume_element(n) * sphere_area(n) * s;
    CHECK(koranyi_ball_volume(n) == doctest::Approx(oracle).epsilon(1e-3));
  }
}
