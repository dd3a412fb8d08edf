// Heisenberg group H_n: points, group law, dilations, gauge, frame and Haar measure.
//
// Conventions:
//   (z,t)(z',t') = (z+z', t+t'+2 Im<z, conj z'>) = (z+z', t+t'+2 sum_j (y_j x'_j - x_j y'_j))
//   X_j = d/dx_j + 2 y_j d/dt,  Y_j = d/dy_j - 2 x_j d/dt      ([X_j,Y_j] = -4 d/dt)
//   rho = (|z|^4 + t^2)^{1/4},  sigma = (1 + rho^4)^{1/4}
//   dV = 4^n n! dx dy dt       (Theta = dt + sum 2(x dy - y dx), dV = Theta ^ (dTheta)^n)
#pragma once

#include "heis/jet.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace heis {

inline constexpr int kMaxN = 8;

inline int homogeneous_dimension(int n) { return 2 * n + 2; }

template <typename Scalar>
struct HPoint {
  using Coords = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, kMaxN, 1>;

  Coords x;
  Coords y;
  Scalar t{};

  HPoint() = default;
  explicit HPoint(int n) : x(Coords::Zero(n)), y(Coords::Zero(n)), t(0.0) {
    if (n < 1 || n > kMaxN) throw std::invalid_argument("HPoint: n out of range");
  }

  int n() const { return static_cast<int>(x.size()); }

  // Coordinate by flat index: x_1..x_n, y_1..y_n, t.
  const Scalar& coord(int i) const { return i < n() ? x(i) : (i < 2 * n() ? y(i - n()) : t); }
  Scalar& coord(int i) { return i < n() ? x(i) : (i < 2 * n() ? y(i - n()) : t); }

  static HPoint identity(int n) { return HPoint(n); }

  // n = 1 convenience.
  static HPoint make(const Scalar& x1, const Scalar& y1, const Scalar& t) {
    HPoint p(1);
    p.x(0) = x1;
    p.y(0) = y1;
    p.t = t;
    return p;
  }

  template <typename Other>
  HPoint<Other> cast() const {
    HPoint<Other> p(n());
    for (int j = 0; j < n(); ++j) {
      p.x(j) = Other(x(j));
      p.y(j) = Other(y(j));
    }
    p.t = Other(t);
    return p;
  }
};

template <typename Scalar>
struct GaugeValues {
  Scalar rho;
  Scalar sigma;
};

inline void check_same_dim(int a, int b) {
  if (a != b) throw std::invalid_argument("Heisenberg dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}

template <typename Scalar>
HPoint<Scalar> group_mul(const HPoint<Scalar>& a, const HPoint<Scalar>& b) {
  check_same_dim(a.n(), b.n());
  HPoint<Scalar> r(a.n());
  Scalar s(0.0);
  for (int j = 0; j < a.n(); ++j) {
    r.x(j) = a.x(j) + b.x(j);
    r.y(j) = a.y(j) + b.y(j);
    s = s + (a.y(j) * b.x(j) - a.x(j) * b.y(j));
  }
  r.t = a.t + b.t + 2.0 * s;
  return r;
}

template <typename Scalar>
HPoint<Scalar> inverse(const HPoint<Scalar>& a) {
  HPoint<Scalar> r(a.n());
  r.x = -a.x;
  r.y = -a.y;
  r.t = -a.t;
  return r;
}

template <typename Scalar>
HPoint<Scalar> dilate(double R, const HPoint<Scalar>& a) {
  if (!(R > 0.0)) throw std::invalid_argument("dilate: R must be positive");
  HPoint<Scalar> r(a.n());
  for (int j = 0; j < a.n(); ++j) {
    r.x(j) = a.x(j) * R;
    r.y(j) = a.y(j) * R;
  }
  r.t = a.t * (R * R);
  return r;
}

template <typename Scalar>
Scalar abs_z2(const HPoint<Scalar>& a) {
  Scalar s(0.0);
  for (int j = 0; j < a.n(); ++j) s = s + a.x(j) * a.x(j) + a.y(j) * a.y(j);
  return s;
}

// rho^4 = |z|^4 + t^2; smooth everywhere, unlike rho itself.
template <typename Scalar>
Scalar rho4(const HPoint<Scalar>& a) {
  const Scalar r2 = abs_z2(a);
  return r2 * r2 + a.t * a.t;
}

template <typename Scalar>
Scalar rho(const HPoint<Scalar>& a) {
  using std::pow;
  return pow(rho4(a), 0.25);
}

template <typename Scalar>
Scalar sigma(const HPoint<Scalar>& a) {
  using std::pow;
  return pow(rho4(a) + 1.0, 0.25);
}

template <typename Scalar>
GaugeValues<Scalar> gauge(const HPoint<Scalar>& a) {
  using std::pow;
  const Scalar r4 = rho4(a);
  return {pow(r4, 0.25), pow(r4 + 1.0, 0.25)};
}

// rho(y^{-1} x) without forming the product point.
inline double rho_between(const double* y, const double* x, int n) {
  double z2 = 0.0, s = 0.0;
  for (int j = 0; j < n; ++j) {
    const double dx = x[j] - y[j], dy = x[n + j] - y[n + j];
    z2 += dx * dx + dy * dy;
    s += y[j] * x[n + j] - y[n + j] * x[j];
  }
  const double dt = x[2 * n] - y[2 * n] + 2.0 * s;
  return std::sqrt(std::sqrt(z2 * z2 + dt * dt));
}

// Haar density of Theta ^ (dTheta)^n against dx dy dt: 4^n n!.
inline double haar_volume_element(int n) {
  double c = 1.0;
  for (int k = 1; k <= n; ++k) c *= 4.0 * k;
  return c;
}

// Euclidean area of the unit sphere S^{2n-1} in C^n.
inline double sphere_area(int n) { return 2.0 * std::pow(M_PI, n) / std::tgamma(static_cast<double>(n)); }

// int_{-pi/2}^{pi/2} cos^m(psi) dpsi
inline double cos_power_integral(double m) {
  return std::sqrt(M_PI) * std::tgamma((m + 1.0) / 2.0) / std::tgamma(m / 2.0 + 1.0);
}

// Measure of the unit gauge sphere in polar coordinates dV = rho^{Q-1} drho dmu.
inline double gauge_sphere_measure(int n) {
  return haar_volume_element(n) * sphere_area(n) * cos_power_integral(n - 1.0);
}

inline double koranyi_ball_volume(int n, double R = 1.0) {
  const int Q = homogeneous_dimension(n);
  return gauge_sphere_measure(n) / Q * std::pow(R, Q);
}

// Coefficient of d/dt in frame vector a (0-based): X_j -> 2y_j, Y_j -> -2x_j.
template <typename Scalar>
Scalar frame_t_coeff(int a, const HPoint<Scalar>& p) {
  const int n = p.n();
  if (a < 0 || a >= 2 * n) throw std::out_of_range("frame index out of range");
  return a < n ? Scalar(2.0 * p.y(a)) : Scalar(-2.0 * p.x(a - n));
}

// Point with jet coordinates seeded as independent variables.
template <typename S>
HPoint<S> seed(const HPoint<double>& p) {
  const int n = p.n(), d = 2 * n + 1;
  if (d > kMaxJetVars && !std::is_same_v<S, double>) throw std::invalid_argument("jets support n <= 2");
  HPoint<S> r(n);
  for (int i = 0; i < d; ++i) r.coord(i) = make_variable<S>(p.coord(i), i, d);
  return r;
}

// exp of a horizontal vector v in R^{2n}: the point (v, 0).
template <typename Scalar>
HPoint<Scalar> horizontal(int n, int a, double h) {
  HPoint<Scalar> p(n);
  p.coord(a) = Scalar(h);
  return p;
}

}  // namespace heis
