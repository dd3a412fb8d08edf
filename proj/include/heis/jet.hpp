// Second-order forward-mode jets: value, gradient and Hessian carried together.
#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace heis {
template <typename T>
struct Jet;
}  // namespace heis

namespace Eigen {

template <typename T>
struct NumTraits<heis::Jet<T>> : GenericNumTraits<heis::Jet<T>> {
  using Real = heis::Jet<T>;
  using NonInteger = heis::Jet<T>;
  using Nested = heis::Jet<T>;
  using Literal = heis::Jet<T>;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 8,
    AddCost = 16,
    MulCost = 32
  };
  static inline Real epsilon() { return Real(std::numeric_limits<double>::epsilon()); }
  static inline Real dummy_precision() { return Real(1e-12); }
  static inline Real highest() { return Real(std::numeric_limits<double>::max()); }
  static inline Real lowest() { return Real(std::numeric_limits<double>::lowest()); }
  static inline int digits10() { return std::numeric_limits<double>::digits10; }
};

template <typename T, typename BinaryOp>
struct ScalarBinaryOpTraits<heis::Jet<T>, double, BinaryOp> {
  using ReturnType = heis::Jet<T>;
};
template <typename T, typename BinaryOp>
struct ScalarBinaryOpTraits<double, heis::Jet<T>, BinaryOp> {
  using ReturnType = heis::Jet<T>;
};

}  // namespace Eigen

namespace heis {

// Jets track at most this many independent variables (2n+1 with n <= 2).
inline constexpr int kMaxJetVars = 5;

template <typename T>
struct Jet {
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1, 0, kMaxJetVars, 1>;
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxJetVars, kMaxJetVars>;

  T v{};
  Vec g;  // empty means a constant
  Mat h;

  Jet() = default;
  Jet(double c) : v(c) {}  // NOLINT: implicit constants keep closed forms readable
  Jet(const T& c, int) : v(c) {}

  int vars() const { return static_cast<int>(g.size()); }

  static Jet variable(const T& value, int index, int nvars) {
    Jet r(value, 0);
    r.g = Vec::Zero(nvars);
    r.g(index) = T(1.0);
    r.h = Mat::Zero(nvars, nvars);
    return r;
  }
};

template <typename T>
struct is_jet : std::false_type {};
template <typename T>
struct is_jet<Jet<T>> : std::true_type {};

inline double value_of(double x) { return x; }
template <typename T>
double value_of(const Jet<T>& x) {
  return value_of(x.v);
}

namespace detail {

// r.g = a*x.g, r.h = a*x.h + b*x.g x.g^T  (chain rule for a unary map with f'=a, f''=b)
template <typename T>
Jet<T> chain(const Jet<T>& x, const T& f, const T& a, const T& b) {
  Jet<T> r(f, 0);
  if (x.vars() == 0) return r;
  r.g = a * x.g;
  r.h = a * x.h + b * (x.g * x.g.transpose());
  return r;
}

}  // namespace detail

template <typename T>
Jet<T> operator-(const Jet<T>& a) {
  Jet<T> r(-a.v, 0);
  if (a.vars()) {
    r.g = -a.g;
    r.h = -a.h;
  }
  return r;
}

template <typename T>
Jet<T> operator+(const Jet<T>& a, const Jet<T>& b) {
  Jet<T> r(a.v + b.v, 0);
  if (a.vars() && b.vars()) {
    r.g = a.g + b.g;
    r.h = a.h + b.h;
  } else if (a.vars()) {
    r.g = a.g;
    r.h = a.h;
  } else if (b.vars()) {
    r.g = b.g;
    r.h = b.h;
  }
  return r;
}

template <typename T>
Jet<T> operator-(const Jet<T>& a, const Jet<T>& b) {
  return a + (-b);
}

template <typename T>
Jet<T> operator*(const Jet<T>& a, const Jet<T>& b) {
  Jet<T> r(a.v * b.v, 0);
  const bool da = a.vars() > 0, db = b.vars() > 0;
  if (da && db) {
    r.g = a.v * b.g + b.v * a.g;
    r.h = a.v * b.h + b.v * a.h + a.g * b.g.transpose() + b.g * a.g.transpose();
  } else if (da) {
    r.g = b.v * a.g;
    r.h = b.v * a.h;
  } else if (db) {
    r.g = a.v * b.g;
    r.h = a.v * b.h;
  }
  return r;
}

template <typename T>
Jet<T> inv(const Jet<T>& a) {
  const T f = T(1.0) / a.v;
  return detail::chain(a, f, -f * f, T(2.0) * f * f * f);
}

template <typename T>
Jet<T> operator/(const Jet<T>& a, const Jet<T>& b) {
  return a * inv(b);
}

template <typename T>
Jet<T> operator+(const Jet<T>& a, double c) {
  Jet<T> r = a;
  r.v = r.v + T(c);
  return r;
}
template <typename T>
Jet<T> operator+(double c, const Jet<T>& a) {
  return a + c;
}
template <typename T>
Jet<T> operator-(const Jet<T>& a, double c) {
  return a + (-c);
}
template <typename T>
Jet<T> operator-(double c, const Jet<T>& a) {
  return (-a) + c;
}
template <typename T>
Jet<T> operator*(const Jet<T>& a, double c) {
  Jet<T> r(a.v * T(c), 0);
  if (a.vars()) {
    r.g = a.g * T(c);
    r.h = a.h * T(c);
  }
  return r;
}
template <typename T>
Jet<T> operator*(double c, const Jet<T>& a) {
  return a * c;
}
template <typename T>
Jet<T> operator/(const Jet<T>& a, double c) {
  return a * (1.0 / c);
}
template <typename T>
Jet<T> operator/(double c, const Jet<T>& a) {
  return inv(a) * c;
}

template <typename T>
Jet<T>& operator+=(Jet<T>& a, const Jet<T>& b) {
  return a = a + b;
}
template <typename T>
Jet<T>& operator-=(Jet<T>& a, const Jet<T>& b) {
  return a = a - b;
}
template <typename T>
Jet<T>& operator*=(Jet<T>& a, const Jet<T>& b) {
  return a = a * b;
}
template <typename T>
Jet<T>& operator/=(Jet<T>& a, const Jet<T>& b) {
  return a = a / b;
}

// Comparisons act on the value only.
template <typename T>
bool operator<(const Jet<T>& a, const Jet<T>& b) {
  return value_of(a) < value_of(b);
}
template <typename T>
bool operator>(const Jet<T>& a, const Jet<T>& b) {
  return value_of(a) > value_of(b);
}
template <typename T>
bool operator<=(const Jet<T>& a, const Jet<T>& b) {
  return value_of(a) <= value_of(b);
}
template <typename T>
bool operator>=(const Jet<T>& a, const Jet<T>& b) {
  return value_of(a) >= value_of(b);
}
template <typename T>
bool operator==(const Jet<T>& a, const Jet<T>& b) {
  return value_of(a) == value_of(b) && a.vars() == 0 && b.vars() == 0;
}
template <typename T>
bool operator!=(const Jet<T>& a, const Jet<T>& b) {
  return !(a == b);
}

using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;

template <typename T>
Jet<T> exp(const Jet<T>& a) {
  const T e = exp(a.v);
  return detail::chain(a, e, e, e);
}

template <typename T>
Jet<T> log(const Jet<T>& a) {
  const T r = T(1.0) / a.v;
  return detail::chain(a, log(a.v), r, -r * r);
}

template <typename T>
Jet<T> sqrt(const Jet<T>& a) {
  const T s = sqrt(a.v);
  const T d = T(0.5) / s;
  return detail::chain(a, s, d, -d / (T(2.0) * a.v));
}

template <typename T>
Jet<T> pow(const Jet<T>& a, double e) {
  const T p = pow(a.v, e);
  const T p1 = T(e) * pow(a.v, e - 1.0);
  const T p2 = T(e * (e - 1.0)) * pow(a.v, e - 2.0);
  return detail::chain(a, p, p1, p2);
}

template <typename T>
Jet<T> sin(const Jet<T>& a) {
  const T s = sin(a.v), c = cos(a.v);
  return detail::chain(a, s, c, -s);
}

template <typename T>
Jet<T> cos(const Jet<T>& a) {
  const T s = sin(a.v), c = cos(a.v);
  return detail::chain(a, c, -s, -c);
}

template <typename T>
Jet<T> abs(const Jet<T>& a) {
  return value_of(a) < 0.0 ? -a : a;
}

inline double square(double x) { return x * x; }
template <typename T>
Jet<T> square(const Jet<T>& a) {
  return a * a;
}

// Jets of jets: seed outer and inner derivatives with the same coordinate.
template <typename S>
S make_variable(double value, int index, int nvars);

template <>
inline double make_variable<double>(double value, int, int) {
  return value;
}
template <>
inline Jet<double> make_variable<Jet<double>>(double value, int index, int nvars) {
  return Jet<double>::variable(value, index, nvars);
}
template <>
inline Jet<Jet<double>> make_variable<Jet<Jet<double>>>(double value, int index, int nvars) {
  return Jet<Jet<double>>::variable(Jet<double>::variable(value, index, nvars), index, nvars);
}

}  // namespace heis
