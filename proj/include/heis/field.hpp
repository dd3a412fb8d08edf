// Evaluable scalar fields on H_n with forward-mode derivatives, and frame derivatives.
#pragma once

#include "heis/heisenberg.hpp"
#include "heis/jet.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

namespace heis {

using J1 = Jet<double>;
using J2 = Jet<Jet<double>>;

class derivative_unavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A scalar field available at up to three levels: values, 2-jets, and 2-jets of 2-jets.
// Higher levels give the derivatives needed by derived fields (e.g. the jets of a sub-Laplacian).
class Field {
 public:
  using F0 = std::function<double(const HPoint<double>&)>;
  using F1 = std::function<J1(const HPoint<J1>&)>;
  using F2 = std::function<J2(const HPoint<J2>&)>;

  Field() = default;
  Field(std::string name, F0 f0, F1 f1 = {}, F2 f2 = {})
      : name_(std::move(name)), f0_(std::move(f0)), f1_(std::move(f1)), f2_(std::move(f2)) {}

  static Field constant(double c, std::string name = "") {
    Field f(name.empty() ? std::to_string(c) : std::move(name), [c](const HPoint<double>&) { return c; },
            [c](const HPoint<J1>&) { return J1(c); }, [c](const HPoint<J2>&) { return J2(c); });
    f.constant_ = c;
    return f;
  }
  static Field zero() { return constant(0.0, "0"); }

  double operator()(const HPoint<double>& p) const { return f0_(p); }
  J1 operator()(const HPoint<J1>& p) const {
    if (!f1_) throw derivative_unavailable("field '" + name_ + "': first-level jets unavailable");
    return f1_(p);
  }
  J2 operator()(const HPoint<J2>& p) const {
    if (!f2_) throw derivative_unavailable("field '" + name_ + "': second-level jets unavailable");
    return f2_(p);
  }

  // Highest derivative order available through jets (0, 2 or 4).
  int jet_order() const { return f2_ ? 4 : (f1_ ? 2 : 0); }
  bool has_jets() const { return static_cast<bool>(f1_); }
  bool valid() const { return static_cast<bool>(f0_); }

  const std::string& name() const { return name_; }
  Field& rename(std::string s) {
    name_ = std::move(s);
    return *this;
  }

  // Fields singular at the origin are only sampled on grids that exclude it.
  bool singular_at_origin() const { return singular_; }
  Field& mark_singular(bool s = true) {
    singular_ = s;
    return *this;
  }

  std::optional<double> constant_value() const { return constant_; }
  bool is_zero() const { return constant_ && *constant_ == 0.0; }

  const F0& f0() const { return f0_; }
  const F1& f1() const { return f1_; }
  const F2& f2() const { return f2_; }

 private:
  std::string name_;
  F0 f0_;
  F1 f1_;
  F2 f2_;
  bool singular_ = false;
  std::optional<double> constant_;
};

// Build a field from a generic callable `S f(const HPoint<S>&)`.
template <typename F>
Field make_field(std::string name, F f) {
  auto sp = std::make_shared<F>(std::move(f));
  return Field(
      std::move(name), [sp](const HPoint<double>& p) { return (*sp)(p); },
      [sp](const HPoint<J1>& p) { return J1((*sp)(p)); }, [sp](const HPoint<J2>& p) { return J2((*sp)(p)); });
}

// Value-only field (no jets): derivatives fall back to stencils.
inline Field make_value_field(std::string name, Field::F0 f) { return Field(std::move(name), std::move(f)); }

// C-infinity transition: 0 for u <= 0, 1 for u >= 1.
template <typename S>
S smooth_step(const S& u) {
  const double v = value_of(u);
  if (v <= 0.0) return S(0.0);
  if (v >= 1.0) return S(1.0);
  const S a = exp(-1.0 / u);
  const S b = exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

// Smooth radial switch: 0 for rho <= r1, 1 for rho >= r2.
template <typename S>
S radial_switch(const HPoint<S>& p, double r1, double r2) {
  const double r4 = value_of(rho4(p));
  if (r4 <= std::pow(r1, 4)) return S(0.0);
  if (r4 >= std::pow(r2, 4)) return S(1.0);
  return smooth_step((pow(rho4(p), 0.25) - r1) / (r2 - r1));
}

// ---- frame derivatives from jets ---------------------------------------------------------

template <typename S>
struct FrameJet {
  using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1, 0, 2 * kMaxN, 1>;
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, 0, 2 * kMaxN, 2 * kMaxN>;
  S value;
  Vec d1;  // e_a u
  Mat d2;  // e_a e_b u
};

// Frame derivatives at p of a field whose 2-jet at p is `u` (coordinates of p have type S).
template <typename S>
FrameJet<S> frame_jet(const Jet<S>& u, const HPoint<S>& p) {
  const int n = p.n(), m = 2 * n, it = 2 * n;
  FrameJet<S> r;
  r.value = u.v;
  r.d1 = FrameJet<S>::Vec::Zero(m);
  r.d2 = FrameJet<S>::Mat::Zero(m, m);
  if (u.vars() == 0) return r;
  Eigen::Matrix<S, Eigen::Dynamic, 1, 0, 2 * kMaxN, 1> ct(m);
  for (int a = 0; a < m; ++a) ct(a) = frame_t_coeff(a, p);
  for (int a = 0; a < m; ++a) r.d1(a) = u.g(a) + ct(a) * u.g(it);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      // c_a^T H c_b with c_a = e_a + ct_a e_t
      S v = u.h(a, b) + ct(b) * u.h(a, it) + ct(a) * u.h(it, b) + ct(a) * ct(b) * u.h(it, it);
      // e_a acting on the t-coefficient of e_b
      if (a < n && b == a + n) v = v - 2.0 * u.g(it);
      if (a >= n && b == a - n) v = v + 2.0 * u.g(it);
      r.d2(a, b) = v;
    }
  }
  return r;
}

template <typename S>
S sublaplacian_from_jet(const Jet<S>& u, const HPoint<S>& p) {
  const FrameJet<S> fj = frame_jet(u, p);
  S s(0.0);
  for (int a = 0; a < fj.d2.rows(); ++a) s = s + fj.d2(a, a);
  return s;
}

// Outer-seeded copy of a J1 point: jets in the coordinates, carrying the inner jets along.
HPoint<J2> lift(const HPoint<J1>& p);

// Frame jet of a field at a double point.
inline FrameJet<double> frame_jet(const Field& f, const HPoint<double>& p) {
  return frame_jet(f(seed<J1>(p)), p);
}

// (e_a f)(p), a = 0..2n-1 (X_1..X_n, Y_1..Y_n).
double frame_apply(int a, const Field& f, const HPoint<double>& p);

// e_a e_b f at p.
double frame_apply2(int a, int b, const Field& f, const HPoint<double>& p);

double flat_sublaplacian(const Field& f, const HPoint<double>& p);

// Derived fields; each loses one jet level.
Field frame_derivative(int a, const Field& f);
Field sublaplacian(const Field& f);

// ---- field algebra -------------------------------------------------------------------------

Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(const Field& a, const Field& b);
Field operator*(double c, const Field& a);

// u_R = u o dilate(R, .)
Field rescale(const Field& u, double R);

// u(g . x): left translate.
Field translate(const Field& u, const HPoint<double>& g);

// Coordinate and gauge fields.
Field coordinate_field(int n, int index);
Field rho_power_field(int n, double s);    // rho^s; singular at the origin unless s is a nonnegative multiple of 4
Field sigma_power_field(int n, double s);  // sigma^s

}  // namespace heis
