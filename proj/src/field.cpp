#include "heis/field.hpp"

namespace heis {

HPoint<J2> lift(const HPoint<J1>& p) {
  const int d = 2 * p.n() + 1;
  HPoint<J2> q(p.n());
  for (int i = 0; i < d; ++i) q.coord(i) = J2::variable(p.coord(i), i, d);
  return q;
}

namespace {

template <typename Op>
Field derived(std::string name, const Field& f, Op op) {
  Field::F0 f0 = [f, op](const HPoint<double>& p) { return op(f(seed<J1>(p)), p); };
  Field::F1 f1;
  if (f.jet_order() >= 4) f1 = [f, op](const HPoint<J1>& p) { return op(f(lift(p)), p); };
  Field r(std::move(name), std::move(f0), std::move(f1));
  r.mark_singular(f.singular_at_origin());
  return r;
}

}  // namespace

double frame_apply(int a, const Field& f, const HPoint<double>& p) {
  if (a < 0 || a >= 2 * p.n()) throw std::out_of_range("frame_apply: index out of range");
  return frame_jet(f, p).d1(a);
}

double frame_apply2(int a, int b, const Field& f, const HPoint<double>& p) {
  if (a < 0 || a >= 2 * p.n() || b < 0 || b >= 2 * p.n()) throw std::out_of_range("frame_apply2: index out of range");
  return frame_jet(f, p).d2(a, b);
}

double flat_sublaplacian(const Field& f, const HPoint<double>& p) {
  return sublaplacian_from_jet(f(seed<J1>(p)), p);
}

Field frame_derivative(int a, const Field& f) {
  return derived("e" + std::to_string(a) + "(" + f.name() + ")", f, [a](const auto& u, const auto& p) {
    if (a < 0 || a >= 2 * p.n()) throw std::out_of_range("frame_derivative: index out of range");
    return frame_jet(u, p).d1(a);
  });
}

Field sublaplacian(const Field& f) {
  return derived("Lap(" + f.name() + ")", f, [](const auto& u, const auto& p) { return sublaplacian_from_jet(u, p); });
}

namespace {

template <typename Op>
Field combine(std::string name, const Field& a, const Field& b, Op op) {
  Field::F0 f0 = [a, b, op](const HPoint<double>& p) { return op(a(p), b(p)); };
  Field::F1 f1;
  Field::F2 f2;
  if (a.jet_order() >= 2 && b.jet_order() >= 2) f1 = [a, b, op](const HPoint<J1>& p) { return op(a(p), b(p)); };
  if (a.jet_order() >= 4 && b.jet_order() >= 4) f2 = [a, b, op](const HPoint<J2>& p) { return op(a(p), b(p)); };
  Field r(std::move(name), std::move(f0), std::move(f1), std::move(f2));
  r.mark_singular(a.singular_at_origin() || b.singular_at_origin());
  return r;
}

}  // namespace

Field operator+(const Field& a, const Field& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return combine("(" + a.name() + "+" + b.name() + ")", a, b, [](const auto& u, const auto& v) { return u + v; });
}

Field operator-(const Field& a, const Field& b) {
  if (b.is_zero()) return a;
  return combine("(" + a.name() + "-" + b.name() + ")", a, b, [](const auto& u, const auto& v) { return u - v; });
}

Field operator*(const Field& a, const Field& b) {
  if (a.is_zero() || b.is_zero()) return Field::zero();
  return combine(a.name() + "*" + b.name(), a, b, [](const auto& u, const auto& v) { return u * v; });
}

Field operator*(double c, const Field& a) {
  if (c == 0.0) return Field::zero();
  return combine(std::to_string(c) + "*" + a.name(), a, a, [c](const auto& u, const auto&) { return u * c; });
}

Field rescale(const Field& u, double R) {
  if (!(R > 0.0)) throw std::invalid_argument("rescale: R must be positive");
  Field::F0 f0 = [u, R](const HPoint<double>& p) { return u(dilate(R, p)); };
  Field::F1 f1;
  Field::F2 f2;
  if (u.jet_order() >= 2) f1 = [u, R](const HPoint<J1>& p) { return u(dilate(R, p)); };
  if (u.jet_order() >= 4) f2 = [u, R](const HPoint<J2>& p) { return u(dilate(R, p)); };
  Field r(u.name() + "_R", std::move(f0), std::move(f1), std::move(f2));
  r.mark_singular(u.singular_at_origin());
  return r;
}

Field translate(const Field& u, const HPoint<double>& g) {
  Field::F0 f0 = [u, g](const HPoint<double>& p) { return u(group_mul(g, p)); };
  Field::F1 f1;
  Field::F2 f2;
  if (u.jet_order() >= 2) f1 = [u, g](const HPoint<J1>& p) { return u(group_mul(g.cast<J1>(), p)); };
  if (u.jet_order() >= 4) f2 = [u, g](const HPoint<J2>& p) { return u(group_mul(g.cast<J2>(), p)); };
  return Field("T(" + u.name() + ")", std::move(f0), std::move(f1), std::move(f2));
}

Field coordinate_field(int n, int index) {
  if (index < 0 || index > 2 * n) throw std::out_of_range("coordinate_field: index out of range");
  return make_field("coord" + std::to_string(index), [index](const auto& p) { return p.coord(index); });
}

Field rho_power_field(int n, double s) {
  (void)n;
  Field f = make_field("rho^" + std::to_string(s), [s](const auto& p) { return pow(rho4(p), s / 4.0); });
  const bool smooth = s >= 0.0 && std::fmod(s, 4.0) == 0.0;
  f.mark_singular(!smooth);
  return f;
}

Field sigma_power_field(int n, double s) {
  (void)n;
  return make_field("sigma^" + std::to_string(s), [s](const auto& p) { return pow(rho4(p) + 1.0, s / 4.0); });
}

}  // namespace heis
