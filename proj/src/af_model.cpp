#include "heis/af_model.hpp"

#include "heis/test_functions.hpp"

namespace heis {

void AFModel::validate() const {
  if (n < 1 || n > kMaxN) throw std::invalid_argument("af_model: unsupported n");
  if (!(a_n > 0.0)) throw std::invalid_argument("af_model: a_n must be positive");
  if (!(rho_0 > 0.0)) throw std::invalid_argument("af_model: rho_0 must be positive");
  if (!std::isfinite(A_p)) throw std::invalid_argument("af_model: A_p must be finite");
}

nlohmann::json AFModel::to_json() const {
  return {{"n", n}, {"A_p", A_p}, {"a_n", a_n}, {"rho_0", rho_0}, {"c_n", c_n()}, {"c_tilde_n", c_tilde_n()}};
}

double blowup_coefficient(const AFModel& m, const HPoint<double>& x) {
  m.validate();
  const double r = rho(x);
  if (r < m.rho_0) throw std::domain_error("blowup_coefficient: rho < rho_0");
  return 1.0 + m.leading() * std::pow(r, -2.0 * m.n);
}

Field blowup_field(const AFModel& m) {
  m.validate();
  if (m.A_p == 0.0) return Field::constant(1.0);
  return Field::constant(1.0) + m.leading() * rho_power_cutoff(m.n, -2.0 * m.n, 0.5 * m.rho_0, m.rho_0);
}

namespace {

// F(r) = r^{-2n} switch((r - r1) / (r2 - r1)) as a 1-variable jet.
J1 radial_profile(double r, int n, double r1, double r2) {
  const J1 x = J1::variable(r, 0, 1);
  if (r <= r1) return J1::variable(0.0, 0, 1) * 0.0;
  const J1 sw = r >= r2 ? J1::variable(1.0, 0, 1) * 0.0 + 1.0 : smooth_step((x - r1) / (r2 - r1));
  return sw * pow(x, -2.0 * n);
}

double switch_peak(int n, double r0) {
  double peak = std::pow(r0, -2.0 * n);
  for (int k = 0; k <= 400; ++k) {
    const double r = r0 * (0.5 + 0.5 * k / 400.0);
    peak = std::max(peak, radial_profile(r, n, 0.5 * r0, r0).v);
  }
  return peak;
}

}  // namespace

SubellipticOperator build_perturbed_sublaplacian(const AFModel& m, double tau, double q_exp) {
  m.validate();
  const int n = m.n, Q = homogeneous_dimension(n);
  if (!(tau > 0.0 && tau < 2.0 * n))
    throw std::invalid_argument("build_perturbed_sublaplacian: need 0 < tau < 2n; for tau >= 2n the rho^{-2n} deviation has "
                                "divergent norm ||a - I||_{1,q,-tau}");
  const double q = q_exp > 0.0 ? q_exp : 2.0 * Q;
  if (!(q > Q) || std::isinf(q)) throw std::invalid_argument("build_perturbed_sublaplacian: need Q < q < inf");
  const double peak = switch_peak(n, m.rho_0);
  const double dev = std::abs(m.leading()) * peak;
  if (!(dev < 1.0))
    throw std::invalid_argument("build_perturbed_sublaplacian: |4 c~_n A_p| rho^{-2n} reaches " + std::to_string(dev) +
                                " >= 1, the blow-up factor is not elliptic");
  SubellipticOperator P = SubellipticOperator::flat(n);
  P.name = "af_blowup(A_p=" + std::to_string(m.A_p) + ")";
  P.tau = tau;
  P.q_exp = q_exp;
  if (m.A_p == 0.0) {
    P.name = "flat";
    return P;
  }
  P.a = {blowup_field(m)};
  P.lambda = (1.0 - dev) * (1.0 - 1e-9);

  // C1 from the radial bound |nabla_H F(rho)| <= |F'(rho)|, sqrt(2n) for the Frobenius norm, 25% margin.
  Eigen::VectorXd x, w;
  gauss_legendre(400, std::log(0.5 * m.rho_0), std::log(0.5 * m.rho_0) + 12.0, x, w);
  const double SH = gauge_sphere_measure(n);
  double i0 = 0.0, i1 = 0.0;
  for (int k = 0; k < x.size(); ++k) {
    const double r = std::exp(x(k));
    const J1 F = radial_profile(r, n, 0.5 * m.rho_0, m.rho_0);
    const double s = std::pow(1.0 + std::pow(r, 4), 0.25);
    const double jac = std::pow(r, Q) * w(k);  // r^{Q-1} dr = r^Q d(log r)
    i0 += std::pow(std::abs(F.v) * std::pow(s, tau - Q / q), q) * jac;
    if (F.vars() > 0) i1 += std::pow(std::abs(F.g(0)) * std::pow(s, tau + 1.0 - Q / q), q) * jac;
  }
  const double bound = std::sqrt(2.0 * n) * std::abs(m.leading()) * (std::pow(SH * i0, 1.0 / q) + std::pow(SH * i1, 1.0 / q));
  P.C1 = 1.25 * bound;
  return P;
}

nlohmann::json FrameExpansion::to_json() const {
  return {{"frame", frame},
          {"coframe", coframe},
          {"product_defect", product_defect},
          {"remainder_order", remainder_order},
          {"cross_remainder_order", cross_remainder_order}};
}

FrameExpansion frame_expansion(const AFModel& m, const HPoint<double>& x) {
  m.validate();
  const double r = rho(x);
  if (r < m.rho_0) throw std::domain_error("frame_expansion: rho < rho_0");
  const double e = m.c_tilde_n() * m.A_p * std::pow(r, -2.0 * m.n);
  FrameExpansion fe;
  fe.frame = 1.0 - e;
  fe.coframe = 1.0 + e;
  fe.product_defect = -e * e;  // frame * coframe - 1 without cancellation
  fe.remainder_order = 2 * m.n + 1;
  fe.cross_remainder_order = 2 * m.n + 2;
  return fe;
}

Field connection_placeholder(const AFModel& m) {
  m.validate();
  const double c = m.n * (m.c_n() + m.c_tilde_n()) * std::abs(m.A_p);
  const int n = m.n;
  return make_value_field("connection_placeholder", [c, n](const HPoint<double>& p) {
    const double r = rho(p);
    if (r == 0.0) return 0.0;
    const double z1 = std::hypot(p.x(0), p.y(0));
    return c * z1 * r * r / std::pow(r, 2.0 * n + 4.0);
  });
}

nlohmann::json DecayResult::to_json() const {
  return {{"field", claim.field},
          {"s", claim.s},
          {"radii", claim.radii},
          {"sup_values", sup_values},
          {"slope", std::isfinite(slope) ? nlohmann::json(slope) : nlohmann::json("-inf")},
          {"pass", pass}};
}

std::vector<DecayResult> validate_decay(const std::vector<DecayClaim>& claims, const std::vector<Field>& fields, int n) {
  if (claims.size() != fields.size()) throw std::invalid_argument("validate_decay: one field per claim");
  const SphereRule s = sphere_rule(n, 6, 6);
  std::vector<DecayResult> out;
  for (size_t c = 0; c < claims.size(); ++c) {
    DecayResult r;
    r.claim = claims[c];
    if (r.claim.radii.size() < 2) throw std::invalid_argument("validate_decay: need at least two radii");
    bool all_zero = true;
    for (double R : r.claim.radii) {
      double sup = 0.0;
      for (int i = 0; i < s.weights.size(); ++i) {
        HPoint<double> p(n);
        for (int k = 0; k < 2 * n + 1; ++k) p.coord(k) = s.nodes(k, i);
        sup = std::max(sup, std::abs(fields[c](dilate(R, p))));
      }
      all_zero = all_zero && sup == 0.0;
      r.sup_values.push_back(sup);
    }
    if (all_zero) {
      r.slope = -kInf;
      r.pass = true;
    } else {
      r.slope = loglog_slope(r.claim.radii, r.sup_values);
      r.pass = r.slope <= -r.claim.s + 0.2;
    }
    out.push_back(r);
  }
  return out;
}

std::vector<DecayClaim> model_decay_claims(const AFModel& m) {
  std::vector<double> radii;
  for (int k = 2; k <= 6; ++k) radii.push_back(m.rho_0 * std::ldexp(1.0, k));
  const double n2 = 2.0 * m.n;
  return {{"blowup_coefficient - 1", n2, radii},
          {"frame coefficient - 1", n2, radii},
          {"frame * coframe - 1", 2.0 * n2, radii},
          {"connection coefficient", n2 + 1.0, radii}};
}

std::vector<Field> model_decay_fields(const AFModel& m) {
  const AFModel mm = m;
  auto guarded = [mm](auto fn) {
    return [mm, fn](const HPoint<double>& p) { return rho(p) < mm.rho_0 ? 0.0 : fn(p); };
  };
  return {make_value_field("blowup-1", guarded([mm](const HPoint<double>& p) { return blowup_coefficient(mm, p) - 1.0; })),
          make_value_field("frame-1", guarded([mm](const HPoint<double>& p) { return frame_expansion(mm, p).frame - 1.0; })),
          make_value_field("product-1",
                           guarded([mm](const HPoint<double>& p) { return frame_expansion(mm, p).product_defect; })),
          connection_placeholder(m)};
}

}  // namespace heis
