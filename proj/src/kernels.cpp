#include "heis/kernels.hpp"

#include "heis/inequalities.hpp"

#include <random>
#include <sstream>

namespace heis {

namespace {

nlohmann::json num(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(std::isnan(v) ? "nan" : "inf");
}

HPoint<double> column_point(const Eigen::MatrixXd& nodes, int i, int n) {
  HPoint<double> p(n);
  for (int c = 0; c < 2 * n + 1; ++c) p.coord(c) = nodes(c, i);
  return p;
}

}  // namespace

// ---- fundamental constant ------------------------------------------------------------------

nlohmann::json FundamentalConstant::to_json() const {
  return {{"n", n},
          {"c0", c0},
          {"flux_coarse", flux_coarse},
          {"flux_fine", flux_fine},
          {"flux_R2", flux_R2},
          {"alt_coarse", alt_coarse},
          {"alt_fine", alt_fine},
          {"stable", stable},
          {"oracles_agree", oracles_agree},
          {"method", method}};
}

double flux_constant(int n, double R, int npsi, int nang) {
  const int Q = homogeneous_dimension(n);
  const SphereRule s = sphere_rule(n, npsi, nang);
  const Field phi = rho_power_field(n, -2.0 * n), r = rho_power_field(n, 1.0);
  double acc = 0.0;
  for (int i = 0; i < s.weights.size(); ++i) {
    const HPoint<double> x = dilate(R, column_point(s.nodes, i, n));
    const auto dphi = frame_jet(phi, x), dr = frame_jet(r, x);
    acc += s.weights(i) * dphi.d1.dot(dr.d1);
  }
  return -std::pow(R, Q - 1) * acc;
}

double alternative_c0(int n, const Resolution& res, double R_max) {
  GridOptions o;
  o.n = n;
  o.r_min = 1.0;
  o.R_max = R_max;
  o.core = true;
  o.res = res;
  const auto g = make_grid(o);
  const Field m = sublaplacian(sigma_power_field(n, -2.0 * n));
  const Eigen::VectorXd ls = level_sums(sample(m, g));
  double total = ls.sum();
  const int L = static_cast<int>(ls.size());
  if (L >= 3 && ls(L - 2) != 0.0) {
    const double ratio = ls(L - 1) / ls(L - 2);
    if (std::abs(ratio) < 1.0) total += ls(L - 1) * ratio / (1.0 - ratio);
  }
  return -total;
}

FundamentalConstant compute_c0(int n) {
  FundamentalConstant fc;
  fc.n = n;
  fc.flux_coarse = flux_constant(n, 1.0, 16, 16);
  fc.flux_fine = flux_constant(n, 1.0, 32, 32);
  fc.flux_R2 = flux_constant(n, 2.0, 32, 32);
  const Resolution rc = n == 1 ? Resolution{8, 16, 16} : Resolution{6, 8, 8};
  fc.alt_coarse = alternative_c0(n, rc);
  fc.alt_fine = alternative_c0(n, rc.doubled());
  fc.c0 = fc.flux_fine;
  fc.stable = std::abs(fc.flux_coarse / fc.flux_fine - 1.0) < 5e-3;
  fc.oracles_agree = std::abs(fc.alt_fine / fc.flux_fine - 1.0) < 1e-2;
  fc.method = "flux of the horizontal gradient of rho^{-2n} through the unit gauge sphere (Gauss rule in psi and "
              "sphere angles); cross-checked by -int Lap((1+rho^4)^{-n/2}) over an annular grid";
  if (!fc.stable) throw std::runtime_error("compute_c0: flux quadrature unstable across resolutions");
  if (!(fc.c0 > 0.0)) throw std::runtime_error("compute_c0: non-positive constant");
  return fc;
}

// ---- K_0 -------------------------------------------------------------------------------------

namespace {

constexpr int kChiPower = 3;
double chi(double s) { return s >= 1.0 ? 0.0 : std::pow(1.0 - s * s, kChiPower); }

// Far weight g(F) = F^{-n/2} (1 - chi(F^{1/4}/r)) and its first two derivatives in F.
struct FarWeight {
  double g, g1, g2;
};

FarWeight far_weight(double F, double r, int n) {
  const double r4 = r * r * r * r;
  const double m = -0.5 * n;
  const double P = std::pow(F, m), P1 = m * P / F, P2 = m * (m - 1.0) * P / (F * F);
  if (F >= r4) return {P, P1, P2};
  const double q = std::sqrt(F) / (r * r);
  const double m1 = kChiPower;
  const double h = 1.0 - std::pow(1.0 - q, m1), hq = m1 * std::pow(1.0 - q, m1 - 1.0),
               hqq = -m1 * (m1 - 1.0) * std::pow(1.0 - q, m1 - 2.0);
  const double q1 = q / (2.0 * F), q2 = -q / (4.0 * F * F);
  const double H = h, H1 = hq * q1, H2 = hqq * q1 * q1 + hq * q2;
  return {P * H, P1 * H + P * H1, P2 * H + 2.0 * P1 * H1 + P * H2};
}

}  // namespace

K0Convolver::K0Convolver(const Field& f, int n, double c0, const K0Options& opt)
    : n_(n), c0_(c0), opt_(opt), f_(f) {
  if (!(c0 > 0.0)) throw std::invalid_argument("K0: c0 must be positive");
  GridOptions o;
  o.n = n;
  o.r_min = opt.source_rmin;
  o.R_max = opt.source_Rmax;
  o.core = true;
  o.res = opt.source;
  src_ = make_grid(o);
  const GridFunctionD fs = sample(f, src_);
  fw_ = fs.values.cwiseProduct(src_->weights);
  f_integral_ = fw_.sum();
  const double total = fw_.cwiseAbs().sum();
  const auto& last = src_->levels.back();
  const double outer = fw_.segment(last.first, last.count).cwiseAbs().sum();
  tail_share_ = total > 0.0 ? outer / total : 0.0;
  if (tail_share_ > opt.tail_tolerance)
    throw std::domain_error("K0: f is not integrable against the kernel on the truncated domain (outer share " +
                            std::to_string(tail_share_) + ")");
  const ShellRule ball = shell_rule(n, 0.0, 1.0, opt.near);
  near_nodes_ = ball.nodes;
  near_coef_.resize(ball.weights.size());
  for (int k = 0; k < ball.weights.size(); ++k)
    near_coef_(k) = ball.weights(k) * std::pow(ball.rho(k), -2.0 * n) * chi(ball.rho(k));
}

double K0Convolver::far_value(const HPoint<double>& x, double r) const {
  const int n = n_, d = 2 * n + 1;
  std::vector<double> xc(d);
  for (int k = 0; k < d; ++k) xc[k] = x.coord(k);
  const double r4 = std::pow(r, 4);
  double s = 0.0;
  for (int i = 0; i < src_->size(); ++i) {
    if (fw_(i) == 0.0) continue;
    const double rr = rho_between(src_->nodes.col(i).data(), xc.data(), n);
    const double F = rr * rr * rr * rr;
    if (F == 0.0) {
      if (n == 1) s += fw_(i) * kChiPower / (r * r);
      continue;
    }
    if (F >= r4) {
      s += fw_(i) * std::pow(F, -0.5 * n);
    } else {
      const double q = std::sqrt(F) / (r * r);
      s += fw_(i) * std::pow(F, -0.5 * n) * (1.0 - std::pow(1.0 - q, kChiPower));
    }
  }
  return s;
}

Jet<double> K0Convolver::far_jet(const HPoint<double>& x, double r) const {
  const int n = n_, d = 2 * n + 1;
  Jet<double> out(0.0);
  out.g = Jet<double>::Vec::Zero(d);
  out.h = Jet<double>::Mat::Zero(d, d);
  Eigen::VectorXd gZ(d), gT(d), gF(d);
  for (int i = 0; i < src_->size(); ++i) {
    if (fw_(i) == 0.0) continue;
    const auto y = src_->nodes.col(i);
    double Z = 0.0, T = x.t - y(2 * n);
    gZ.setZero();
    gT.setZero();
    for (int j = 0; j < n; ++j) {
      const double dx = x.x(j) - y(j), dy = x.y(j) - y(n + j);
      Z += dx * dx + dy * dy;
      T += 2.0 * (y(j) * x.y(j) - y(n + j) * x.x(j));
      gZ(j) = 2.0 * dx;
      gZ(n + j) = 2.0 * dy;
      gT(j) = -2.0 * y(n + j);
      gT(n + j) = 2.0 * y(j);
    }
    gT(2 * n) = 1.0;
    const double F = Z * Z + T * T;
    if (F == 0.0) {
      if (n == 1) out.v += fw_(i) * kChiPower / (r * r);
      continue;
    }
    const FarWeight w = far_weight(F, r, n);
    gF = 2.0 * Z * gZ + 2.0 * T * gT;
    out.v += fw_(i) * w.g;
    for (int a = 0; a < d; ++a) out.g(a) += fw_(i) * w.g1 * gF(a);
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        double hF = 2.0 * gZ(a) * gZ(b) + 2.0 * gT(a) * gT(b);
        if (a == b && a < 2 * n) hF += 4.0 * Z;
        out.h(a, b) += fw_(i) * (w.g2 * gF(a) * gF(b) + w.g1 * hF);
      }
    }
  }
  return out;
}

double K0Convolver::operator()(const HPoint<double>& x) const {
  check_same_dim(n_, x.n());
  const double r = opt_.kappa * std::clamp(rho(x), opt_.source_rmin, opt_.radius_cap);
  double near = 0.0;
  for (int k = 0; k < near_coef_.size(); ++k) {
    const HPoint<double> w = dilate(r, column_point(near_nodes_, k, n_));
    near += near_coef_(k) * f_(group_mul(x, w));
  }
  near *= r * r;
  return -(far_value(x, r) + near) / c0_;
}

Jet<double> K0Convolver::jet(const HPoint<double>& x) const {
  check_same_dim(n_, x.n());
  const double r = opt_.kappa * std::clamp(rho(x), opt_.source_rmin, opt_.radius_cap);
  const HPoint<J1> xs = seed<J1>(x);
  J1 near(0.0);
  for (int k = 0; k < near_coef_.size(); ++k) {
    const HPoint<double> w = dilate(r, column_point(near_nodes_, k, n_));
    near = near + near_coef_(k) * f_(group_mul(xs, w.cast<J1>()));
  }
  near = near * (r * r);
  J1 u = far_jet(x, r);
  u = (u + near) * (-1.0 / c0_);
  return u;
}

FrameJet<double> K0Convolver::frame(const HPoint<double>& x) const { return frame_jet(jet(x), x); }

Field K0Convolver::as_field() const {
  auto self = std::make_shared<K0Convolver>(*this);
  Field::F0 f0 = [self](const HPoint<double>& p) { return (*self)(p); };
  Field::F1 f1 = [self](const HPoint<J1>& p) {
    const int d = 2 * p.n() + 1;
    HPoint<double> base(p.n());
    for (int i = 0; i < d; ++i) base.coord(i) = p.coord(i).v;
    const Jet<double> u = self->jet(base);
    // chain rule through the coordinate jets of p
    J1 r(u.v);
    const int m = p.coord(0).vars();
    if (m == 0) return r;
    r.g = J1::Vec::Zero(m);
    r.h = J1::Mat::Zero(m, m);
    for (int i = 0; i < d; ++i) {
      const J1& ci = p.coord(i);
      if (ci.vars() == 0) continue;
      r.g += u.g(i) * ci.g;
      r.h += u.g(i) * ci.h;
      for (int j = 0; j < d; ++j) {
        const J1& cj = p.coord(j);
        if (cj.vars() == 0) continue;
        r.h += u.h(i, j) * ci.g * cj.g.transpose();
      }
    }
    return r;
  };
  return Field("K0(" + f_.name() + ")", std::move(f0), std::move(f1));
}

double convolve_k0(const GridFunctionD& f, double c0, const HPoint<double>& x) {
  const AnnularGrid& g = *f.grid;
  const int n = g.n;
  std::vector<double> xc(2 * n + 1);
  for (int k = 0; k < 2 * n + 1; ++k) xc[k] = x.coord(k);
  int best = 0;
  double bd = kInf;
  for (int i = 0; i < g.size(); ++i) {
    const double r = rho_between(g.nodes.col(i).data(), xc.data(), n);
    if (r < bd) {
      bd = r;
      best = i;
    }
  }
  return -singular_integrate(rho_power_kernel(n, -2.0 * n), x, f, f.values(best)) / c0;
}

nlohmann::json FarFieldReport::to_json() const {
  return {{"radii", radii}, {"mean_abs", mean_abs}, {"slope", num(slope)}, {"limit_ratio", num(limit_ratio)}};
}

FarFieldReport far_field(const K0Convolver& K0, const std::vector<double>& radii) {
  const int n = K0.n();
  const SphereRule s = sphere_rule(n, 4, 4);
  FarFieldReport rep;
  rep.radii = radii;
  double last_scaled = 0.0;
  for (double R : radii) {
    double acc = 0.0, sc = 0.0;
    for (int i = 0; i < s.weights.size(); ++i) {
      const double u = K0(dilate(R, column_point(s.nodes, i, n)));
      acc += std::abs(u);
      sc += u * std::pow(R, 2.0 * n);
    }
    rep.mean_abs.push_back(acc / s.weights.size());
    last_scaled = sc / s.weights.size();
  }
  rep.slope = loglog_slope(rep.radii, rep.mean_abs);
  const double lim = -K0.source_integral() / K0.c0();
  rep.limit_ratio = lim != 0.0 ? last_scaled / lim : 0.0;
  return rep;
}

// ---- two-weight kernels -------------------------------------------------------------------

void KernelSpec::validate() const {
  if (!(a + b > 0.0)) throw std::invalid_argument("kernel: need a + b > 0");
  if (!(p > 1.0) || std::isinf(p)) throw std::invalid_argument("kernel: need 1 < p < inf");
}

nlohmann::json KernelSpec::to_json() const { return {{"a", a}, {"b", b}, {"p", p}}; }

double two_weight_kernel(const KernelSpec& K, const HPoint<double>& x, const HPoint<double>& y) {
  const int Q = homogeneous_dimension(x.n());
  return std::pow(rho(x), -K.a) * std::pow(rho(group_mul(inverse(y), x)), -Q + K.a + K.b) * std::pow(rho(y), -K.b);
}

namespace {

double ball_int(int n, double a, double b, double eps) {
  return gauge_sphere_measure(n) * std::pow(eps, a + b) / (a + b);
}

}  // namespace

KernelApplyResult two_weight_apply(const KernelSpec& K, const Field& u, const GridPtr& source,
                                   const std::vector<HPoint<double>>& points) {
  K.validate();
  const AnnularGrid& g = *source;
  if (g.has_core()) throw std::invalid_argument("two_weight_apply: source grid must exclude the origin");
  const int n = g.n, Q = homogeneous_dimension(n);
  const GridFunctionD us = sample(u, source);
  KernelApplyResult res;
  {
    const Eigen::VectorXd a = us.values.cwiseAbs().cwiseProduct(g.weights);
    const auto& last = g.levels.back();
    const double tot = a.sum();
    res.tail_share = tot > 0.0 ? a.segment(last.first, last.count).sum() / tot : 0.0;
  }
  Eigen::VectorXd wb(g.size());
  for (int i = 0; i < g.size(); ++i) wb(i) = g.weights(i) * us.values(i) * std::pow(g.rho(i), -K.b);
  for (const auto& x : points) {
    std::vector<double> xc(2 * n + 1);
    for (int k = 0; k < 2 * n + 1; ++k) xc[k] = x.coord(k);
    const double rx = rho(x);
    const double eps = local_spacing(g, rx);
    double s = 0.0;
    for (int i = 0; i < g.size(); ++i) {
      if (wb(i) == 0.0) continue;
      const double r = rho_between(g.nodes.col(i).data(), xc.data(), n);
      if (r < eps) continue;
      s += wb(i) * std::pow(r, -Q + K.a + K.b);
    }
    s *= std::pow(rx, -K.a);
    const double sing = u(x) * std::pow(rx, -K.a - K.b) * ball_int(n, K.a, K.b, eps);
    res.values.push_back(s + sing);
    res.singular_part.push_back(sing);
  }
  return res;
}

nlohmann::json OpNormEstimate::to_json() const {
  return {{"kernel", K.to_json()}, {"J", J},           {"estimate", estimate}, {"random_lower", random_lower},
          {"iterations", iterations}, {"nodes", nodes}};
}

namespace {

double lp_norm(const Eigen::VectorXd& v, double p) { return std::pow(v.cwiseAbs().array().pow(p).sum(), 1.0 / p); }

Eigen::VectorXd duality_map(const Eigen::VectorXd& v, double p) {
  Eigen::VectorXd r(v.size());
  for (int i = 0; i < v.size(); ++i) r(i) = (v(i) >= 0.0 ? 1.0 : -1.0) * std::pow(std::abs(v(i)), p - 1.0);
  return r;
}

}  // namespace

OpNormEstimate op_norm_estimate(const KernelSpec& K, int n, int J, const Resolution& res, std::uint64_t seed) {
  K.validate();
  if (J < 1) throw std::invalid_argument("op_norm_estimate: J must be >= 1");
  GridOptions o;
  o.n = n;
  o.r_min = std::ldexp(1.0, -J);
  o.R_max = std::ldexp(1.0, J);
  o.core = false;
  o.res = res;
  const AnnularGrid g = build_grid(o);
  const int N = g.size(), Q = homogeneous_dimension(n);
  const double p = K.p, SH = gauge_sphere_measure(n);
  Eigen::MatrixXd A(N, N);
  Eigen::VectorXd wl(N), wr(N);
  for (int i = 0; i < N; ++i) {
    wl(i) = std::pow(g.weights(i), 1.0 / p);
    wr(i) = std::pow(g.weights(i), 1.0 - 1.0 / p);
  }
  for (int j = 0; j < N; ++j) {
    const double* y = g.nodes.col(j).data();
    const double fy = std::pow(g.rho(j), -K.b) * wr(j);
    for (int i = 0; i < N; ++i) {
      if (i == j) continue;
      const double r = rho_between(y, g.nodes.col(i).data(), n);
      A(i, j) = r > 0.0 ? wl(i) * std::pow(g.rho(i), -K.a) * std::pow(r, -Q + K.a + K.b) * fy : 0.0;
    }
  }
  for (int i = 0; i < N; ++i) {
    const double eps = std::pow(Q * g.weights(i) / SH, 1.0 / Q);
    A(i, i) = std::pow(g.rho(i), -K.a - K.b) * ball_int(n, K.a, K.b, eps);
  }

  OpNormEstimate est;
  est.K = K;
  est.J = J;
  est.nodes = N;
  const double pp = K.pprime();
  Eigen::VectorXd x = Eigen::VectorXd::Ones(N);
  x /= lp_norm(x, p);
  double prev = 0.0;
  for (int it = 0; it < 1000; ++it) {
    const Eigen::VectorXd Ax = A * x;
    const double val = lp_norm(Ax, p);
    est.iterations = it + 1;
    est.estimate = std::max(est.estimate, val);
    if (std::abs(val - prev) <= 1e-11 * val) break;
    prev = val;
    Eigen::VectorXd nx = duality_map(A.transpose() * duality_map(Ax, p), pp);
    x = nx / lp_norm(nx, p);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 8; ++k) {
    Eigen::VectorXd v(N);
    for (int i = 0; i < N; ++i) v(i) = U(rng);
    est.random_lower = std::max(est.random_lower, lp_norm(A * v, p) / lp_norm(v, p));
  }
  est.estimate = std::max(est.estimate, est.random_lower);
  return est;
}

nlohmann::json TruncationSweep::to_json() const {
  return {{"kernel", K.to_json()}, {"J", J}, {"estimates", estimates}, {"growth", growth}, {"label", label}};
}

TruncationSweep truncation_sweep(const KernelSpec& K, int n, const std::vector<int>& Js, const Resolution& res) {
  if (Js.size() < 2) throw std::invalid_argument("truncation_sweep: need at least two truncations");
  TruncationSweep s;
  s.K = K;
  s.J = Js;
  for (int J : Js) s.estimates.push_back(op_norm_estimate(K, n, J, res).estimate);
  for (size_t i = 1; i < s.estimates.size(); ++i) s.growth.push_back(s.estimates[i] / s.estimates[i - 1] - 1.0);
  const double last = s.growth.back();
  s.label = last < kStableGrowth ? "stabilizes" : (last > kDivergentGrowth ? "diverges" : "inconclusive");
  return s;
}

nlohmann::json NecessityProbe::to_json() const {
  return {{"kernel", K.to_json()}, {"radii", radii},         {"v", v},
          {"w", w},                {"v_slope", num(v_slope)}, {"w_slope", num(w_slope)}};
}

NecessityProbe necessity_probes(const KernelSpec& K, int n, const std::vector<double>& radii, const Resolution& res) {
  K.validate();
  const ShellRule ball = shell_rule(n, 0.0, 1.0, res);
  const SphereRule dirs = sphere_rule(n, 4, 4);
  NecessityProbe pr;
  pr.K = K;
  pr.radii = radii;
  for (double R : radii) {
    double v = 0.0, w = 0.0;
    for (int d = 0; d < dirs.weights.size(); ++d) {
      const HPoint<double> far = dilate(R, column_point(dirs.nodes, d, n));
      for (int k = 0; k < ball.weights.size(); ++k) {
        const HPoint<double> in = column_point(ball.nodes, k, n);
        v += ball.weights(k) * two_weight_kernel(K, far, in);
        w += ball.weights(k) * two_weight_kernel(K, in, far);
      }
    }
    pr.v.push_back(v / dirs.weights.size());
    pr.w.push_back(w / dirs.weights.size());
  }
  pr.v_slope = loglog_slope(radii, pr.v);
  pr.w_slope = loglog_slope(radii, pr.w);
  return pr;
}

double negative_a_crosscheck(const KernelSpec& K, int n, int samples, std::uint64_t seed) {
  K.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01(0.0, 1.0);
  std::uniform_real_distribution<double> U(-4.0, 4.0);
  auto draw = [&]() {
    HPoint<double> p(n);
    for (int i = 0; i < 2 * n + 1; ++i) p.coord(i) = N01(rng);
    return dilate(std::exp2(U(rng)) / rho(p), p);
  };
  const KernelSpec k0b{0.0, K.b, K.p}, k0ab{0.0, K.a + K.b, K.p};
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const auto x = draw(), y = draw();
    const double v = two_weight_kernel(K, x, y);
    const double bound = two_weight_kernel(k0b, x, y) + two_weight_kernel(k0ab, x, y);
    worst = std::max(worst, v / bound);
  }
  return worst;
}

std::vector<RegionRow> region_sweep(int n, double p, const std::vector<double>& as, const std::vector<double>& bs,
                                    const std::vector<int>& Js, const Resolution& res) {
  std::vector<RegionRow> rows;
  for (double a : as) {
    for (double b : bs) {
      if (!(a + b > 0.0)) continue;
      const TruncationSweep s = truncation_sweep({a, b, p}, n, Js, res);
      for (size_t i = 0; i < Js.size(); ++i) rows.push_back({a, b, p, Js[i], s.estimates[i], s.label});
    }
  }
  return rows;
}

std::string region_sweep_csv(const std::vector<RegionRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "a,b,p,T,norm_estimate,label\n";
  for (const auto& r : rows) os << r.a << ',' << r.b << ',' << r.p << ',' << std::ldexp(1.0, r.J) << ',' << r.estimate << ',' << r.label << '\n';
  return os.str();
}

double k0_bound(int n, double c0, double p, double delta, int J) {
  const int Q = homogeneous_dimension(n);
  if (!(delta < 0.0 && delta > 2.0 - Q)) throw std::invalid_argument("k0_bound: need 2 - Q < delta < 0");
  const double a = delta + Q / p;
  return op_norm_estimate({a, 2.0 - a, p}, n, J).estimate / c0;
}

}  // namespace heis
