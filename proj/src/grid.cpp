#include "heis/grid.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace heis {

void gauss_legendre(int m, double a, double b, Eigen::VectorXd& x, Eigen::VectorXd& w) {
  if (m < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
  // Golub-Welsch on the Legendre Jacobi matrix.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  for (int k = 1; k < m; ++k) {
    const double beta = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  x.resize(m);
  w.resize(m);
  for (int i = 0; i < m; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    x(i) = 0.5 * (b - a) * es.eigenvalues()(i) + 0.5 * (a + b);
    w(i) = (b - a) * v0 * v0;  // 2 v0^2 scaled by (b-a)/2
  }
}

namespace {

void check_resolution(int n, const Resolution& r) {
  if (n < 1 || n > 2) throw std::invalid_argument("grids are available for n = 1, 2");
  if (r.nr < 2 || r.npsi < 2 || r.nang < 4)
    throw std::invalid_argument("insufficient resolution: need nr >= 2, npsi >= 2, nang >= 4");
}

bool is_power_of_two(double r) {
  int e = 0;
  return r > 0.0 && std::frexp(r, &e) == 0.5;
}

// Rule for the round sphere S^{2n-1} in C^n: points as (x_1..x_n, y_1..y_n), weights summing to its area.
void round_sphere_rule(int n, int nang, Eigen::MatrixXd& pts, Eigen::VectorXd& w) {
  if (n == 1) {
    pts.resize(2, nang);
    w.resize(nang);
    for (int k = 0; k < nang; ++k) {
      const double th = 2.0 * M_PI * (k + 0.5) / nang;
      pts(0, k) = std::cos(th);
      pts(1, k) = std::sin(th);
      w(k) = 2.0 * M_PI / nang;
    }
    return;
  }
  // Hopf coordinates z1 = cos(eta) e^{i th1}, z2 = sin(eta) e^{i th2}; measure sin cos d eta d th1 d th2.
  const int neta = std::max(2, nang / 2);
  Eigen::VectorXd eta, weta;
  gauss_legendre(neta, 0.0, M_PI / 2.0, eta, weta);
  const int m = neta * nang * nang;
  pts.resize(4, m);
  w.resize(m);
  int c = 0;
  for (int e = 0; e < neta; ++e) {
    const double ce = std::cos(eta(e)), se = std::sin(eta(e));
    for (int a = 0; a < nang; ++a) {
      const double t1 = 2.0 * M_PI * (a + 0.5) / nang;
      for (int b = 0; b < nang; ++b) {
        const double t2 = 2.0 * M_PI * (b + 0.5) / nang;
        pts(0, c) = ce * std::cos(t1);
        pts(1, c) = se * std::cos(t2);
        pts(2, c) = ce * std::sin(t1);
        pts(3, c) = se * std::sin(t2);
        w(c) = weta(e) * se * ce * (2.0 * M_PI / nang) * (2.0 * M_PI / nang);
        ++c;
      }
    }
  }
}

}  // namespace

SphereRule sphere_rule(int n, int npsi, int nang) {
  check_resolution(n, {2, npsi, nang});
  Eigen::VectorXd psi, wpsi;
  gauss_legendre(npsi, -M_PI / 2.0, M_PI / 2.0, psi, wpsi);
  Eigen::MatrixXd om;
  Eigen::VectorXd wom;
  round_sphere_rule(n, nang, om, wom);
  const double cvol = haar_volume_element(n);
  SphereRule s;
  s.n = n;
  s.nodes.resize(2 * n + 1, npsi * om.cols());
  s.weights.resize(npsi * om.cols());
  int c = 0;
  for (int k = 0; k < npsi; ++k) {
    const double cp = std::cos(psi(k));
    const double absz = std::sqrt(cp);
    for (int m = 0; m < om.cols(); ++m) {
      for (int j = 0; j < 2 * n; ++j) s.nodes(j, c) = absz * om(j, m);
      s.nodes(2 * n, c) = std::sin(psi(k));
      s.weights(c) = cvol * wpsi(k) * std::pow(cp, n - 1) * wom(m);
      ++c;
    }
  }
  return s;
}

ShellRule shell_rule(int n, double lo, double hi, const Resolution& res) {
  check_resolution(n, res);
  const int Q = homogeneous_dimension(n);
  const SphereRule s = sphere_rule(n, res.npsi, res.nang);
  Eigen::VectorXd r, wr;
  gauss_legendre(res.nr, lo, hi, r, wr);
  const int M = static_cast<int>(s.weights.size());
  ShellRule out;
  out.nodes.resize(2 * n + 1, res.nr * M);
  out.weights.resize(res.nr * M);
  out.rho.resize(res.nr * M);
  int c = 0;
  for (int i = 0; i < res.nr; ++i) {
    for (int m = 0; m < M; ++m) {
      out.nodes.col(c).head(2 * n) = r(i) * s.nodes.col(m).head(2 * n);
      out.nodes(2 * n, c) = r(i) * r(i) * s.nodes(2 * n, m);
      out.weights(c) = wr(i) * std::pow(r(i), Q - 1) * s.weights(m);
      out.rho(c) = r(i);
      ++c;
    }
  }
  return out;
}

AnnularGrid build_grid(const GridOptions& opts) {
  check_resolution(opts.n, opts.res);
  if (!is_power_of_two(opts.r_min) || !is_power_of_two(opts.R_max) || opts.R_max < 2.0 * opts.r_min)
    throw std::invalid_argument("build_grid: r_min, R_max must be powers of two with R_max >= 2 r_min");
  const int n = opts.n, d = 2 * n + 1, Q = homogeneous_dimension(n);
  AnnularGrid g;
  g.n = n;
  g.options = opts;

  std::vector<ShellRule> parts;
  std::vector<GridLevel> levels;
  int offset = 0;
  if (opts.core) {
    parts.push_back(shell_rule(n, 0.0, opts.r_min, opts.res));
    levels.push_back({offset, static_cast<int>(parts.back().weights.size()), 0.0, opts.r_min, true});
    offset += levels.back().count;
  }
  // Level template on [1, 2]; every annulus is an exact power-of-two dilation of it.
  const ShellRule tmpl = shell_rule(n, 1.0, 2.0, opts.res);
  const int kmin = static_cast<int>(std::lround(std::log2(opts.r_min)));
  const int kmax = static_cast<int>(std::lround(std::log2(opts.R_max)));
  for (int k = kmin; k < kmax; ++k) {
    const double s = std::ldexp(1.0, k);
    ShellRule sh = tmpl;
    sh.nodes.topRows(2 * n) *= s;
    sh.nodes.row(2 * n) *= s * s;
    sh.weights *= std::pow(s, Q);
    sh.rho *= s;
    levels.push_back({offset, static_cast<int>(sh.weights.size()), s, 2.0 * s, false});
    offset += levels.back().count;
    parts.push_back(std::move(sh));
  }
  g.nodes.resize(d, offset);
  g.weights.resize(offset);
  g.rho.resize(offset);
  for (size_t i = 0; i < parts.size(); ++i) {
    g.nodes.middleCols(levels[i].first, levels[i].count) = parts[i].nodes;
    g.weights.segment(levels[i].first, levels[i].count) = parts[i].weights;
    g.rho.segment(levels[i].first, levels[i].count) = parts[i].rho;
  }
  g.levels = std::move(levels);
  return g;
}

GridPtr make_grid(const GridOptions& opts) { return std::make_shared<const AnnularGrid>(build_grid(opts)); }

HPoint<double> AnnularGrid::point(int i) const {
  HPoint<double> p(n);
  for (int k = 0; k < dim(); ++k) p.coord(k) = nodes(k, i);
  return p;
}

int AnnularGrid::level_of_radius(double r) const {
  for (size_t l = 0; l < levels.size(); ++l)
    if (r >= levels[l].lo && r <= levels[l].hi) return static_cast<int>(l);
  return -1;
}

nlohmann::json AnnularGrid::to_json() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = "AnnularGrid";
  j["n"] = n;
  j["options"] = {{"r_min", options.r_min},
                  {"R_max", options.R_max},
                  {"core", options.core},
                  {"resolution", {options.res.nr, options.res.npsi, options.res.nang}}};
  auto& lv = j["levels"] = nlohmann::json::array();
  for (const auto& l : levels) lv.push_back({{"first", l.first}, {"count", l.count}, {"lo", l.lo}, {"hi", l.hi}, {"core", l.core}});
  auto& nd = j["nodes"] = nlohmann::json::array();
  for (int i = 0; i < size(); ++i) {
    std::vector<double> c(nodes.col(i).data(), nodes.col(i).data() + dim());
    nd.push_back(c);
  }
  j["weights"] = std::vector<double>(weights.data(), weights.data() + size());
  return j;
}

AnnularGrid AnnularGrid::from_json(const nlohmann::json& j) {
  if (j.at("kind") != "AnnularGrid" || j.at("schema_version") != 1) throw std::invalid_argument("not an AnnularGrid v1 document");
  AnnularGrid g;
  g.n = j.at("n");
  const auto& o = j.at("options");
  g.options.n = g.n;
  g.options.r_min = o.at("r_min");
  g.options.R_max = o.at("R_max");
  g.options.core = o.at("core");
  g.options.res = {o.at("resolution")[0], o.at("resolution")[1], o.at("resolution")[2]};
  for (const auto& l : j.at("levels")) g.levels.push_back({l.at("first"), l.at("count"), l.at("lo"), l.at("hi"), l.at("core")});
  const auto& nd = j.at("nodes");
  const int N = static_cast<int>(nd.size()), d = 2 * g.n + 1;
  g.nodes.resize(d, N);
  g.weights.resize(N);
  g.rho.resize(N);
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < d; ++k) g.nodes(k, i) = nd[i][k];
    g.weights(i) = j.at("weights")[i];
    g.rho(i) = heis::rho(g.point(i));
  }
  return g;
}

bool Region::contains(double r) const {
  switch (kind) {
    case Kind::All: return true;
    case Kind::Ball: return r < R;
    case Kind::Annulus: return r >= R && r < 2.0 * R;
    case Kind::Exterior: return r >= R;
  }
  return false;
}

std::string Region::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::All: os << "all"; break;
    case Kind::Ball: os << "B_" << R; break;
    case Kind::Annulus: os << "A_" << R; break;
    case Kind::Exterior: os << "E_" << R; break;
  }
  return os.str();
}

GridFunctionD sample(const Field& f, const GridPtr& grid) {
  if (f.singular_at_origin() && grid->has_core())
    throw std::invalid_argument("field '" + f.name() + "' is singular at the origin; sample it on a grid without core");
  Eigen::VectorXd v(grid->size());
  for (int i = 0; i < grid->size(); ++i) v(i) = f(grid->point(i));
  return {grid, std::move(v)};
}

template <typename Scalar>
Scalar integrate(const GridFunction<Scalar>& f, const Region& region) {
  const AnnularGrid& g = *f.grid;
  Scalar s(0.0);
  // Fixed summation order: level by level, node by node.
  for (const auto& lev : g.levels) {
    Scalar ls(0.0);
    for (int i = lev.first; i < lev.first + lev.count; ++i) {
      if (!region.contains(g.rho(i))) continue;
      const Scalar v = f.values(i);
      if (!std::isfinite(std::abs(v))) throw std::domain_error("integrate: non-finite integrand value");
      ls += g.weights(i) * v;
    }
    s += ls;
  }
  return s;
}

template double integrate<double>(const GridFunction<double>&, const Region&);
template std::complex<double> integrate<std::complex<double>>(const GridFunction<std::complex<double>>&, const Region&);

double integrate(const Field& f, const GridPtr& grid, const Region& region) { return integrate(sample(f, grid), region); }

IntegralEstimate integrate_with_error(const Field& f, const GridOptions& opts, const Region& region) {
  GridOptions coarse = opts;
  coarse.res = opts.res.halved();
  const double fine = integrate(f, make_grid(opts), region);
  const double crs = integrate(f, make_grid(coarse), region);
  return {fine, std::abs(fine - crs)};
}

Eigen::VectorXd level_sums(const GridFunctionD& f) {
  const AnnularGrid& g = *f.grid;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<int>(g.levels.size()));
  for (size_t l = 0; l < g.levels.size(); ++l) {
    const auto& lev = g.levels[l];
    s(static_cast<int>(l)) = g.weights.segment(lev.first, lev.count).dot(f.values.segment(lev.first, lev.count));
  }
  return s;
}

SingularKernel rho_power_kernel(int n, double degree) {
  SingularKernel k;
  k.k = [degree](const HPoint<double>& w) { return std::pow(rho4(w), degree / 4.0); };
  k.degree = degree;
  const int Q = homogeneous_dimension(n);
  if (degree > -Q) k.unit_ball_integral = gauge_sphere_measure(n) / (Q + degree);
  return k;
}

double local_spacing(const AnnularGrid& g, double r) {
  int l = g.level_of_radius(r);
  if (l < 0) l = r < g.r_min() ? 0 : static_cast<int>(g.levels.size()) - 1;
  const auto& lev = g.levels[l];
  const double mean_w = g.weights.segment(lev.first, lev.count).sum() / lev.count;
  return std::pow(mean_w / koranyi_ball_volume(g.n), 1.0 / homogeneous_dimension(g.n));
}

namespace {

double ball_integral(const SingularKernel& kernel, int n) {
  if (std::isfinite(kernel.unit_ball_integral)) return kernel.unit_ball_integral;
  const int Q = homogeneous_dimension(n);
  const SphereRule s = sphere_rule(n, 24, 32);
  double acc = 0.0;
  for (int m = 0; m < s.weights.size(); ++m) {
    HPoint<double> w(n);
    for (int k = 0; k < 2 * n + 1; ++k) w.coord(k) = s.nodes(k, m);
    acc += s.weights(m) * kernel.k(w);
  }
  return acc / (Q + kernel.degree);
}

}  // namespace

double singular_integrate(const SingularKernel& kernel, const HPoint<double>& x, const GridFunctionD& f, double fx,
                          const Region& region, double eps) {
  const AnnularGrid& g = *f.grid;
  const int n = g.n, Q = homogeneous_dimension(n);
  if (kernel.degree <= -Q) throw std::domain_error("singular_integrate: kernel homogeneity <= -Q is not locally integrable");
  check_same_dim(n, x.n());
  if (eps <= 0.0) eps = local_spacing(g, rho(x));
  const HPoint<double> xi = x;
  std::vector<double> xc(2 * n + 1);
  for (int k = 0; k < 2 * n + 1; ++k) xc[k] = x.coord(k);
  double s = 0.0;
  for (const auto& lev : g.levels) {
    double ls = 0.0;
    for (int i = lev.first; i < lev.first + lev.count; ++i) {
      if (!region.contains(g.rho(i))) continue;
      const double r = rho_between(g.nodes.col(i).data(), xc.data(), n);
      if (r < eps) continue;
      HPoint<double> w = group_mul(inverse(g.point(i)), xi);
      ls += g.weights(i) * kernel.k(w) * f.values(i);
    }
    s += ls;
  }
  if (region.contains(rho(x))) s += fx * ball_integral(kernel, n) * std::pow(eps, Q + kernel.degree);
  return s;
}

double singular_integrate(const SingularKernel& kernel, const HPoint<double>& x, const Field& f, const GridPtr& grid,
                          const Region& region, double eps) {
  return singular_integrate(kernel, x, sample(f, grid), f(x), region, eps);
}

}  // namespace heis
