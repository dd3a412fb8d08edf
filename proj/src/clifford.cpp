#include "heis/clifford.hpp"

#include "heis/field.hpp"

#include <algorithm>
#include <bit>
#include <random>
#include <sstream>

namespace heis {

namespace {

std::string rat_str(const Rational& r) {
  std::ostringstream os;
  os << r.numerator();
  if (r.denominator() != 1) os << "/" << r.denominator();
  return os.str();
}

}  // namespace

std::string GaussRat::str() const {
  if (im == Rational(0)) return rat_str(re);
  std::string s = re == Rational(0) ? "" : rat_str(re) + (im > Rational(0) ? "+" : "");
  if (im == Rational(1)) return s + "i";
  if (im == Rational(-1)) return s + "-i";
  return s + rat_str(im) + "i";
}

GaussRat operator+(const GaussRat& a, const GaussRat& b) { return {a.re + b.re, a.im + b.im}; }
GaussRat operator-(const GaussRat& a, const GaussRat& b) { return {a.re - b.re, a.im - b.im}; }
GaussRat operator-(const GaussRat& a) { return {-a.re, -a.im}; }
GaussRat operator*(const GaussRat& a, const GaussRat& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
GaussRat operator/(const GaussRat& a, const GaussRat& b) {
  const Rational d = b.re * b.re + b.im * b.im;
  if (d == Rational(0)) throw std::domain_error("GaussRat: division by zero");
  const GaussRat num = a * b.conj();
  return {num.re / d, num.im / d};
}

ExactMatrix exact_identity(int d) {
  ExactMatrix I = ExactMatrix::Constant(d, d, GaussRat(0));
  for (int i = 0; i < d; ++i) I(i, i) = GaussRat(1);
  return I;
}

ExactMatrix adjoint(const ExactMatrix& A) {
  return A.transpose().unaryExpr([](const GaussRat& z) { return z.conj(); });
}

bool is_zero(const ExactMatrix& A) {
  return std::all_of(A.data(), A.data() + A.size(), [](const GaussRat& z) { return z.is_zero(); });
}

nlohmann::json to_json(const ExactMatrix& A) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < A.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (int j = 0; j < A.cols(); ++j) r.push_back(A(i, j).str());
    rows.push_back(r);
  }
  return rows;
}

int CliffordRep::degree(int index) { return std::popcount(static_cast<unsigned>(index)); }

nlohmann::json CliffordRep::to_json() const {
  nlohmann::json g = nlohmann::json::array();
  for (const auto& e : generators) g.push_back(heis::to_json(e));
  return {{"n", n}, {"dim", dim()}, {"even_basis", even_basis}, {"odd_basis", odd_basis}, {"generators", g}};
}

CliffordRep build_rep(int n) {
  if (n < 1 || n > kMaxCliffordN) throw std::invalid_argument("build_rep: need 1 <= n <= " + std::to_string(kMaxCliffordN));
  CliffordRep rep;
  rep.n = n;
  const int d = rep.dim();
  for (int m = 0; m < d; ++m) (CliffordRep::degree(m) % 2 == 0 ? rep.even_basis : rep.odd_basis).push_back(m);
  const GaussRat I = GaussRat::i();
  std::vector<ExactMatrix> wedge(n), contract(n);
  for (int b = 0; b < n; ++b) {
    const int bit = 1 << b;
    wedge[b] = contract[b] = ExactMatrix::Constant(d, d, GaussRat(0));
    for (int m = 0; m < d; ++m) {
      // sign from moving w^b past the lower-index factors of the monomial
      const int s = std::popcount(static_cast<unsigned>(m & (bit - 1))) % 2 == 0 ? 1 : -1;
      if (m & bit)
        contract[b](m ^ bit, m) = GaussRat(s);
      else
        wedge[b](m | bit, m) = GaussRat(s);
    }
  }
  rep.generators.resize(2 * n);
  for (int b = 0; b < n; ++b) {
    rep.generators[b] = wedge[b] - contract[b];
    rep.generators[n + b] = (wedge[b] + contract[b]) * I;
  }
  return rep;
}

ExactMatrix restrict(const ExactMatrix& A, const std::vector<int>& basis) {
  const int k = static_cast<int>(basis.size());
  ExactMatrix R(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) R(i, j) = A(basis[i], basis[j]);
  return R;
}

namespace {

// A maps span(from) into span(to): entries from a `from` column to any row outside `to` vanish.
bool maps_into(const ExactMatrix& A, const std::vector<int>& from, const std::vector<int>& to) {
  std::vector<bool> in_to(A.rows(), false);
  for (int i : to) in_to[i] = true;
  for (int j : from)
    for (int i = 0; i < A.rows(); ++i)
      if (!in_to[i] && !A(i, j).is_zero()) return false;
  return true;
}

bool preserves(const ExactMatrix& A, const CliffordRep& rep) {
  return maps_into(A, rep.even_basis, rep.even_basis) && maps_into(A, rep.odd_basis, rep.odd_basis);
}

}  // namespace

nlohmann::json CliffordChecks::to_json() const {
  return {{"n", n},
          {"relations", relations},
          {"parity_reversing", parity_reversing},
          {"quadratic_parity", quadratic_parity},
          {"even_dim", even_dim},
          {"odd_dim", odd_dim},
          {"pairs_checked", pairs_checked},
          {"pass", pass()}};
}

CliffordChecks check_rep(const CliffordRep& rep) {
  CliffordChecks c;
  c.n = rep.n;
  c.even_dim = static_cast<int>(rep.even_basis.size());
  c.odd_dim = static_cast<int>(rep.odd_basis.size());
  const int m = static_cast<int>(rep.generators.size()), d = rep.dim();
  const ExactMatrix I = exact_identity(d);
  c.relations = c.parity_reversing = c.quadratic_parity = true;
  for (int i = 0; i < m; ++i) {
    const ExactMatrix& ei = rep.generators[i];
    c.parity_reversing = c.parity_reversing && maps_into(ei, rep.even_basis, rep.odd_basis) &&
                         maps_into(ei, rep.odd_basis, rep.even_basis);
    for (int j = i; j < m; ++j) {
      const ExactMatrix& ej = rep.generators[j];
      const ExactMatrix anti = ei * ej + ej * ei;
      const ExactMatrix expect = i == j ? ExactMatrix(I * GaussRat(-2)) : ExactMatrix::Constant(d, d, GaussRat(0));
      c.relations = c.relations && anti == expect;
      if (i != j) c.quadratic_parity = c.quadratic_parity && preserves(ei * ej, rep);
      ++c.pairs_checked;
    }
  }
  return c;
}

std::vector<GaussRat> characteristic_polynomial(const ExactMatrix& A) {
  const int d = static_cast<int>(A.rows());
  if (A.cols() != d) throw std::invalid_argument("characteristic_polynomial: square matrix required");
  // Faddeev-LeVerrier: M_k = A M_{k-1} + c_{d-k+1} I, c_{d-k} = -tr(A M_k) / k
  std::vector<GaussRat> c(d + 1, GaussRat(0));
  c[d] = GaussRat(1);
  const ExactMatrix I = exact_identity(d);
  ExactMatrix M = ExactMatrix::Constant(d, d, GaussRat(0));
  for (int k = 1; k <= d; ++k) {
    M = A * M + I * c[d - k + 1];
    const ExactMatrix AM = A * M;
    GaussRat tr(0);
    for (int i = 0; i < d; ++i) tr += AM(i, i);
    c[d - k] = -tr / GaussRat(k);
  }
  return c;
}

nlohmann::json ExactSpectrum::to_json() const {
  nlohmann::json cp = nlohmann::json::array();
  for (const auto& z : char_poly) cp.push_back(z.str());
  nlohmann::json j = {{"char_poly", cp}};
  if (eigenvalues) {
    nlohmann::json ev = nlohmann::json::array();
    for (const auto& z : *eigenvalues) ev.push_back(z.str());
    j["eigenvalues"] = ev;
  } else {
    j["eigenvalues"] = nullptr;
  }
  return j;
}

ExactSpectrum exact_spectrum(const ExactMatrix& A) {
  ExactSpectrum s;
  s.char_poly = characteristic_polynomial(A);
  bool diagonal = true;
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j) diagonal = diagonal && (i == j || A(i, j).is_zero());
  if (diagonal) {
    std::vector<GaussRat> ev(A.rows());
    for (int i = 0; i < A.rows(); ++i) ev[i] = A(i, i);
    std::sort(ev.begin(), ev.end(), [](const GaussRat& a, const GaussRat& b) {
      return a.im != b.im ? a.im < b.im : a.re < b.re;
    });
    s.eigenvalues = ev;
  }
  return s;
}

nlohmann::json WeitzenbockTerm::to_json() const {
  return {{"n", n},
          {"omega", heis::to_json(omega)},
          {"omega_even", heis::to_json(omega_even)},
          {"omega_odd", heis::to_json(omega_odd)},
          {"spectrum", spectrum.to_json()},
          {"spectrum_even", spectrum_even.to_json()},
          {"spectrum_odd", spectrum_odd.to_json()},
          {"skew_hermitian", skew_hermitian},
          {"preserves_parity", preserves_parity},
          {"imaginary_spectrum", imaginary_spectrum},
          {"even_vanishes", even_vanishes}};
}

WeitzenbockTerm weitzenbock_term(const CliffordRep& rep) {
  WeitzenbockTerm w;
  w.n = rep.n;
  const int d = rep.dim();
  w.omega = ExactMatrix::Constant(d, d, GaussRat(0));
  for (int b = 0; b < rep.n; ++b) w.omega += rep.generators[b] * rep.generators[rep.n + b];
  w.omega_even = restrict(w.omega, rep.even_basis);
  w.omega_odd = restrict(w.omega, rep.odd_basis);
  w.spectrum = exact_spectrum(w.omega);
  w.spectrum_even = exact_spectrum(w.omega_even);
  w.spectrum_odd = exact_spectrum(w.omega_odd);
  w.skew_hermitian = adjoint(w.omega) == ExactMatrix(-w.omega);
  w.preserves_parity = preserves(w.omega, rep);
  // skew-Hermitian implies an imaginary spectrum; the exact eigenvalues are also checked when available
  w.imaginary_spectrum = w.skew_hermitian;
  if (w.spectrum.eigenvalues)
    for (const auto& z : *w.spectrum.eigenvalues) w.imaginary_spectrum = w.imaginary_spectrum && z.re == Rational(0);
  w.even_vanishes = is_zero(w.omega_even);
  return w;
}

// ---- principal part ---------------------------------------------------------------------------

nlohmann::json PrincipalPartReport::to_json() const {
  return {{"n", n},
          {"components", components},
          {"points", points},
          {"max_principal_error", max_principal_error},
          {"max_split_error", max_split_error},
          {"constant_second_order", constant_second_order},
          {"pass", pass}};
}

namespace {

// Random cubic polynomial in the coordinates of H_n: sum of c x_i x_j x_k over index triples, -1 = absent factor.
Field random_cubic(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const int d = 2 * n + 1;
  struct Term {
    double c;
    int i, j, k;
  };
  std::vector<Term> terms{{U(rng), -1, -1, -1}};
  for (int i = 0; i < d; ++i) {
    terms.push_back({U(rng), i, -1, -1});
    for (int j = i; j < d; ++j) {
      terms.push_back({U(rng), i, j, -1});
      terms.push_back({U(rng), i, j, (i + j) % d});
    }
  }
  return make_field("cubic", [terms](const auto& p) {
    using S = std::decay_t<decltype(p.coord(0))>;
    S s(0.0);
    for (const Term& t : terms) {
      S m(t.c);
      for (int idx : {t.i, t.j, t.k})
        if (idx >= 0) m = m * p.coord(idx);
      s = s + m;
    }
    return s;
  });
}

// -sum_a c_a^T H c_a with c_a the coordinate coefficients of the frame vector e_a.
double hessian_second_order(const Field& f, const HPoint<double>& p) {
  const J1 u = f(seed<J1>(p));
  const int n = p.n(), it = 2 * n;
  if (u.vars() == 0) return 0.0;
  double s = 0.0;
  for (int a = 0; a < 2 * n; ++a) {
    const double ct = frame_t_coeff(a, p);
    s += u.h(a, a) + 2.0 * ct * u.h(a, it) + ct * ct * u.h(it, it);
  }
  return -s;
}

}  // namespace

PrincipalPartReport principal_part_check(int n, std::uint64_t seed, int points) {
  if (n < 1 || n > 2) throw std::invalid_argument("principal_part_check: jets support n <= 2");
  if (points < 1) throw std::invalid_argument("principal_part_check: need at least one point");
  PrincipalPartReport r;
  r.n = n;
  r.points = points;
  const int S = 1 << n, m = 2 * n;
  r.components = S;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<Field> phi;
  for (int l = 0; l < S; ++l) phi.push_back(random_cubic(n, rng));
  std::vector<Eigen::MatrixXd> Gamma(m);
  for (auto& G : Gamma) G = Eigen::MatrixXd::NullaryExpr(S, S, [&] { return U(rng); });
  std::vector<std::vector<Field>> d1(S), d2(S);
  std::vector<Field> lap(S);
  for (int l = 0; l < S; ++l) {
    lap[l] = sublaplacian(phi[l]);
    for (int a = 0; a < m; ++a) {
      d1[l].push_back(frame_derivative(a, phi[l]));
      d2[l].push_back(frame_derivative(a, d1[l][a]));
    }
  }
  for (int k = 0; k < points; ++k) {
    HPoint<double> p(n);
    for (int i = 0; i < 2 * n + 1; ++i) p.coord(i) = 1.5 * U(rng);
    Eigen::VectorXd val(S);
    Eigen::MatrixXd grad(S, m);
    for (int l = 0; l < S; ++l) {
      val(l) = phi[l](p);
      for (int a = 0; a < m; ++a) grad(l, a) = d1[l][a](p);
    }
    for (int l = 0; l < S; ++l) {
      // nabla*nabla phi = -sum_a (e_a e_a phi + 2 Gamma_a e_a phi + Gamma_a^2 phi)
      double full = 0.0, lower = 0.0;
      for (int a = 0; a < m; ++a) {
        const double first = 2.0 * Gamma[a].row(l).dot(grad.col(a)) + (Gamma[a] * Gamma[a]).row(l).dot(val);
        full -= d2[l][a](p) + first;
        lower -= first;
      }
      const double second = hessian_second_order(phi[l], p);
      const double L = lap[l](p);
      const double scale = std::max({1.0, std::abs(L), std::abs(full)});
      r.max_principal_error = std::max(r.max_principal_error, std::abs(second + L) / scale);
      r.max_split_error = std::max(r.max_split_error, std::abs(full - second - lower) / scale);
    }
    r.constant_second_order = std::max(r.constant_second_order, std::abs(hessian_second_order(Field::constant(U(rng)), p)));
  }
  r.pass = r.max_principal_error < 1e-10 && r.max_split_error < 1e-10 && r.constant_second_order == 0.0;
  return r;
}

}  // namespace heis
