// Exact matrix model of the Clifford algebra C_{2n}(-1) on the complex exterior algebra Lambda*(C^n),
// the torsion-direction term of the Weitzenbock formula, and a principal-part check for the spinor Laplacian.
#pragma once

#include <Eigen/Core>
#include <boost/rational.hpp>
#include "json.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace heis {

using Rational = boost::rational<long long>;

// a + b i with a, b rational.
struct GaussRat {
  Rational re{0}, im{0};

  GaussRat() = default;
  GaussRat(int a) : re(a) {}  // NOLINT: integer literals in Eigen expressions
  GaussRat(Rational a, Rational b = 0) : re(a), im(b) {}

  static GaussRat i() { return {0, 1}; }
  GaussRat conj() const { return {re, -im}; }
  bool is_zero() const { return re == Rational(0) && im == Rational(0); }
  std::string str() const;
};

GaussRat operator+(const GaussRat& a, const GaussRat& b);
GaussRat operator-(const GaussRat& a, const GaussRat& b);
GaussRat operator-(const GaussRat& a);
GaussRat operator*(const GaussRat& a, const GaussRat& b);
GaussRat operator/(const GaussRat& a, const GaussRat& b);
inline GaussRat& operator+=(GaussRat& a, const GaussRat& b) { return a = a + b; }
inline GaussRat& operator-=(GaussRat& a, const GaussRat& b) { return a = a - b; }
inline GaussRat& operator*=(GaussRat& a, const GaussRat& b) { return a = a * b; }
inline GaussRat& operator/=(GaussRat& a, const GaussRat& b) { return a = a / b; }
inline bool operator==(const GaussRat& a, const GaussRat& b) { return a.re == b.re && a.im == b.im; }
inline bool operator!=(const GaussRat& a, const GaussRat& b) { return !(a == b); }
inline std::ostream& operator<<(std::ostream& os, const GaussRat& z) { return os << z.str(); }

}  // namespace heis

namespace Eigen {
template <>
struct NumTraits<heis::GaussRat> : GenericNumTraits<heis::GaussRat> {
  using Real = heis::GaussRat;
  using NonInteger = heis::GaussRat;
  using Nested = heis::GaussRat;
  using Literal = heis::GaussRat;
  enum { IsComplex = 0, IsInteger = 0, IsSigned = 1, RequireInitialization = 1, ReadCost = 4, AddCost = 8, MulCost = 16 };
  static inline int digits10() { return 0; }
};
}  // namespace Eigen

namespace heis {

using ExactMatrix = Eigen::Matrix<GaussRat, Eigen::Dynamic, Eigen::Dynamic>;

ExactMatrix exact_identity(int d);
ExactMatrix adjoint(const ExactMatrix& A);
bool is_zero(const ExactMatrix& A);
nlohmann::json to_json(const ExactMatrix& A);

inline constexpr int kMaxCliffordN = 6;

struct CliffordRep {
  int n = 1;
  // Basis of Lambda*(C^n): index = bitmask of {w^1..w^n}, in increasing order of the mask.
  std::vector<ExactMatrix> generators;  // N(e_1) .. N(e_2n)
  std::vector<int> even_basis, odd_basis;
  int dim() const { return 1 << n; }
  static int degree(int index);
  nlohmann::json to_json() const;
};

// N(e_b) = wedge(w^b) - contract(w^b), N(e_{n+b}) = i (wedge(w^b) + contract(w^b)).
// Throws std::invalid_argument for n < 1 or n > kMaxCliffordN.
CliffordRep build_rep(int n);

// Restriction of A to the span of the listed basis vectors.
ExactMatrix restrict(const ExactMatrix& A, const std::vector<int>& basis);

struct CliffordChecks {
  int n = 1;
  bool relations = false;          // e_i e_j + e_j e_i = -2 delta_ij
  bool parity_reversing = false;   // every generator swaps even and odd
  bool quadratic_parity = false;   // e_i e_j (i != j) preserves even and odd
  int even_dim = 0, odd_dim = 0;
  int pairs_checked = 0;
  bool pass() const { return relations && parity_reversing && quadratic_parity && even_dim == odd_dim; }
  nlohmann::json to_json() const;
};

CliffordChecks check_rep(const CliffordRep& rep);

// Characteristic polynomial det(x I - A), coefficients from x^0 up to x^d.
std::vector<GaussRat> characteristic_polynomial(const ExactMatrix& A);

struct ExactSpectrum {
  std::vector<GaussRat> char_poly;
  std::optional<std::vector<GaussRat>> eigenvalues;  // sorted by imaginary then real part; set when A is diagonal
  nlohmann::json to_json() const;
};

ExactSpectrum exact_spectrum(const ExactMatrix& A);

struct WeitzenbockTerm {
  int n = 1;
  ExactMatrix omega, omega_even, omega_odd;  // Omega = sum_b N(e_b) N(e_{n+b})
  ExactSpectrum spectrum, spectrum_even, spectrum_odd;
  bool skew_hermitian = false;
  bool preserves_parity = false;
  bool imaginary_spectrum = false;
  bool even_vanishes = false;
  nlohmann::json to_json() const;
};

WeitzenbockTerm weitzenbock_term(const CliffordRep& rep);

// Second-order part of the componentwise spinor Laplacian for phi = phi^l s_l with constant s_l and
// seeded constant connection coefficients, compared with -Lap phi^l on random cubic polynomials.
struct PrincipalPartReport {
  int n = 2;
  int components = 0;
  int points = 0;
  double max_principal_error = 0.0;  // |second-order part + Lap phi^l|, relative
  double max_split_error = 0.0;      // |full - second-order part - first-order terms|, relative
  double constant_second_order = 0.0;  // second-order part for constant phi^l
  bool pass = false;
  nlohmann::json to_json() const;
};

PrincipalPartReport principal_part_check(int n = 2, std::uint64_t seed = 7, int points = 6);

}  // namespace heis
