#include "heis/solver.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseLU>

#include <random>

namespace heis {

HPoint<double> FDBox::point(int idx) const {
  const int i = idx % N, j = (idx / N) % N, k = idx / (N * N);
  HPoint<double> p(1);
  p.x(0) = -L + (i + 1) * hx();
  p.y(0) = -L + (j + 1) * hx();
  p.t = -L * L + (k + 1) * ht();
  return p;
}

namespace {

struct Assembly {
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd boundary;  // contribution of Dirichlet data moved to the right-hand side
};

// P = a11 XX + a12 XY + a21 YX + a22 YY + b1 X + b2 Y + c in Cartesian derivatives, n = 1.
Assembly assemble(const SubellipticOperator& P, const FDBox& box, const Field* dirichlet) {
  if (P.n != 1) throw std::invalid_argument("finite-difference box: only n = 1");
  P.check();
  const int N = box.N, M = box.size();
  const double hx = box.hx(), ht = box.ht();
  const Field c = P.c_field();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(M) * 19);
  Eigen::VectorXd bnd = Eigen::VectorXd::Zero(M);
  auto coord = [&](int i, int j, int k) {
    HPoint<double> p(1);
    p.x(0) = -box.L + (i + 1) * hx;
    p.y(0) = -box.L + (j + 1) * hx;
    p.t = -box.L * box.L + (k + 1) * ht;
    return p;
  };
  for (int k = 0; k < N; ++k) {
    for (int j = 0; j < N; ++j) {
      for (int i = 0; i < N; ++i) {
        const int row = i + N * (j + N * k);
        const HPoint<double> p = coord(i, j, k);
        const double x = p.x(0), y = p.y(0);
        const Eigen::MatrixXd a = coefficient_matrix(P, p);
        const double a11 = a(0, 0), a12 = a(0, 1), a21 = a(1, 0), a22 = a(1, 1), s = a12 + a21;
        const double b1 = P.has_b() ? P.b[0](p) : 0.0, b2 = P.has_b() ? P.b[1](p) : 0.0;
        const double Cxx = a11, Cyy = a22, Ctt = 4 * y * y * a11 + 4 * x * x * a22 - 4 * x * y * s, Cxy = s;
        const double Cxt = 4 * y * a11 - 2 * x * s, Cyt = -4 * x * a22 + 2 * y * s;
        const double Ct = -2 * a12 + 2 * a21 + 2 * y * b1 - 2 * x * b2, Cx = b1, Cy = b2, C0 = c(p);
        auto add = [&](int di, int dj, int dk, double w) {
          if (w == 0.0) return;
          const int ii = i + di, jj = j + dj, kk = k + dk;
          if (ii < 0 || ii >= N || jj < 0 || jj >= N || kk < 0 || kk >= N) {
            if (dirichlet) bnd(row) += w * (*dirichlet)(coord(ii, jj, kk));
            return;
          }
          trip.emplace_back(row, ii + N * (jj + N * kk), w);
        };
        const double ix2 = 1.0 / (hx * hx), it2 = 1.0 / (ht * ht);
        add(0, 0, 0, -2 * (Cxx + Cyy) * ix2 - 2 * Ctt * it2 + C0);
        add(1, 0, 0, Cxx * ix2 + Cx / (2 * hx));
        add(-1, 0, 0, Cxx * ix2 - Cx / (2 * hx));
        add(0, 1, 0, Cyy * ix2 + Cy / (2 * hx));
        add(0, -1, 0, Cyy * ix2 - Cy / (2 * hx));
        add(0, 0, 1, Ctt * it2 + Ct / (2 * ht));
        add(0, 0, -1, Ctt * it2 - Ct / (2 * ht));
        const double mxy = Cxy / (4 * hx * hx), mxt = Cxt / (4 * hx * ht), myt = Cyt / (4 * hx * ht);
        add(1, 1, 0, mxy);
        add(-1, -1, 0, mxy);
        add(1, -1, 0, -mxy);
        add(-1, 1, 0, -mxy);
        add(1, 0, 1, mxt);
        add(-1, 0, -1, mxt);
        add(1, 0, -1, -mxt);
        add(-1, 0, 1, -mxt);
        add(0, 1, 1, myt);
        add(0, -1, -1, myt);
        add(0, 1, -1, -myt);
        add(0, -1, 1, -myt);
      }
    }
  }
  Assembly out;
  out.A.resize(M, M);
  out.A.setFromTriplets(trip.begin(), trip.end());
  out.A.makeCompressed();
  out.boundary = bnd;
  return out;
}

}  // namespace

Eigen::SparseMatrix<double> fd_matrix(const SubellipticOperator& P, const FDBox& box) {
  return assemble(P, box, nullptr).A;
}

nlohmann::json FDSolveReport::to_json() const {
  return {{"L", box.L}, {"N", box.N}, {"unknowns", u.size()}, {"relative_residual", relative_residual}};
}

FDSolveReport fd_solve(const SubellipticOperator& P, const Field& f, const Field& g, const FDBox& box) {
  const Assembly as = assemble(P, box, &g);
  Eigen::VectorXd rhs(box.size());
  for (int i = 0; i < box.size(); ++i) rhs(i) = f(box.point(i));
  rhs -= as.boundary;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(as.A);
  if (lu.info() != Eigen::Success) throw std::runtime_error("fd_solve: factorization failed");
  FDSolveReport rep;
  rep.box = box;
  rep.u = lu.solve(rhs);
  const double rn = rhs.norm();
  rep.relative_residual = rn > 0.0 ? (as.A * rep.u - rhs).norm() / rn : 0.0;
  return rep;
}

// ---- Fredholm probe ----------------------------------------------------------------------------

nlohmann::json FredholmProbe::to_json() const {
  return {{"n", n},
          {"p", p},
          {"delta", delta},
          {"delta_star", delta_star},
          {"N", N},
          {"sigma", sigma},
          {"sigma_star", sigma_star},
          {"sigma_min_history", sigma_min_history},
          {"sigma_min_star_history", sigma_min_star_history},
          {"N_P", N_P},
          {"N_Pstar", N_Pstar},
          {"index", index}};
}

namespace {

using LU = Eigen::SparseLU<Eigen::SparseMatrix<double>>;

// Smallest singular values of D_l B D_r^{-1}, B = A or A^T, by subspace iteration on its inverse Gram matrix.
std::vector<double> smallest_singular(const Eigen::SparseMatrix<double>& A, LU& lu, bool transpose,
                                      const Eigen::VectorXd& Dl, const Eigen::VectorXd& Dr, int k, std::uint64_t seed) {
  const int M = static_cast<int>(A.rows());
  // Bt^{-1} v = Dr B^{-1} Dl^{-1} v ;  Bt^{-T} v = Dl^{-1} B^{-T} Dr v
  auto solveB = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return transpose ? Eigen::VectorXd(lu.transpose().solve(v)) : Eigen::VectorXd(lu.solve(v));
  };
  auto solveBT = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return transpose ? Eigen::VectorXd(lu.solve(v)) : Eigen::VectorXd(lu.transpose().solve(v));
  };
  auto apply_inv_gram = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd w = solveBT(Dr.cwiseProduct(v)).cwiseQuotient(Dl);
    return Eigen::VectorXd(Dr.cwiseProduct(solveB(w.cwiseQuotient(Dl))));
  };
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01(0.0, 1.0);
  Eigen::MatrixXd V(M, k);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < k; ++j) V(i, j) = N01(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(V);
  V = qr.householderQ() * Eigen::MatrixXd::Identity(M, k);
  std::vector<double> prev(k, 0.0), sv(k, 0.0);
  for (int it = 0; it < 200; ++it) {
    Eigen::MatrixXd W(M, k);
    for (int j = 0; j < k; ++j) W.col(j) = apply_inv_gram(V.col(j));
    qr.compute(W);
    V = qr.householderQ() * Eigen::MatrixXd::Identity(M, k);
    // Rayleigh-Ritz on the span of V
    Eigen::MatrixXd BV(M, k);
    for (int j = 0; j < k; ++j) {
      const Eigen::VectorXd x = V.col(j).cwiseQuotient(Dr);
      const Eigen::VectorXd y = transpose ? Eigen::VectorXd(A.transpose() * x) : Eigen::VectorXd(A * x);
      BV.col(j) = Dl.cwiseProduct(y);
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(BV);
    const Eigen::VectorXd s = svd.singularValues();
    for (int j = 0; j < k; ++j) sv[j] = s(k - 1 - j);
    bool done = it > 3;
    for (int j = 0; j < k; ++j) done = done && std::abs(sv[j] - prev[j]) <= 1e-8 * sv[j];
    prev = sv;
    if (done) break;
  }
  return sv;
}

int kernel_count(const std::vector<std::vector<double>>& hist) {
  const int k = static_cast<int>(hist.front().size());
  int count = 0;
  for (int j = 0; j < k; ++j) {
    bool halves = true;
    for (size_t r = 1; r < hist.size(); ++r) halves = halves && hist[r][j] <= 0.5 * hist[r - 1][j];
    count += halves ? 1 : 0;
  }
  return count;
}

}  // namespace

FredholmProbe fredholm_probe(const SubellipticOperator& P, double p, double delta, const std::vector<int>& refinements,
                             double L) {
  if (refinements.size() < 3) throw std::invalid_argument("fredholm_probe: need at least 3 refinements");
  if (P.n != 1) throw std::invalid_argument("fredholm_probe: finite-difference probe is implemented for n = 1");
  const int n = P.n, Q = homogeneous_dimension(n);
  if (!(delta > -2.0 * n && delta < 0.0)) throw std::invalid_argument("fredholm_probe: delta must lie in (-2n, 0)");
  const double q = P.q();
  if (!(p > q / (q - 1.0) && p <= q)) throw std::invalid_argument("fredholm_probe: need q/(q-1) < p <= q");
  FredholmProbe fp;
  fp.n = n;
  fp.p = p;
  fp.delta = delta;
  fp.delta_star = 2.0 - Q - delta;
  fp.N = refinements;
  for (int N : refinements) {
    const FDBox box{L, N};
    const Eigen::SparseMatrix<double> A = fd_matrix(P, box);
    LU lu(A);
    if (lu.info() != Eigen::Success) throw std::runtime_error("fredholm_probe: factorization failed");
    auto weights = [&](double d) {
      Eigen::VectorXd D(box.size());
      for (int i = 0; i < box.size(); ++i) D(i) = std::pow(sigma(box.point(i)), -d - Q / p);
      return D;
    };
    fp.sigma.push_back(smallest_singular(A, lu, false, weights(delta - 2.0), weights(delta), kFredholmModes, 11));
    fp.sigma_star.push_back(
        smallest_singular(A, lu, true, weights(fp.delta_star - 2.0), weights(fp.delta_star), kFredholmModes, 13));
    fp.sigma_min_history.push_back(fp.sigma.back().front());
    fp.sigma_min_star_history.push_back(fp.sigma_star.back().front());
  }
  fp.N_P = kernel_count(fp.sigma);
  fp.N_Pstar = kernel_count(fp.sigma_star);
  fp.index = fp.N_P - fp.N_Pstar;
  return fp;
}

}  // namespace heis
