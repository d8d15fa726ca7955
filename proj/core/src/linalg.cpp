#include "stcut/linalg.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/SparseLU>
#include <lapacke.h>

namespace stcut {

SolveResult solve_sparse(const SpMat& A, const Eigen::VectorXd& b) {
  if (A.rows() != A.cols() || A.rows() != b.size()) throw std::invalid_argument("solve_sparse: dimension mismatch");
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) throw SingularMatrix("solve_sparse: factorization failed: " + lu.lastErrorMessage());
  SolveResult out;
  out.x = lu.solve(b);
  const double bnorm = b.norm();
  const double scale = bnorm > 0.0 ? bnorm : 1.0;
  Eigen::VectorXd r = b - A * out.x;
  out.relative_residual = r.norm() / scale;
  for (int it = 0; it < 2 && out.relative_residual > 1e-14; ++it) {
    const Eigen::VectorXd dx = lu.solve(r);
    const Eigen::VectorXd candidate = out.x + dx;
    const Eigen::VectorXd rc = b - A * candidate;
    if (rc.norm() / scale >= out.relative_residual) break;
    out.x = candidate;
    r = rc;
    out.relative_residual = r.norm() / scale;
  }
  if (!out.x.allFinite()) throw SingularMatrix("solve_sparse: non-finite solution");
  return out;
}

SolveResult solve_bordered(const SpMat& A, const Eigen::VectorXd& g, const Eigen::VectorXd& rhs) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || g.size() != n || rhs.size() != n + 1)
    throw std::invalid_argument("solve_bordered: dimension mismatch");
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) throw SingularMatrix("solve_bordered: factorization failed: " + lu.lastErrorMessage());
  const Eigen::VectorXd z = lu.solve(g);
  const double gz = g.dot(z);
  if (!(std::abs(gz) > 0.0)) throw SingularMatrix("solve_bordered: singular border");

  auto apply = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd y(n + 1);
    y.head(n) = A * x.head(n) + x[n] * g;
    y[n] = g.dot(x.head(n));
    return y;
  };
  auto solve = [&](const Eigen::VectorXd& b) {
    Eigen::VectorXd x(n + 1);
    const Eigen::VectorXd u = lu.solve(b.head(n));
    x[n] = (g.dot(u) - b[n]) / gz;
    x.head(n) = u - x[n] * z;
    return x;
  };

  SolveResult out;
  out.x = solve(rhs);
  const double scale = rhs.norm() > 0.0 ? rhs.norm() : 1.0;
  Eigen::VectorXd r = rhs - apply(out.x);
  out.relative_residual = r.norm() / scale;
  for (int it = 0; it < 2 && out.relative_residual > 1e-14; ++it) {
    const Eigen::VectorXd candidate = out.x + solve(r);
    const Eigen::VectorXd rc = rhs - apply(candidate);
    if (rc.norm() / scale >= out.relative_residual) break;
    out.x = candidate;
    r = rc;
    out.relative_residual = r.norm() / scale;
  }
  if (!out.x.allFinite()) throw SingularMatrix("solve_bordered: non-finite solution");
  return out;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& A) {
  Eigen::MatrixXd work = A;  // column major, overwritten by LAPACK
  const lapack_int m = static_cast<lapack_int>(A.rows());
  const lapack_int n = static_cast<lapack_int>(A.cols());
  Eigen::VectorXd s(std::min(m, n));
  double dummy = 0.0;
  const lapack_int info =
      LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'N', m, n, work.data(), m, s.data(), &dummy, 1, &dummy, 1);
  if (info != 0) throw std::runtime_error("singular_values: dgesdd failed with info " + std::to_string(info));
  return s;
}

double condition_number(const SpMat& A, int dense_limit, double rel_tol) {
  if (A.rows() != A.cols()) throw std::invalid_argument("condition_number: matrix must be square");
  const int n = static_cast<int>(A.rows());
  if (n == 0) return 1.0;
  if (n <= dense_limit) {
    const Eigen::VectorXd s = singular_values(Eigen::MatrixXd(A));
    const double smin = s[s.size() - 1];
    if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
    return s[0] / smin;
  }

  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  auto start = [&] {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = dist(rng);
    return Eigen::VectorXd(v.normalized());
  };

  // Largest eigenvalue of A^T A.
  Eigen::VectorXd v = start();
  double lmax = 0.0;
  for (int it = 0; it < 5000; ++it) {
    Eigen::VectorXd w = A.transpose() * (A * v);
    const double est = w.norm();
    v = w / est;
    if (it > 3 && std::abs(est - lmax) <= 0.1 * rel_tol * est) {
      lmax = est;
      break;
    }
    lmax = est;
  }

  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  // Largest eigenvalue of (A^T A)^{-1} = A^{-1} A^{-T}.
  v = start();
  double lmin_inv = 0.0;
  for (int it = 0; it < 5000; ++it) {
    const Eigen::VectorXd y = lu.transpose().solve(v);
    Eigen::VectorXd w = lu.solve(y);
    const double est = w.norm();
    if (!std::isfinite(est)) return std::numeric_limits<double>::infinity();
    v = w / est;
    if (it > 3 && std::abs(est - lmin_inv) <= 0.1 * rel_tol * est) {
      lmin_inv = est;
      break;
    }
    lmin_inv = est;
  }
  return std::sqrt(lmax * lmin_inv);
}

}  // namespace stcut
