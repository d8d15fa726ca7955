#pragma once

#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace stcut {

using SpMat = Eigen::SparseMatrix<double>;

class SingularMatrix : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolveResult {
  Eigen::VectorXd x;
  double relative_residual = 0.0;
};

/// Sparse LU solve with up to two steps of iterative refinement. Throws
/// SingularMatrix if the factorization fails.
SolveResult solve_sparse(const SpMat& A, const Eigen::VectorXd& b);

/// Solves the bordered system [A g; g^T 0] [x; y] = rhs with one sparse LU
/// of A, eliminating y. Up to two refinement steps on the full system.
SolveResult solve_bordered(const SpMat& A, const Eigen::VectorXd& g, const Eigen::VectorXd& rhs);

/// Spectral condition number sigma_max / sigma_min. Dense SVD up to
/// `dense_limit` unknowns, otherwise power iteration on A^T A and inverse
/// iteration through the sparse LU factors. Returns +inf for a singular
/// matrix.
double condition_number(const SpMat& A, int dense_limit = 4000, double rel_tol = 1e-4);

/// Singular values (descending) of a dense matrix.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& A);

}  // namespace stcut
