#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bmpc/active_set.hpp"

namespace bmpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

/// Subset expansions enumerate 2^n principal submatrices; refuse above this.
inline constexpr int kMaxSubsetDim = 12;

/// Determinant by LU with partial pivoting. The 0x0 matrix has determinant 1.
double determinant(const Matrix& m);

/// Transpose of the cofactor matrix. Valid for singular input; adj of a 1x1
/// matrix is [1] and adj of the 0x0 matrix is the 0x0 matrix.
Matrix adjugate(const Matrix& m);

/// [M]_sigma: rows and columns i with sigma_i = 1, ascending.
Matrix principal_submatrix(const Matrix& m, const ActiveSet& sigma);

/// Inverse of [M]_sigma scattered back into a dim(M) zero matrix.
Matrix padded_inverse(const Matrix& m, const ActiveSet& sigma);
Matrix padded_adjugate(const Matrix& m, const ActiveSet& sigma);

/// det(A + Diag(lambda)) via the principal-minor expansion
///   sum_sigma (prod_i lambda_i^{1 - sigma_i}) det(A_sigma).
double det_plus_diagonal(const Matrix& a, const Vector& lambda);

/// One summand of the subset expansion of (A + Diag(lambda))^{-1}.
struct InverseTerm {
  ActiveSet sigma;
  /// h_sigma / h for invertible A_sigma, prod lambda^{1-sigma} / h otherwise.
  double weight = 0.0;
  /// det(A_sigma) * prod lambda^{1-sigma}; zero for singular A_sigma.
  double h_sigma = 0.0;
  /// Padded inverse when uses_adjugate is false, padded adjugate otherwise.
  Matrix matrix;
  bool uses_adjugate = false;
};

struct InverseDecomposition {
  std::vector<InverseTerm> terms;
  double h = 0.0;  ///< det(A + Diag(lambda)) = sum of h_sigma

  /// Sum of weight * matrix over all terms.
  Matrix reconstruct() const;
};

/// Writes (A + Diag(lambda))^{-1} as a weighted sum of padded inverses of the
/// invertible principal submatrices plus padded adjugates of the singular
/// ones. A must be PSD and lambda strictly positive. The implicit block K of
/// the block-adjugate formula is never formed; the expansion is built from
/// the principal submatrices directly.
InverseDecomposition decompose_inverse_plus_diagonal(const Matrix& a, const Vector& lambda);

/// Numerically singular test for a principal submatrix of a PSD matrix:
/// det relative to the Hadamard bound prod(diag).
bool psd_submatrix_is_singular(const Matrix& sub, double rel_tol = 1e-12);

/// (A + U C V)^{-1} = A^{-1} - A^{-1} U (C^{-1} + V A^{-1} U)^{-1} V A^{-1}.
Matrix woodbury_inverse(const Matrix& a, const Matrix& u, const Matrix& c, const Matrix& v);

/// Smallest eigenvalue >= -1e-10 * ||A|| after symmetrisation.
bool is_psd(const Matrix& a, double rel_tol = 1e-10);
bool is_symmetric(const Matrix& a, double rel_tol = 1e-12);

/// Inverse via LU; throws kSingular when the pivot ratio collapses.
Matrix checked_inverse(const Matrix& m, const char* what);

double spectral_norm(const Matrix& m);
double min_eigenvalue(const Matrix& symmetric);

}  // namespace linalg
}  // namespace bmpc
