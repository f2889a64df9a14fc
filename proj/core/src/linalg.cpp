#include "bmpc/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <string>

#include "bmpc/error.hpp"

namespace bmpc::linalg {

namespace {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) fail(ErrorCode::kDimensionMismatch, std::string(what) + ": matrix not square");
}

void require_subset_dim(Eigen::Index n, const char* what) {
  if (n > kMaxSubsetDim) {
    fail(ErrorCode::kCombinatorialLimit,
         std::string(what) + ": dimension " + std::to_string(n) + " exceeds " + std::to_string(kMaxSubsetDim));
  }
}

// Minor of m with row r and column c removed.
Matrix minor_of(const Matrix& m, Eigen::Index r, Eigen::Index c) {
  const Eigen::Index n = m.rows();
  Matrix out(n - 1, n - 1);
  for (Eigen::Index i = 0, oi = 0; i < n; ++i) {
    if (i == r) continue;
    for (Eigen::Index j = 0, oj = 0; j < n; ++j) {
      if (j == c) continue;
      out(oi, oj++) = m(i, j);
    }
    ++oi;
  }
  return out;
}

Matrix scatter(const Matrix& sub, const std::vector<int>& idx, Eigen::Index n) {
  Matrix out = Matrix::Zero(n, n);
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = 0; b < idx.size(); ++b) {
      out(idx[a], idx[b]) = sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
  }
  return out;
}

double lambda_product(const Vector& lambda, const ActiveSet& sigma) {
  double p = 1.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (!sigma.test(static_cast<std::size_t>(i))) p *= lambda(i);
  }
  return p;
}

}  // namespace

double determinant(const Matrix& m) {
  require_square(m, "determinant");
  if (m.rows() == 0) return 1.0;
  return Eigen::PartialPivLU<Matrix>(m).determinant();
}

Matrix adjugate(const Matrix& m) {
  require_square(m, "adjugate");
  require_subset_dim(m.rows(), "adjugate");
  const Eigen::Index n = m.rows();
  if (n == 0) return Matrix(0, 0);
  if (n == 1) return Matrix::Ones(1, 1);
  Matrix adj(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      // adj(M)_{ji} = cofactor C_{ij}
      adj(j, i) = sign * determinant(minor_of(m, i, j));
    }
  }
  return adj;
}

Matrix principal_submatrix(const Matrix& m, const ActiveSet& sigma) {
  require_square(m, "principal_submatrix");
  if (static_cast<std::size_t>(m.rows()) != sigma.size()) {
    fail(ErrorCode::kDimensionMismatch, "principal_submatrix: mask length differs from matrix dimension");
  }
  const auto idx = sigma.indices();
  const auto k = static_cast<Eigen::Index>(idx.size());
  Matrix out(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) out(a, b) = m(idx[a], idx[b]);
  }
  return out;
}

Matrix padded_inverse(const Matrix& m, const ActiveSet& sigma) {
  const Matrix sub = principal_submatrix(m, sigma);
  if (sub.rows() == 0) return Matrix::Zero(m.rows(), m.cols());
  return scatter(checked_inverse(sub, "padded_inverse"), sigma.indices(), m.rows());
}

Matrix padded_adjugate(const Matrix& m, const ActiveSet& sigma) {
  const Matrix sub = principal_submatrix(m, sigma);
  return scatter(adjugate(sub), sigma.indices(), m.rows());
}

double det_plus_diagonal(const Matrix& a, const Vector& lambda) {
  require_square(a, "det_plus_diagonal");
  if (a.rows() != lambda.size()) fail(ErrorCode::kDimensionMismatch, "det_plus_diagonal: lambda length");
  require_subset_dim(a.rows(), "det_plus_diagonal");
  const auto n = static_cast<std::size_t>(a.rows());
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    const ActiveSet sigma = ActiveSet::from_mask(mask, n);
    total += lambda_product(lambda, sigma) * determinant(principal_submatrix(a, sigma));
  }
  return total;
}

bool psd_submatrix_is_singular(const Matrix& sub, double rel_tol) {
  if (sub.rows() == 0) return false;
  double hadamard = 1.0;
  for (Eigen::Index i = 0; i < sub.rows(); ++i) hadamard *= std::max(sub(i, i), 0.0);
  if (hadamard <= 0.0) return true;
  return determinant(sub) <= rel_tol * hadamard;
}

InverseDecomposition decompose_inverse_plus_diagonal(const Matrix& a, const Vector& lambda) {
  require_square(a, "decompose_inverse_plus_diagonal");
  if (a.rows() != lambda.size()) {
    fail(ErrorCode::kDimensionMismatch, "decompose_inverse_plus_diagonal: lambda length");
  }
  require_subset_dim(a.rows(), "decompose_inverse_plus_diagonal");
  if ((lambda.array() <= 0.0).any()) {
    fail(ErrorCode::kInvalidArgument, "decompose_inverse_plus_diagonal: lambda must be positive");
  }
  if (!is_psd(a)) fail(ErrorCode::kNotPsd, "decompose_inverse_plus_diagonal: A is not PSD");

  const auto n = static_cast<std::size_t>(a.rows());
  InverseDecomposition out;
  out.terms.reserve(std::size_t{1} << n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    InverseTerm term;
    term.sigma = ActiveSet::from_mask(mask, n);
    const Matrix sub = principal_submatrix(a, term.sigma);
    const double c = lambda_product(lambda, term.sigma);
    if (psd_submatrix_is_singular(sub)) {
      term.uses_adjugate = true;
      term.h_sigma = 0.0;
      term.weight = c;  // normalised by h below
      term.matrix = scatter(adjugate(sub), term.sigma.indices(), a.rows());
    } else {
      term.h_sigma = c * determinant(sub);
      term.weight = term.h_sigma;
      term.matrix = sub.rows() == 0 ? Matrix::Zero(a.rows(), a.rows())
                                     : scatter(sub.inverse(), term.sigma.indices(), a.rows());
    }
    out.h += term.h_sigma;
    out.terms.push_back(std::move(term));
  }
  for (auto& t : out.terms) t.weight /= out.h;
  return out;
}

Matrix InverseDecomposition::reconstruct() const {
  if (terms.empty()) return Matrix(0, 0);
  Matrix sum = Matrix::Zero(terms.front().matrix.rows(), terms.front().matrix.cols());
  for (const auto& t : terms) sum += t.weight * t.matrix;
  return sum;
}

Matrix woodbury_inverse(const Matrix& a, const Matrix& u, const Matrix& c, const Matrix& v) {
  require_square(a, "woodbury_inverse");
  require_square(c, "woodbury_inverse");
  if (u.rows() != a.rows() || u.cols() != c.rows() || v.rows() != c.cols() || v.cols() != a.cols()) {
    fail(ErrorCode::kDimensionMismatch, "woodbury_inverse: shapes are not conformable");
  }
  const Matrix a_inv = checked_inverse(a, "woodbury_inverse: A");
  const Matrix c_inv = checked_inverse(c, "woodbury_inverse: C");
  const Matrix inner = checked_inverse(c_inv + v * a_inv * u, "woodbury_inverse: C^-1 + V A^-1 U");
  return a_inv - a_inv * u * inner * v * a_inv;
}

bool is_symmetric(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

bool is_psd(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  if (a.rows() == 0) return true;
  const Matrix sym = 0.5 * (a + a.transpose());
  const double norm = spectral_norm(sym);
  return min_eigenvalue(sym) >= -rel_tol * norm;
}

Matrix checked_inverse(const Matrix& m, const char* what) {
  require_square(m, what);
  if (m.rows() == 0) return Matrix(0, 0);
  Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible()) fail(ErrorCode::kSingular, what);
  return lu.inverse();
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double min_eigenvalue(const Matrix& symmetric) {
  if (symmetric.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace bmpc::linalg
