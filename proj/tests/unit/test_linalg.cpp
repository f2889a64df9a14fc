#include <cmath>

#include "../support.hpp"
#include "bmpc/active_set.hpp"
#include "bmpc/error.hpp"
#include "bmpc/linalg.hpp"
#include "doctest.h"

using namespace bmpc;
using bmpc::test::random_matrix;
using bmpc::test::random_psd;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

// Cofactor expansion along the first row, independent of any factorisation.
double laplace_det(const Matrix& m) {
  const Eigen::Index n = m.rows();
  if (n == 0) return 1.0;
  if (n == 1) return m(0, 0);
  double det = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    Matrix minor(n - 1, n - 1);
    for (Eigen::Index r = 1; r < n; ++r)
      for (Eigen::Index c = 0, cc = 0; c < n; ++c)
        if (c != j) minor(r - 1, cc++) = m(r, c);
    det += ((j % 2) ? -1.0 : 1.0) * m(0, j) * laplace_det(minor);
  }
  return det;
}

}  // namespace

TEST_SUITE("active_set") {
  TEST_CASE("string and mask round trips") {
    const auto s = ActiveSet::from_string("10110");
    CHECK(s.size() == 5);
    CHECK(s.count() == 3);
    CHECK(s.indices() == std::vector<int>{0, 2, 3});
    CHECK(s.to_string() == "10110");
    CHECK(ActiveSet::from_mask(0b01101, 5) == s);
    CHECK(ActiveSet::from_indices({0, 2, 3}, 5) == s);
    CHECK(ActiveSet::all(70).count() == 70);
  }

  TEST_CASE("ordering and hashing distinguish sets") {
    const auto a = ActiveSet::from_string("100");
    const auto b = ActiveSet::from_string("010");
    CHECK(a != b);
    CHECK((a < b) != (b < a));
    CHECK(ActiveSetHash{}(a) == ActiveSetHash{}(ActiveSet::from_string("100")));
  }

  TEST_CASE("bad input is rejected") {
    CHECK_THROWS_AS(ActiveSet::from_string("10x"), Error);
    CHECK_THROWS_AS(ActiveSet::from_indices({3}, 3), Error);
  }
}

TEST_SUITE("linalg") {
  TEST_CASE("adjugate closed forms") {
    CHECK(linalg::adjugate(mat({{1, 2}, {3, 4}})).isApprox(mat({{4, -2}, {-3, 1}})));
    CHECK(linalg::adjugate(Matrix::Identity(4, 4)).isApprox(Matrix::Identity(4, 4)));
    const Matrix singular = mat({{1, 1}, {1, 1}});
    const Matrix adj = linalg::adjugate(singular);
    CHECK(adj.isApprox(mat({{1, -1}, {-1, 1}})));
    CHECK((adj * singular).norm() == doctest::Approx(0.0));
    CHECK(linalg::adjugate(mat({{7}})).isApprox(mat({{1}})));
  }

  TEST_CASE("adjugate identity on random and singular matrices") {
    Rng rng(1, 1);
    for (int k = 0; k < 200; ++k) {
      const auto n = 1 + static_cast<Eigen::Index>(rng.uniform() * 8);
      Matrix m = random_matrix(rng, n, n);
      if (k % 3 == 0 && n > 2) m.col(2) = m.col(0) - m.col(1);
      const double det = laplace_det(m);
      const Matrix err = linalg::adjugate(m) * m - det * Matrix::Identity(n, n);
      CHECK(err.cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + std::abs(det)));
    }
  }

  TEST_CASE("determinant matches cofactor expansion") {
    Rng rng(2, 1);
    for (int k = 0; k < 50; ++k) {
      const auto n = 1 + static_cast<Eigen::Index>(rng.uniform() * 6);
      const Matrix m = random_matrix(rng, n, n);
      CHECK(linalg::determinant(m) == doctest::Approx(laplace_det(m)).epsilon(1e-10));
    }
    CHECK(linalg::determinant(Matrix(0, 0)) == 1.0);
  }

  TEST_CASE("principal submatrix selection") {
    const Matrix m = mat({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
    CHECK(linalg::principal_submatrix(m, ActiveSet::all(3)) == m);
    const Matrix empty = linalg::principal_submatrix(m, ActiveSet(3));
    CHECK(empty.rows() == 0);
    CHECK(linalg::determinant(empty) == 1.0);
    CHECK(linalg::principal_submatrix(m, ActiveSet::from_string("101")) == mat({{1, 3}, {7, 9}}));
  }

  TEST_CASE("padded inverse") {
    const Matrix d = mat({{2, 0}, {0, 5}});
    CHECK(linalg::padded_inverse(d, ActiveSet::from_string("10")).isApprox(mat({{0.5, 0}, {0, 0}})));
    CHECK(linalg::padded_inverse(d, ActiveSet(2)).isZero());
    CHECK(linalg::padded_inverse(d, ActiveSet::all(2)).isApprox(d.inverse()));
  }

  TEST_CASE("det(A + Diag(lambda)) examples") {
    CHECK(linalg::det_plus_diagonal(Matrix::Zero(3, 3), Vector::Constant(3, 2.0)) == doctest::Approx(8.0));
    const Vector lam{{2.0, 3.0}};
    CHECK(linalg::det_plus_diagonal(mat({{1, 1}, {1, 1}}), lam) == doctest::Approx(11.0));
    CHECK(laplace_det(mat({{3, 1}, {1, 4}})) == doctest::Approx(11.0));
    const Matrix a = mat({{2, 1}, {1, 3}});
    CHECK(linalg::det_plus_diagonal(a, Vector::Constant(2, 1e-12)) == doctest::Approx(5.0).epsilon(1e-9));
  }

  TEST_CASE("det(A + Diag(lambda)) on random PSD instances") {
    Rng rng(3, 1);
    for (int k = 0; k < 200; ++k) {
      const auto n = 1 + static_cast<Eigen::Index>(rng.uniform() * 10);
      const Matrix a = random_psd(rng, n);
      Vector lam(n);
      for (Eigen::Index i = 0; i < n; ++i) lam(i) = rng.uniform(0.05, 2.0);
      const double direct = (a + Matrix(lam.asDiagonal())).fullPivLu().determinant();
      CHECK(std::abs(linalg::det_plus_diagonal(a, lam) - direct) <= 1e-9 * std::abs(direct));
    }
  }

  TEST_CASE("inverse decomposition examples") {
    const auto zero = linalg::decompose_inverse_plus_diagonal(Matrix::Zero(2, 2), Vector{{2.0, 3.0}});
    CHECK(zero.reconstruct().isApprox(mat({{0.5, 0}, {0, 1.0 / 3.0}})));
    double nonzero_weight = 0.0;
    for (const auto& t : zero.terms) nonzero_weight += t.sigma.empty() ? t.weight : 0.0;
    CHECK(nonzero_weight == doctest::Approx(1.0));

    const Matrix target = mat({{3, 1}, {1, 4}}).inverse();
    const auto ones = linalg::decompose_inverse_plus_diagonal(mat({{1, 1}, {1, 1}}), Vector{{2.0, 3.0}});
    CHECK((ones.reconstruct() - target).cwiseAbs().maxCoeff() <= 1e-12);

    const auto diag = linalg::decompose_inverse_plus_diagonal(mat({{4, 0}, {0, 0}}), Vector{{1.0, 1.0}});
    CHECK(diag.reconstruct().isApprox(mat({{0.2, 0}, {0, 1}})));
    CHECK(diag.h == doctest::Approx(5.0));
    for (const auto& t : diag.terms) {
      if (t.sigma.to_string() == "10") CHECK(t.h_sigma == doctest::Approx(4.0));
      if (t.sigma.to_string() == "00") CHECK(t.h_sigma == doctest::Approx(1.0));
      if (t.sigma.to_string() == "01") CHECK(t.h_sigma == doctest::Approx(0.0));
    }
  }

  TEST_CASE("inverse decomposition on random PSD instances") {
    Rng rng(4, 1);
    for (int k = 0; k < 100; ++k) {
      const auto n = 1 + static_cast<Eigen::Index>(rng.uniform() * 8);
      const Matrix a = random_psd(rng, n);
      Vector lam(n);
      for (Eigen::Index i = 0; i < n; ++i) lam(i) = rng.uniform(0.05, 2.0);
      const Matrix direct = (a + Matrix(lam.asDiagonal())).inverse();
      const auto dec = linalg::decompose_inverse_plus_diagonal(a, lam);
      CHECK((dec.reconstruct() - direct).norm() <= 1e-9 * direct.norm());
    }
  }

  TEST_CASE("subset expansions refuse large dimensions") {
    CHECK_THROWS_AS(linalg::det_plus_diagonal(Matrix::Identity(13, 13), Vector::Ones(13)), Error);
  }

  TEST_CASE("Woodbury identity") {
    const Matrix a = Matrix::Identity(2, 2);
    CHECK(linalg::woodbury_inverse(a, Matrix::Zero(2, 1), mat({{1}}), Matrix::Zero(1, 2)).isApprox(a));
    const Matrix e1 = mat({{1}, {0}});
    CHECK(linalg::woodbury_inverse(a, e1, mat({{1}}), e1.transpose()).isApprox(mat({{0.5, 0}, {0, 1}})));
    Rng rng(5, 1);
    const Matrix b = random_matrix(rng, 5, 5);
    const Matrix a5 = b * b.transpose() + 5.0 * Matrix::Identity(5, 5);
    const Matrix u = random_matrix(rng, 5, 2), v = random_matrix(rng, 2, 5);
    const Matrix c = mat({{2, 0.3}, {0.1, 1.5}});
    const Matrix direct = (a5 + u * c * v).inverse();
    CHECK((linalg::woodbury_inverse(a5, u, c, v) - direct).norm() <= 1e-10 * direct.norm());
  }

  TEST_CASE("PSD and symmetry predicates") {
    CHECK(linalg::is_psd(mat({{1, 1}, {1, 1}})));
    CHECK_FALSE(linalg::is_psd(mat({{1, 2}, {2, 1}})));
    CHECK(linalg::is_symmetric(mat({{1, 2}, {2, 1}})));
    CHECK_FALSE(linalg::is_symmetric(mat({{1, 2}, {0, 1}})));
    CHECK(linalg::psd_submatrix_is_singular(mat({{1, 1}, {1, 1}})));
    CHECK_FALSE(linalg::psd_submatrix_is_singular(mat({{2, 1}, {1, 2}})));
  }
}
