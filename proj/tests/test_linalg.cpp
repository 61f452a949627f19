#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "adfd/linalg.hpp"

using namespace adfd;

namespace {

DenseMatrix random_matrix(std::size_t m, std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  DenseMatrix a(m, n);
  for (double& v : a.data()) v = dist(gen);
  return a;
}

DenseMatrix random_symmetric(std::size_t n, unsigned seed) {
  DenseMatrix a = random_matrix(n, n, seed);
  return 0.5 * (a + a.transposed());
}

double orthonormality_defect(const DenseMatrix& q) {
  return max_abs(matmul_tn(q, q) - DenseMatrix::identity(q.cols()));
}

double reconstruction_error(const DenseMatrix& a, const SvdResult& r) {
  const DenseMatrix us = scale_cols(r.U, r.sigma);
  return frobenius_norm(matmul_nt(us, r.V) - a) / frobenius_norm(a);
}

}  // namespace

TEST(Svd, IdentityHasUnitSingularValues) {
  const SvdResult r = svd(DenseMatrix::identity(5));
  ASSERT_EQ(r.sigma.size(), 5u);
  for (double s : r.sigma) EXPECT_DOUBLE_EQ(s, 1.0);
}

TEST(Svd, DiagonalGivesSortedMagnitudes) {
  const SvdResult r = svd(DenseMatrix{{3.0, 0.0}, {0.0, -4.0}});
  ASSERT_EQ(r.sigma.size(), 2u);
  EXPECT_NEAR(r.sigma[0], 4.0, 1e-15);
  EXPECT_NEAR(r.sigma[1], 3.0, 1e-15);
}

TEST(Svd, RandomSquareReconstruction) {
  const DenseMatrix a = random_matrix(50, 50, 11);
  const SvdResult r = svd(a);
  EXPECT_LT(reconstruction_error(a, r), 1e-12);
  EXPECT_LT(orthonormality_defect(r.U), 1e-10);
  EXPECT_LT(orthonormality_defect(r.V), 1e-10);
  EXPECT_TRUE(std::is_sorted(r.sigma.rbegin(), r.sigma.rend()));
}

TEST(Svd, TallAndWideShapes) {
  for (auto [m, n] : {std::pair{40u, 13u}, std::pair{13u, 40u}, std::pair{1u, 7u}, std::pair{7u, 1u}}) {
    const DenseMatrix a = random_matrix(m, n, 100 + m + 10 * n);
    const SvdResult r = svd(a);
    const std::size_t k = std::min(m, n);
    ASSERT_EQ(r.U.rows(), m);
    ASSERT_EQ(r.U.cols(), k);
    ASSERT_EQ(r.V.rows(), n);
    ASSERT_EQ(r.V.cols(), k);
    EXPECT_LT(reconstruction_error(a, r), 1e-12) << m << "x" << n;
    EXPECT_LT(orthonormality_defect(r.U), 1e-10);
    EXPECT_LT(orthonormality_defect(r.V), 1e-10);
  }
}

TEST(Svd, RankDeficientInput) {
  // Rank 3 product; trailing singular values collapse to rounding level.
  const DenseMatrix a = matmul(random_matrix(30, 3, 5), random_matrix(3, 20, 6));
  const SvdResult r = svd(a);
  EXPECT_LT(reconstruction_error(a, r), 1e-12);
  EXPECT_LT(r.sigma[3], 1e-13 * r.sigma[0]);
  EXPECT_LT(orthonormality_defect(r.U), 1e-10);
  EXPECT_LT(orthonormality_defect(r.V), 1e-10);
}

TEST(Svd, ValuesOnlyMatchFullFactorization) {
  const DenseMatrix a = random_matrix(60, 45, 3);
  const Vector s = singular_values(a);
  const SvdResult r = svd(a);
  ASSERT_EQ(s.size(), r.sigma.size());
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s[i], r.sigma[i], 1e-13 * r.sigma[0]);
}

TEST(Svd, DeterministicBitwise) {
  const DenseMatrix a = random_matrix(35, 28, 9);
  const SvdResult r1 = svd(a);
  const SvdResult r2 = svd(a);
  EXPECT_EQ(r1.sigma, r2.sigma);
  EXPECT_EQ(r1.U, r2.U);
  EXPECT_EQ(r1.V, r2.V);
}

TEST(Svd, RejectsNonFiniteAndEmpty) {
  DenseMatrix a = random_matrix(4, 4, 1);
  a(2, 1) = std::nan("");
  EXPECT_THROW(svd(a), std::invalid_argument);
  a(2, 1) = INFINITY;
  EXPECT_THROW(singular_values(a), std::invalid_argument);
  EXPECT_THROW(svd(DenseMatrix{}), std::invalid_argument);
}

TEST(SymEig, DiagonalCase) {
  const SymEigResult r = sym_eig(DenseMatrix{{1.0, 0.0}, {0.0, 2.0}});
  EXPECT_NEAR(r.eigenvalues[0], 2.0, 1e-15);
  EXPECT_NEAR(r.eigenvalues[1], 1.0, 1e-15);
}

TEST(SymEig, ZeroMatrix) {
  const Vector ev = sym_eigenvalues(DenseMatrix(6, 6));
  for (double v : ev) EXPECT_EQ(v, 0.0);
}

TEST(SymEig, ResidualAndOrthonormality) {
  const DenseMatrix s = random_symmetric(40, 21);
  const SymEigResult r = sym_eig(s);
  EXPECT_LT(orthonormality_defect(r.eigenvectors), 1e-10);
  const DenseMatrix aq = matmul(s, r.eigenvectors);
  const DenseMatrix ql = scale_cols(r.eigenvectors, r.eigenvalues);
  EXPECT_LT(frobenius_norm(aq - ql) / frobenius_norm(s), 1e-9);
  EXPECT_TRUE(std::is_sorted(r.eigenvalues.rbegin(), r.eigenvalues.rend()));
}

TEST(SymEig, GramEigenvaluesAreSquaredSingularValues) {
  for (unsigned seed = 0; seed < 5; ++seed) {
    const DenseMatrix a = random_matrix(30, 18, 40 + seed);
    const Vector s = singular_values(a);
    const Vector ev = sym_eigenvalues(gram_cols(a));
    ASSERT_EQ(ev.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
      EXPECT_NEAR(ev[i], s[i] * s[i], 1e-9 * s[0] * s[0]);
  }
}

TEST(SymEig, WeylUpperBound) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const DenseMatrix s1 = random_symmetric(20, 200 + seed);
    const DenseMatrix s2 = random_symmetric(20, 300 + seed);
    const double lhs = sym_eigenvalues(s1 + s2).front();
    const double rhs = sym_eigenvalues(s1).front() + sym_eigenvalues(s2).front();
    EXPECT_LE(lhs, rhs + 1e-10);
  }
}

TEST(SymEig, DeterministicBitwise) {
  const DenseMatrix s = random_symmetric(25, 4);
  const SymEigResult r1 = sym_eig(s);
  const SymEigResult r2 = sym_eig(s);
  EXPECT_EQ(r1.eigenvalues, r2.eigenvalues);
  EXPECT_EQ(r1.eigenvectors, r2.eigenvectors);
}

TEST(SymEig, RejectsAsymmetricAndNonSquare) {
  EXPECT_THROW(sym_eig(DenseMatrix{{1.0, 2.0}, {0.0, 1.0}}), std::invalid_argument);
  EXPECT_THROW(sym_eig(DenseMatrix(2, 3)), std::invalid_argument);
  // Asymmetry at rounding level is accepted.
  EXPECT_NO_THROW(sym_eig(DenseMatrix{{1.0, 2.0}, {2.0 + 1e-15, 1.0}}));
}

TEST(DenseMatrixOps, ProductsAgree) {
  const DenseMatrix a = random_matrix(7, 5, 1);
  const DenseMatrix b = random_matrix(7, 4, 2);
  EXPECT_LT(max_abs(matmul_tn(a, b) - matmul(a.transposed(), b)), 1e-14);
  EXPECT_LT(max_abs(matmul_nt(b.transposed(), a.transposed()) - matmul(b.transposed(), a)), 1e-14);
  EXPECT_LT(max_abs(gram_rows(a) - matmul(a, a.transposed())), 1e-14);
  const Vector x{1.0, -2.0, 0.5, 3.0, 0.0};
  const Vector y = matvec(a, x);
  const Vector z = matvec_t(a.transposed(), x);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], z[i], 1e-14);
}

TEST(DenseMatrixOps, Norm2AvoidsUnderflow) {
  const Vector tiny{3e-200, 4e-200};
  EXPECT_NEAR(norm2(tiny) / 5e-200, 1.0, 1e-15);
}
