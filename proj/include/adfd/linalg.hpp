#pragma once

// Dense real linear algebra in double precision.
//
// Everything here is a pure function of its inputs. The factorizations are
// the classical Golub-Kahan-Reinsch SVD and the Householder tridiagonal +
// implicit QL symmetric eigensolver, both run single-threaded so repeated
// calls on identical input give bitwise-identical output.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace adfd {

using Vector = std::vector<double>;

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  Vector column(std::size_t j) const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  DenseMatrix transposed() const;
  bool all_finite() const noexcept;

  /// Rows [first, first + count) as a new matrix.
  DenseMatrix row_block(std::size_t first, std::size_t count) const;

  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator-=(const DenseMatrix& other);
  DenseMatrix& operator*=(double s) noexcept;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double s, DenseMatrix a);

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// a^T b without forming the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// a b^T without forming the transpose.
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
/// a a^T, exactly symmetric.
DenseMatrix gram_rows(const DenseMatrix& a);
/// a^T a, exactly symmetric.
DenseMatrix gram_cols(const DenseMatrix& a);

Vector matvec(const DenseMatrix& a, std::span<const double> x);
Vector matvec_t(const DenseMatrix& a, std::span<const double> x);

/// Scale row i by d[i].
DenseMatrix scale_rows(DenseMatrix a, std::span<const double> d);
/// Scale column j by d[j].
DenseMatrix scale_cols(DenseMatrix a, std::span<const double> d);

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
double frobenius_norm(const DenseMatrix& a);
double max_abs(const DenseMatrix& a);

struct SvdResult {
  DenseMatrix U;       // m x k, k = min(m, n)
  Vector sigma;        // descending, non-negative
  DenseMatrix V;       // n x k
};

struct SymEigResult {
  Vector eigenvalues;       // descending
  DenseMatrix eigenvectors; // column i pairs with eigenvalues[i]
};

/// Thin SVD A = U diag(sigma) V^T. Throws std::invalid_argument on empty or
/// non-finite input, std::runtime_error if the QR sweep fails to converge.
SvdResult svd(const DenseMatrix& a);

/// Singular values only; same algorithm as svd() without accumulating U, V.
Vector singular_values(const DenseMatrix& a);

/// Symmetric eigendecomposition. The input must be square and symmetric
/// to within 1e-12 * max|S|.
SymEigResult sym_eig(const DenseMatrix& s);

Vector sym_eigenvalues(const DenseMatrix& s);

}  // namespace adfd
