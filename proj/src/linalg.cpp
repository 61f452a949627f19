#include "adfd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace adfd {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("DenseMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> diag) {
  DenseMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Vector DenseMatrix::column(std::size_t j) const {
  Vector c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix DenseMatrix::row_block(std::size_t first, std::size_t count) const {
  if (first + count > rows_) throw std::out_of_range("row_block: range exceeds matrix");
  DenseMatrix b(count, cols_);
  std::copy(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_),
            data_.begin() + static_cast<std::ptrdiff_t>((first + count) * cols_), b.data_.begin());
  return b;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_)
    throw std::invalid_argument("DenseMatrix +=: shape mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_)
    throw std::invalid_argument("DenseMatrix -=: shape mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) noexcept {
  for (double& v : data_) v *= s;
  return *this;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  DenseMatrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_tn: row counts differ");
  DenseMatrix c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* ak = a.row(k).data();
    const double* bk = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = ak[i];
      if (aki == 0.0) continue;
      double* ci = c.row(i).data();
      for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: column counts differ");
  DenseMatrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = dot(a.row(i), b.row(j));
  return c;
}

DenseMatrix gram_rows(const DenseMatrix& a) {
  DenseMatrix g(a.rows(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j <= i; ++j) g(i, j) = g(j, i) = dot(a.row(i), a.row(j));
  return g;
}

DenseMatrix gram_cols(const DenseMatrix& a) {
  DenseMatrix g = matmul_tn(a, a);
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j) g(j, i) = g(i, j);
  return g;
}

Vector matvec(const DenseMatrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

Vector matvec_t(const DenseMatrix& a, std::span<const double> x) {
  if (a.rows() != x.size()) throw std::invalid_argument("matvec_t: dimension mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    const auto r = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += r[j] * xi;
  }
  return y;
}

DenseMatrix scale_rows(DenseMatrix a, std::span<const double> d) {
  if (d.size() != a.rows()) throw std::invalid_argument("scale_rows: size mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (double& v : a.row(i)) v *= d[i];
  return a;
}

DenseMatrix scale_cols(DenseMatrix a, std::span<const double> d) {
  if (d.size() != a.cols()) throw std::invalid_argument("scale_cols: size mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) r[j] *= d[j];
  }
  return a;
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(std::span<const double> x) {
  // Scaled accumulation; plain sum of squares underflows on the tiny
  // residuals produced by truncated solves.
  double scale = 0.0;
  double ssq = 1.0;
  for (double v : x) {
    if (v == 0.0) continue;
    const double a = std::abs(v);
    if (scale < a) {
      ssq = 1.0 + ssq * (scale / a) * (scale / a);
      scale = a;
    } else {
      ssq += (a / scale) * (a / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

double frobenius_norm(const DenseMatrix& a) { return norm2(a.data()); }

double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

namespace {

void require_factorizable(const DenseMatrix& a, const char* who) {
  if (a.empty()) throw std::invalid_argument(std::string(who) + ": empty matrix");
  if (!a.all_finite()) throw std::invalid_argument(std::string(who) + ": non-finite entry");
}

// Column-major scratch matrix; the GKR sweeps work column-wise.
struct ColMajor {
  std::size_t m = 0, n = 0;
  std::vector<double> v;
  ColMajor() = default;
  ColMajor(std::size_t rows, std::size_t cols) : m(rows), n(cols), v(rows * cols, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return v[j * m + i]; }
  double* col(std::size_t j) { return v.data() + j * m; }
};

void rotate_cols(double* x, double* y, std::size_t len, double cs, double sn) {
  for (std::size_t i = 0; i < len; ++i) {
    const double t = cs * x[i] + sn * y[i];
    y[i] = -sn * x[i] + cs * y[i];
    x[i] = t;
  }
}

// Golub-Kahan-Reinsch SVD for m >= n (LINPACK dsvdc lineage). Returns the
// singular values; fills u (m x n) and v (n x n) when requested.
Vector gkr_svd(const DenseMatrix& input, bool want_vectors, ColMajor* u_out, ColMajor* v_out) {
  const std::size_t m = input.rows();
  const std::size_t n = input.cols();
  ColMajor a(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = input(i, j);

  const std::size_t nu = n;
  Vector s(std::min(m + 1, n), 0.0);
  Vector e(n, 0.0);
  Vector work(m, 0.0);
  ColMajor u, v;
  if (want_vectors) {
    u = ColMajor(m, nu);
    v = ColMajor(n, n);
  }

  // Householder bidiagonalization.
  const std::size_t nct = std::min(m - 1, n);
  const std::size_t nrt = n >= 2 ? std::min(n - 2, m) : 0;
  for (std::size_t k = 0; k < std::max(nct, nrt); ++k) {
    if (k < nct) {
      double* ak = a.col(k);
      double nrm = 0.0;
      for (std::size_t i = k; i < m; ++i) nrm = std::hypot(nrm, ak[i]);
      s[k] = nrm;
      if (s[k] != 0.0) {
        if (ak[k] < 0.0) s[k] = -s[k];
        for (std::size_t i = k; i < m; ++i) ak[i] /= s[k];
        ak[k] += 1.0;
      }
      s[k] = -s[k];
    }
    for (std::size_t j = k + 1; j < n; ++j) {
      double* aj = a.col(j);
      if (k < nct && s[k] != 0.0) {
        const double* ak = a.col(k);
        double t = 0.0;
        for (std::size_t i = k; i < m; ++i) t += ak[i] * aj[i];
        t = -t / ak[k];
        for (std::size_t i = k; i < m; ++i) aj[i] += t * ak[i];
      }
      e[j] = aj[k];
    }
    if (want_vectors && k < nct) {
      const double* ak = a.col(k);
      double* uk = u.col(k);
      for (std::size_t i = k; i < m; ++i) uk[i] = ak[i];
    }
    if (k < nrt) {
      double nrm = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) nrm = std::hypot(nrm, e[i]);
      e[k] = nrm;
      if (e[k] != 0.0) {
        if (e[k + 1] < 0.0) e[k] = -e[k];
        for (std::size_t i = k + 1; i < n; ++i) e[i] /= e[k];
        e[k + 1] += 1.0;
      }
      e[k] = -e[k];
      if (k + 1 < m && e[k] != 0.0) {
        std::fill(work.begin() + static_cast<std::ptrdiff_t>(k + 1), work.end(), 0.0);
        for (std::size_t j = k + 1; j < n; ++j) {
          const double* aj = a.col(j);
          for (std::size_t i = k + 1; i < m; ++i) work[i] += e[j] * aj[i];
        }
        for (std::size_t j = k + 1; j < n; ++j) {
          const double t = -e[j] / e[k + 1];
          double* aj = a.col(j);
          for (std::size_t i = k + 1; i < m; ++i) aj[i] += t * work[i];
        }
      }
      if (want_vectors) {
        double* vk = v.col(k);
        for (std::size_t i = k + 1; i < n; ++i) vk[i] = e[i];
      }
    }
  }

  // Final bidiagonal of order p.
  std::size_t p = std::min(n, m + 1);
  if (nct < n) s[nct] = a(nct, nct);
  if (m < p) s[p - 1] = 0.0;
  if (nrt + 1 < p) e[nrt] = a(nrt, p - 1);
  e[p - 1] = 0.0;

  if (want_vectors) {
    for (std::size_t j = nct; j < nu; ++j) {
      double* uj = u.col(j);
      std::fill(uj, uj + m, 0.0);
      uj[j] = 1.0;
    }
    for (std::size_t kk = nct; kk-- > 0;) {
      double* uk = u.col(kk);
      if (s[kk] != 0.0) {
        for (std::size_t j = kk + 1; j < nu; ++j) {
          double* uj = u.col(j);
          double t = 0.0;
          for (std::size_t i = kk; i < m; ++i) t += uk[i] * uj[i];
          t = -t / uk[kk];
          for (std::size_t i = kk; i < m; ++i) uj[i] += t * uk[i];
        }
        for (std::size_t i = kk; i < m; ++i) uk[i] = -uk[i];
        uk[kk] += 1.0;
        for (std::size_t i = 0; i < kk; ++i) uk[i] = 0.0;
      } else {
        std::fill(uk, uk + m, 0.0);
        uk[kk] = 1.0;
      }
    }
    for (std::size_t kk = n; kk-- > 0;) {
      double* vk = v.col(kk);
      if (kk < nrt && e[kk] != 0.0) {
        for (std::size_t j = kk + 1; j < nu; ++j) {
          double* vj = v.col(j);
          double t = 0.0;
          for (std::size_t i = kk + 1; i < n; ++i) t += vk[i] * vj[i];
          t = -t / vk[kk + 1];
          for (std::size_t i = kk + 1; i < n; ++i) vj[i] += t * vk[i];
        }
      }
      std::fill(vk, vk + n, 0.0);
      vk[kk] = 1.0;
    }
  }

  // Implicit-shift QR on the bidiagonal.
  const std::size_t pp = p - 1;
  const double eps = std::numeric_limits<double>::epsilon();
  const double tiny = std::ldexp(1.0, -966);
  std::size_t iter = 0;
  const std::size_t max_iter = 75 * std::max<std::size_t>(n, 10);
  while (p > 0) {
    if (iter > max_iter) throw std::runtime_error("svd: QR iteration did not converge");
    long k;
    for (k = static_cast<long>(p) - 2; k >= 0; --k) {
      if (std::abs(e[k]) <= tiny + eps * (std::abs(s[k]) + std::abs(s[k + 1]))) {
        e[k] = 0.0;
        break;
      }
    }
    int kase;
    if (k == static_cast<long>(p) - 2) {
      kase = 4;
    } else {
      long ks;
      for (ks = static_cast<long>(p) - 1; ks >= k; --ks) {
        if (ks == k) break;
        const double t = (ks != static_cast<long>(p) ? std::abs(e[ks]) : 0.0) +
                         (ks != k + 1 ? std::abs(e[ks - 1]) : 0.0);
        if (std::abs(s[ks]) <= tiny + eps * t) {
          s[ks] = 0.0;
          break;
        }
      }
      if (ks == k) {
        kase = 3;
      } else if (ks == static_cast<long>(p) - 1) {
        kase = 1;
      } else {
        kase = 2;
        k = ks;
      }
    }
    ++k;
    const std::size_t kk = static_cast<std::size_t>(k);

    switch (kase) {
      case 1: {  // deflate negligible s(p)
        double f = e[p - 2];
        e[p - 2] = 0.0;
        for (std::size_t j = p - 1; j-- > kk;) {
          double t = std::hypot(s[j], f);
          const double cs = s[j] / t;
          const double sn = f / t;
          s[j] = t;
          if (j != kk) {
            f = -sn * e[j - 1];
            e[j - 1] = cs * e[j - 1];
          }
          if (want_vectors) rotate_cols(v.col(j), v.col(p - 1), n, cs, sn);
        }
        break;
      }
      case 2: {  // split at negligible s(k)
        double f = e[kk - 1];
        e[kk - 1] = 0.0;
        for (std::size_t j = kk; j < p; ++j) {
          double t = std::hypot(s[j], f);
          const double cs = s[j] / t;
          const double sn = f / t;
          s[j] = t;
          f = -sn * e[j];
          e[j] = cs * e[j];
          if (want_vectors) rotate_cols(u.col(j), u.col(kk - 1), m, cs, sn);
        }
        break;
      }
      case 3: {  // one QR step
        const double scale =
            std::max({std::abs(s[p - 1]), std::abs(s[p - 2]), std::abs(e[p - 2]),
                      std::abs(s[kk]), std::abs(e[kk])});
        const double sp = s[p - 1] / scale;
        const double spm1 = s[p - 2] / scale;
        const double epm1 = e[p - 2] / scale;
        const double sk = s[kk] / scale;
        const double ek = e[kk] / scale;
        const double b = ((spm1 + sp) * (spm1 - sp) + epm1 * epm1) / 2.0;
        const double c = (sp * epm1) * (sp * epm1);
        double shift = 0.0;
        if (b != 0.0 || c != 0.0) {
          shift = std::sqrt(b * b + c);
          if (b < 0.0) shift = -shift;
          shift = c / (b + shift);
        }
        double f = (sk + sp) * (sk - sp) + shift;
        double g = sk * ek;
        for (std::size_t j = kk; j + 1 < p; ++j) {
          double t = std::hypot(f, g);
          double cs = f / t;
          double sn = g / t;
          if (j != kk) e[j - 1] = t;
          f = cs * s[j] + sn * e[j];
          e[j] = cs * e[j] - sn * s[j];
          g = sn * s[j + 1];
          s[j + 1] = cs * s[j + 1];
          if (want_vectors) rotate_cols(v.col(j), v.col(j + 1), n, cs, sn);
          t = std::hypot(f, g);
          cs = f / t;
          sn = g / t;
          s[j] = t;
          f = cs * e[j] + sn * s[j + 1];
          s[j + 1] = -sn * e[j] + cs * s[j + 1];
          g = sn * e[j + 1];
          e[j + 1] = cs * e[j + 1];
          if (want_vectors && j + 1 < m) rotate_cols(u.col(j), u.col(j + 1), m, cs, sn);
        }
        e[p - 2] = f;
        ++iter;
        break;
      }
      default: {  // convergence of s(k)
        std::size_t q = kk;
        if (s[q] <= 0.0) {
          s[q] = s[q] < 0.0 ? -s[q] : 0.0;
          if (want_vectors) {
            double* vq = v.col(q);
            for (std::size_t i = 0; i <= pp; ++i) vq[i] = -vq[i];
          }
        }
        while (q < pp) {
          if (s[q] >= s[q + 1]) break;
          std::swap(s[q], s[q + 1]);
          if (want_vectors) {
            if (q < n - 1) std::swap_ranges(v.col(q), v.col(q) + n, v.col(q + 1));
            if (q < m - 1) std::swap_ranges(u.col(q), u.col(q) + m, u.col(q + 1));
          }
          ++q;
        }
        iter = 0;
        --p;
        break;
      }
    }
  }

  s.resize(std::min(m, n));
  if (want_vectors) {
    *u_out = std::move(u);
    *v_out = std::move(v);
  }
  return s;
}

DenseMatrix to_dense(ColMajor& c) {
  DenseMatrix d(c.m, c.n);
  for (std::size_t j = 0; j < c.n; ++j)
    for (std::size_t i = 0; i < c.m; ++i) d(i, j) = c(i, j);
  return d;
}

}  // namespace

SvdResult svd(const DenseMatrix& a) {
  require_factorizable(a, "svd");
  ColMajor u, v;
  if (a.rows() >= a.cols()) {
    Vector s = gkr_svd(a, true, &u, &v);
    return {to_dense(u), std::move(s), to_dense(v)};
  }
  // Wide input: factor the transpose and swap the roles of U and V.
  Vector s = gkr_svd(a.transposed(), true, &u, &v);
  return {to_dense(v), std::move(s), to_dense(u)};
}

Vector singular_values(const DenseMatrix& a) {
  require_factorizable(a, "singular_values");
  if (a.rows() >= a.cols()) return gkr_svd(a, false, nullptr, nullptr);
  return gkr_svd(a.transposed(), false, nullptr, nullptr);
}

namespace {

void require_symmetric(const DenseMatrix& s) {
  require_factorizable(s, "sym_eig");
  if (s.rows() != s.cols()) throw std::invalid_argument("sym_eig: matrix is not square");
  const double tol = 1e-12 * max_abs(s);
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(s(i, j) - s(j, i)) > tol)
        throw std::invalid_argument("sym_eig: matrix is not symmetric");
}

// Householder reduction to tridiagonal form (EISPACK tred2). On exit d holds
// the diagonal, e the subdiagonal in e[1..n-1], and z the accumulated
// orthogonal transform.
void tred2(ColMajor& z, Vector& d, Vector& e) {
  const std::size_t n = z.n;
  for (std::size_t j = 0; j < n; ++j) d[j] = z(n - 1, j);

  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = z(i - 1, j);
        z(i, j) = 0.0;
        z(j, i) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;

      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        z(j, i) = f;
        g = e[j] + z(j, j) * f;
        for (std::size_t k = j + 1; k <= i - 1; ++k) {
          g += z(k, j) * d[k];
          e[k] += z(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        double* zj = z.col(j);
        for (std::size_t k = j; k <= i - 1; ++k) zj[k] -= (f * e[k] + g * d[k]);
        d[j] = z(i - 1, j);
        z(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    z(n - 1, i) = z(i, i);
    z(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = z(k, i + 1) / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double g = 0.0;
        double* zj = z.col(j);
        const double* zi1 = z.col(i + 1);
        for (std::size_t k = 0; k <= i; ++k) g += zi1[k] * zj[k];
        for (std::size_t k = 0; k <= i; ++k) zj[k] -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) z(k, i + 1) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = z(n - 1, j);
    z(n - 1, j) = 0.0;
  }
  z(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// Implicit QL on the symmetric tridiagonal (EISPACK tql2). Eigenvalues land
// in d; z is updated only when want_vectors is set.
void tql2(ColMajor& z, Vector& d, Vector& e, bool want_vectors) {
  const std::size_t n = d.size();
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m == n) m = n - 1;

    if (m > l) {
      int iter = 0;
      do {
        if (++iter > 100) throw std::runtime_error("sym_eig: QL iteration did not converge");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0;
        double c2 = c;
        double c3 = c;
        const double el1 = e[l + 1];
        double s = 0.0;
        double s2 = 0.0;
        for (std::size_t i = m; i-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          if (want_vectors) {
            double* zi = z.col(i);
            double* zi1 = z.col(i + 1);
            for (std::size_t k = 0; k < n; ++k) {
              h = zi1[k];
              zi1[k] = s * zi[k] + c * h;
              zi[k] = c * zi[k] - s * h;
            }
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] = d[l] + f;
    e[l] = 0.0;
  }
}

SymEigResult sym_eig_impl(const DenseMatrix& s, bool want_vectors) {
  require_symmetric(s);
  const std::size_t n = s.rows();
  ColMajor z(n, n);
  // Use the lower triangle mirrored so tiny asymmetries cannot leak in.
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) z(i, j) = i >= j ? s(i, j) : s(j, i);
  Vector d(n), e(n);
  tred2(z, d, e);
  tql2(z, d, e, want_vectors);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return d[x] > d[y]; });

  SymEigResult out;
  out.eigenvalues.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.eigenvalues[k] = d[order[k]];
  if (want_vectors) {
    out.eigenvectors = DenseMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
      const double* col = z.col(order[k]);
      for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = col[i];
    }
  }
  return out;
}

}  // namespace

SymEigResult sym_eig(const DenseMatrix& s) { return sym_eig_impl(s, true); }

Vector sym_eigenvalues(const DenseMatrix& s) { return sym_eig_impl(s, false).eigenvalues; }

}  // namespace adfd
