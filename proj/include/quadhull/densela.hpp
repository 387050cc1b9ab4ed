/**
 * @file densela.hpp
 * @brief Small dense real linear algebra: matrices, symmetric eigensolver
 * (cyclic Jacobi), rank-revealing elimination and LU solves.
 *
 * Everything here works on row-major dense storage and is sized for the
 * matrices that show up in quadric reduction (up to a few dozen rows).
 */
#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "quadhull/config.hpp"

namespace quadhull {

using Vect = std::vector<double>;

class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Mat(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_) throw Error(ErrorCode::InvalidInput, "ragged matrix literal");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Mat diag(std::span<const double> d) {
    Mat m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  Vect col(std::size_t j) const {
    Vect c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  void append_row(std::span<const double> r) {
    if (rows_ == 0 && data_.empty()) cols_ = r.size();
    if (r.size() != cols_) throw Error(ErrorCode::InvalidInput, "row length mismatch");
    data_.insert(data_.end(), r.begin(), r.end());
    ++rows_;
  }

  const std::vector<double>& data() const noexcept { return data_; }

  Mat transpose() const {
    Mat t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  double frobenius() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Vector and matrix helpers

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline Vect operator*(const Mat& m, std::span<const double> x) {
  assert(m.cols() == x.size());
  Vect y(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) y[i] = dot(m.row(i), x);
  return y;
}

inline Vect operator*(const Mat& m, const Vect& x) { return m * std::span<const double>(x); }

/// m^T x without forming the transpose.
inline Vect mul_transpose(const Mat& m, std::span<const double> x) {
  assert(m.rows() == x.size());
  Vect y(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (x[i] == 0.0) continue;
    auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) y[j] += r[j] * x[i];
  }
  return y;
}

inline Mat operator*(const Mat& a, const Mat& b) {
  assert(a.cols() == b.rows());
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline Mat operator+(const Mat& a, const Mat& b) {
  assert(a.rows() == b.rows() && a.cols() == b.cols());
  Mat c = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) += b(i, j);
  return c;
}

inline Vect operator+(const Vect& a, const Vect& b) {
  assert(a.size() == b.size());
  Vect c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
  return c;
}

inline Vect operator-(const Vect& a, const Vect& b) {
  assert(a.size() == b.size());
  Vect c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
  return c;
}

inline Vect operator*(double s, const Vect& a) {
  Vect c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = s * a[i];
  return c;
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

/// x^T Q x for square Q.
inline double quad_form(const Mat& q, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.rows(); ++i) s += x[i] * dot(q.row(i), x);
  return s;
}

inline Mat symmetrized(const Mat& q) {
  if (q.rows() != q.cols()) throw Error(ErrorCode::InvalidInput, "matrix must be square");
  Mat s(q.rows(), q.cols());
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t j = 0; j < q.cols(); ++j) s(i, j) = 0.5 * (q(i, j) + q(j, i));
  return s;
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition

/// m = basis^T * diag(values) * basis; the rows of `basis` are orthonormal
/// eigenvectors, ordered by descending eigenvalue.
struct SymEigen {
  Vect values;
  Mat basis;
};

/// Cyclic Jacobi rotations. Stops once the off-diagonal Frobenius norm drops
/// below 1e-12 * ||m||_F.
inline SymEigen sym_eigen(const Mat& m, double tol = 1e-9) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw Error(ErrorCode::InvalidInput, "sym_eigen: matrix is not square");
  if (!m.all_finite()) throw Error(ErrorCode::InvalidInput, "sym_eigen: non-finite entry");
  const double scale = std::max(1.0, m.max_abs());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > tol * scale)
        throw Error(ErrorCode::InvalidInput, "sym_eigen: matrix is not symmetric");

  Mat a = symmetrized(m);
  Mat v = Mat::identity(n);  // columns accumulate eigenvectors
  const double target = 1e-12 * a.frobenius();

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100 && off_norm() > target; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SymEigen out;
  out.values.resize(n);
  out.basis = Mat(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.basis(k, i) = v(i, order[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rank-revealing elimination

/// Solution set of M x = f as x_B = C x_N + h. `consistent` is false when
/// elimination produces a row 0 = nonzero.
struct RowReduction {
  bool consistent = true;
  std::size_t rank = 0;
  std::vector<std::size_t> basic;     ///< pivot columns, in pivot order
  std::vector<std::size_t> nonbasic;  ///< remaining columns, ascending
  Mat C;                              ///< rank x |nonbasic|
  Vect h;                             ///< rank
};

/// Gauss-Jordan elimination with complete pivoting (largest remaining
/// absolute entry). Entries with magnitude below tol count as zero.
inline RowReduction row_reduce(const Mat& m, std::span<const double> rhs, double tol = 1e-10) {
  if (m.rows() != rhs.size()) throw Error(ErrorCode::InvalidInput, "row_reduce: dimension mismatch");
  const std::size_t rows = m.rows(), cols = m.cols();
  Mat a = m;
  Vect f(rhs.begin(), rhs.end());
  const double scale = std::max(1.0, m.max_abs());
  std::vector<bool> used_col(cols, false);
  std::vector<std::size_t> pivot_cols;

  std::size_t r = 0;
  for (; r < rows; ++r) {
    double best = 0.0;
    std::size_t bi = r, bj = 0;
    for (std::size_t i = r; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        if (!used_col[j] && std::abs(a(i, j)) > best) {
          best = std::abs(a(i, j));
          bi = i;
          bj = j;
        }
    if (best <= tol * scale) break;
    if (bi != r) {
      for (std::size_t j = 0; j < cols; ++j) std::swap(a(r, j), a(bi, j));
      std::swap(f[r], f[bi]);
    }
    const double piv = a(r, bj);
    for (std::size_t j = 0; j < cols; ++j) a(r, j) /= piv;
    f[r] /= piv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r) continue;
      const double factor = a(i, bj);
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j < cols; ++j) a(i, j) -= factor * a(r, j);
      f[i] -= factor * f[r];
    }
    used_col[bj] = true;
    pivot_cols.push_back(bj);
  }

  RowReduction out;
  out.rank = r;
  out.basic = pivot_cols;
  const double fscale = std::max(1.0, norm_inf(rhs));
  for (std::size_t i = r; i < rows; ++i)
    if (std::abs(f[i]) > std::sqrt(tol) * fscale) out.consistent = false;
  for (std::size_t j = 0; j < cols; ++j)
    if (!used_col[j]) out.nonbasic.push_back(j);
  out.C = Mat(r, out.nonbasic.size());
  out.h = Vect(r);
  for (std::size_t i = 0; i < r; ++i) {
    out.h[i] = f[i];
    for (std::size_t k = 0; k < out.nonbasic.size(); ++k) out.C(i, k) = -a(i, out.nonbasic[k]);
  }
  return out;
}

inline std::size_t rank(const Mat& m, double tol = 1e-10) {
  return row_reduce(m, Vect(m.rows(), 0.0), tol).rank;
}

// ---------------------------------------------------------------------------
// Square solves

/// LU factorization with partial pivoting. Throws NumericFailure when the
/// matrix is singular to working precision.
class LU {
 public:
  explicit LU(Mat a) : lu_(std::move(a)), perm_(lu_.rows()) {
    const std::size_t n = lu_.rows();
    if (lu_.cols() != n) throw Error(ErrorCode::InvalidInput, "LU: matrix is not square");
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    const double scale = std::max(1e-300, lu_.max_abs());
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t p = k;
      for (std::size_t i = k + 1; i < n; ++i)
        if (std::abs(lu_(i, k)) > std::abs(lu_(p, k))) p = i;
      if (std::abs(lu_(p, k)) <= 1e-14 * scale) throw Error(ErrorCode::NumericFailure, "LU: singular matrix");
      if (p != k) {
        for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
        std::swap(perm_[k], perm_[p]);
        sign_ = -sign_;
      }
      for (std::size_t i = k + 1; i < n; ++i) {
        const double f = lu_(i, k) / lu_(k, k);
        lu_(i, k) = f;
        if (f == 0.0) continue;
        for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
      }
    }
  }

  Vect solve(std::span<const double> b) const {
    const std::size_t n = lu_.rows();
    Vect x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t j = i + 1; j < n; ++j) x[i] -= lu_(i, j) * x[j];
      x[i] /= lu_(i, i);
    }
    return x;
  }

  double determinant() const {
    double d = sign_;
    for (std::size_t i = 0; i < lu_.rows(); ++i) d *= lu_(i, i);
    return d;
  }

 private:
  Mat lu_;
  std::vector<std::size_t> perm_;
  double sign_ = 1.0;
};

inline Mat inverse(const Mat& a) {
  LU lu(a);
  const std::size_t n = a.rows();
  Mat inv(n, n);
  Vect e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    Vect c = lu.solve(e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = c[i];
  }
  return inv;
}

/// Orthonormal basis (as rows) of the orthogonal complement of the given
/// unit vector, by Gram-Schmidt over the standard basis.
inline Mat orthogonal_complement(std::span<const double> unit) {
  const std::size_t n = unit.size();
  Mat basis(0, n);
  std::vector<Vect> rows{Vect(unit.begin(), unit.end())};
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return std::abs(unit[i]) < std::abs(unit[j]); });
  for (std::size_t k : order) {
    if (rows.size() == n) break;
    Vect e(n, 0.0);
    e[k] = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (const Vect& r : rows) {
        const double c = dot(e, r);
        for (std::size_t i = 0; i < n; ++i) e[i] -= c * r[i];
      }
    const double nrm = norm2(e);
    if (nrm < 1e-8) continue;
    for (double& v : e) v /= nrm;
    rows.push_back(e);
    basis.append_row(e);
  }
  return basis;
}

}  // namespace quadhull
