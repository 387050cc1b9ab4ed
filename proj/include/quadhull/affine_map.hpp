#pragma once

#include "quadhull/densela.hpp"

namespace quadhull {

/// x -> L x + t.
struct AffineMap {
  Mat L;
  Vect t;

  AffineMap() = default;
  AffineMap(Mat lin, Vect shift) : L(std::move(lin)), t(std::move(shift)) {
    if (L.rows() != t.size()) throw Error(ErrorCode::InvalidInput, "affine map: shift length mismatch");
  }

  static AffineMap identity(std::size_t n) { return {Mat::identity(n), Vect(n, 0.0)}; }

  std::size_t in_dim() const { return L.cols(); }
  std::size_t out_dim() const { return L.rows(); }

  Vect operator()(std::span<const double> x) const {
    Vect y = L * x;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += t[i];
    return y;
  }

  /// (this o inner)(x) = L (L' x + t') + t
  AffineMap after(const AffineMap& inner) const {
    if (in_dim() != inner.out_dim()) throw Error(ErrorCode::InvalidInput, "affine map: composition mismatch");
    return {L * inner.L, (*this)(inner.t)};
  }

  /// L^T c, the direction whose support over the source equals the support of c over the image minus c't.
  Vect pull_direction(std::span<const double> c) const { return mul_transpose(L, c); }

  bool is_identity(double tol = 0.0) const {
    if (L.rows() != L.cols()) return false;
    for (std::size_t i = 0; i < L.rows(); ++i) {
      if (std::abs(t[i]) > tol) return false;
      for (std::size_t j = 0; j < L.cols(); ++j)
        if (std::abs(L(i, j) - (i == j ? 1.0 : 0.0)) > tol) return false;
    }
    return true;
  }
};

}  // namespace quadhull
