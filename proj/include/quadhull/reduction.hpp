/**
 * @file reduction.hpp
 * @brief Quadratic instances, affine substitution, the reduction to a
 * full-dimensional polytope and the canonical form
 *   sum w_i^2 - sum x_j^2 + sum y_k = g,   g >= 0.
 */
#pragma once

#include <array>
#include <string>

#include "quadhull/polytope.hpp"

namespace quadhull {

/// S = {x : x'Qx + alpha'x = g, A x <= b}
struct QuadInstance {
  Mat Q;
  Vect alpha;
  double g = 0.0;
  HPolytope P;
  Tolerances tol;
  std::string name;

  QuadInstance() = default;
  QuadInstance(Mat q, Vect a, double rhs, HPolytope poly, Tolerances t = {})
      : Q(symmetrized(q)), alpha(std::move(a)), g(rhs), P(std::move(poly)), tol(t) {
    const std::size_t n = P.dim();
    if (Q.rows() != n || Q.cols() != n || alpha.size() != n)
      throw Error(ErrorCode::InvalidInput, "instance: Q, alpha and A disagree on the dimension");
    if (!Q.all_finite() || !all_finite(alpha) || !std::isfinite(g))
      throw Error(ErrorCode::InvalidInput, "instance: non-finite data");
  }

  std::size_t dim() const { return P.dim(); }
  double value(std::span<const double> x) const { return quad_form(Q, x) + dot(alpha, x); }
  double residual(std::span<const double> x) const { return value(x) - g; }
  double data_scale() const { return std::max({Q.max_abs(), norm_inf(alpha), std::abs(g)}); }
};

/// The instance seen through x = L z + t.
inline QuadInstance substitute(const QuadInstance& inst, const AffineMap& f) {
  const Mat LT = f.L.transpose();
  Mat Qt = LT * inst.Q * f.L;
  Vect qt = inst.Q * f.t;
  Vect at = LT * inst.alpha;
  Vect lq = LT * qt;
  for (std::size_t i = 0; i < at.size(); ++i) at[i] += 2.0 * lq[i];
  const double gt = inst.g - dot(f.t, qt) - dot(inst.alpha, f.t);
  QuadInstance out(Qt, at, gt, inst.P.pullback(f), inst.tol);
  out.name = inst.name;
  return out;
}

struct Embedded {
  QuadInstance inst;
  AffineMap embed;  ///< reduced coordinates -> input coordinates
  bool reduced = false;
};

inline Embedded drop_to_fulldim(const QuadInstance& inst) {
  AffineHull hull = affine_hull(inst.P, inst.tol);
  if (hull.full_dim) return {inst, AffineMap::identity(inst.dim()), false};
  QuadInstance sub = substitute(inst, hull.embed);
  sub.P = hull.reduced;
  return {sub, hull.embed, true};
}

// ---------------------------------------------------------------------------
// Canonical form

struct CanonicalSet {
  std::size_t n_qp = 0, n_qm = 0, n_l = 0, n_o = 0;
  double g = 0.0;
  HPolytope P;           ///< over (w, x, y, z)
  AffineMap to_original; ///< canonical -> input coordinates
  AffineMap from_original;
  bool flipped = false;
  bool aggregated = false;
  Tolerances tol;

  std::size_t dim() const { return n_qp + n_qm + n_l + n_o; }
  std::array<std::size_t, 4> counts() const { return {n_qp, n_qm, n_l, n_o}; }

  double residual(std::span<const double> v) const {
    double s = -g;
    for (std::size_t i = 0; i < n_qp; ++i) s += v[i] * v[i];
    for (std::size_t i = n_qp; i < n_qp + n_qm; ++i) s -= v[i] * v[i];
    for (std::size_t i = n_qp + n_qm; i < n_qp + n_qm + n_l; ++i) s += v[i];
    return s;
  }

  /// The canonical equation as a plain instance over P.
  QuadInstance as_instance() const {
    const std::size_t n = dim();
    Mat Q(n, n);
    Vect a(n, 0.0);
    for (std::size_t i = 0; i < n_qp; ++i) Q(i, i) = 1.0;
    for (std::size_t i = n_qp; i < n_qp + n_qm; ++i) Q(i, i) = -1.0;
    for (std::size_t i = n_qp + n_qm; i < n_qp + n_qm + n_l; ++i) a[i] = 1.0;
    return QuadInstance(Q, a, g, P, tol);
  }
};

/// Rotation by the eigenbasis of Q, square completion, scaling, block
/// ordering (w by descending eigenvalue, x by descending |eigenvalue|) and
/// the sign flip that makes g >= 0. With `aggregate_linear` the linear block
/// is rotated into a single coordinate.
inline CanonicalSet canonicalize(const QuadInstance& inst, bool aggregate_linear = false) {
  const std::size_t n = inst.dim();
  const Tolerances& tol = inst.tol;
  SymEigen eig = sym_eigen(inst.Q, tol.eig_tol);
  double sig_max = 0.0;
  for (double s : eig.values) sig_max = std::max(sig_max, std::abs(s));
  const double eig_zero = tol.eig_tol * std::max(1.0, sig_max);

  Vect beta = eig.basis * inst.alpha;  // linear coefficients in eigen coordinates
  std::vector<std::size_t> pos, neg, zero;
  for (std::size_t i = 0; i < n; ++i) {
    if (eig.values[i] > eig_zero) pos.push_back(i);
    else if (eig.values[i] < -eig_zero) neg.push_back(i);
    else zero.push_back(i);
  }
  std::reverse(neg.begin(), neg.end());

  double g = inst.g;
  for (std::size_t i : pos) g += beta[i] * beta[i] / (4.0 * eig.values[i]);
  for (std::size_t i : neg) g += beta[i] * beta[i] / (4.0 * eig.values[i]);

  const double lin_zero = tol.lin_tol * std::max(1.0, norm_inf(beta));
  std::vector<std::size_t> lin, absent;
  for (std::size_t i : zero) (std::abs(beta[i]) >= lin_zero ? lin : absent).push_back(i);

  const double scale = 1.0 + inst.data_scale();
  const bool flip = g < 0.0 && std::abs(g) > tol.g_snap * scale;
  const double sgn = flip ? -1.0 : 1.0;

  // forward map v = T x + s over the input coordinates
  Mat T(0, n);
  Vect s;
  auto square_row = [&](std::size_t i) {
    const double r = std::sqrt(std::abs(eig.values[i]));
    Vect row(eig.basis.row(i).begin(), eig.basis.row(i).end());
    for (double& v : row) v *= r;
    T.append_row(row);
    s.push_back(r * beta[i] / (2.0 * eig.values[i]));
  };
  CanonicalSet out;
  out.tol = tol;
  out.flipped = flip;
  const auto& first = flip ? neg : pos;
  const auto& second = flip ? pos : neg;
  for (std::size_t i : first) square_row(i);
  for (std::size_t i : second) square_row(i);
  out.n_qp = first.size();
  out.n_qm = second.size();

  if (aggregate_linear && !lin.empty()) {
    // y = sgn * beta_Z' u_Z, the rest of the zero eigenspace becomes absent coordinates
    Vect bz(zero.size());
    for (std::size_t k = 0; k < zero.size(); ++k) bz[k] = std::abs(beta[zero[k]]) >= lin_zero ? beta[zero[k]] : 0.0;
    Vect yrow(n, 0.0);
    for (std::size_t k = 0; k < zero.size(); ++k)
      for (std::size_t j = 0; j < n; ++j) yrow[j] += sgn * bz[k] * eig.basis(zero[k], j);
    T.append_row(yrow);
    s.push_back(0.0);
    const double nb = norm2(bz);
    Vect unit = (1.0 / nb) * bz;
    Mat comp = orthogonal_complement(unit);
    for (std::size_t c = 0; c < comp.rows(); ++c) {
      Vect zrow(n, 0.0);
      for (std::size_t k = 0; k < zero.size(); ++k)
        for (std::size_t j = 0; j < n; ++j) zrow[j] += comp(c, k) * eig.basis(zero[k], j);
      T.append_row(zrow);
      s.push_back(0.0);
    }
    out.n_l = 1;
    out.n_o = zero.size() - 1;
    out.aggregated = true;
  } else {
    for (std::size_t i : lin) {
      Vect row(eig.basis.row(i).begin(), eig.basis.row(i).end());
      for (double& v : row) v *= sgn * beta[i];
      T.append_row(row);
      s.push_back(0.0);
    }
    for (std::size_t i : absent) {
      T.append_row(eig.basis.row(i));
      s.push_back(0.0);
    }
    out.n_l = lin.size();
    out.n_o = absent.size();
  }

  g *= sgn;
  if (std::abs(g) <= tol.g_snap * scale) g = 0.0;
  out.g = g;

  out.from_original = AffineMap(T, s);
  LU lu(T);
  if (std::abs(lu.determinant()) <= tol.pivot_tol)
    throw Error(ErrorCode::NumericFailure, "canonicalize: change of variables is singular");
  Mat Tinv = inverse(T);
  Vect back = Tinv * s;
  for (double& v : back) v = -v;
  out.to_original = AffineMap(Tinv, back);
  out.P = inst.P.pullback(out.to_original).normalized();
  return out;
}

}  // namespace quadhull
