/**
 * @file conicsolve.hpp
 * @brief Primal-dual interior-point solver for linear and second-order-cone
 * programs.
 *
 * Problem form:
 *
 *     minimize    c'x
 *     subject to  G x <= h,   E x = e,
 *                 ||A_j x + b_j||_2 <= c_j'x + d_j   for every cone j.
 *
 * The solver runs a Mehrotra predictor-corrector on the homogeneous
 * self-dual embedding with Nesterov-Todd scaling of the cone blocks, so
 * infeasible and unbounded problems end with a certificate instead of
 * diverging. The reduced KKT system is quasi-definite after a small static
 * regularization; it is factored with a sparse LDL' and polished with
 * iterative refinement.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "quadhull/config.hpp"
#include "quadhull/densela.hpp"

namespace quadhull {

/// ||A x + b||_2 <= c'x + d
struct SocConstraint {
  Mat A;
  Vect b;
  Vect c;
  double d = 0.0;
};

struct ConeProblem {
  Vect c;
  Mat G;
  Vect h;
  Mat E;
  Vect e;
  std::vector<SocConstraint> socs;

  std::size_t num_vars() const { return c.size(); }

  /// Empty constraint blocks get the right column count.
  explicit ConeProblem(std::size_t n = 0) : c(n, 0.0), G(0, n), E(0, n) {}

  void add_inequality(std::span<const double> row, double rhs) {
    G.append_row(row);
    h.push_back(rhs);
  }
  void add_equality(std::span<const double> row, double rhs) {
    E.append_row(row);
    e.push_back(rhs);
  }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericFailure: return "numeric-failure";
  }
  return "unknown";
}

struct IterateInfo {
  double pcost = 0, dcost = 0, pres = 0, dres = 0;
  double complementarity = 0;  ///< s'z + tau*kappa, nonnegative on every iterate
  double tau = 0, kappa = 0, step = 0;
};

struct ConeSolution {
  SolveStatus status = SolveStatus::NumericFailure;
  Vect x;
  Vect y;                    ///< multipliers of E x = e
  Vect z_lin;                ///< multipliers of G x <= h (nonnegative)
  std::vector<Vect> z_soc;   ///< cone multipliers (t, u) per SOC block
  double objective = std::numeric_limits<double>::quiet_NaN();
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_residual = std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  std::vector<IterateInfo> trace;  ///< filled when SolverOptions::trace is set
};

struct SolverOptions {
  double tol = 1e-8;
  std::size_t max_iter = 200;
  bool trace = false;
};

struct SparseRow {
  std::vector<std::size_t> idx;
  std::vector<double> val;

  double dot(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) s += val[k] * x[idx[k]];
    return s;
  }
  void axpy(double a, std::span<double> y) const {
    for (std::size_t k = 0; k < idx.size(); ++k) y[idx[k]] += a * val[k];
  }
};

inline SparseRow sparse_row(std::span<const double> r, double sign = 1.0) {
  SparseRow s;
  for (std::size_t j = 0; j < r.size(); ++j)
    if (r[j] != 0.0) {
      s.idx.push_back(j);
      s.val.push_back(sign * r[j]);
    }
  return s;
}


/// Standard form  G x + s = h,  E x = e,  s in R^lin_+ x Q^{d_1} x ...,
/// minimize c'x. Rows of G are listed cone by cone.
struct SparseConeProblem {
  std::size_t num_vars = 0;
  Vect c;
  std::vector<SparseRow> G;
  Vect h;
  std::size_t lin = 0;
  std::vector<std::size_t> soc_dims;
  std::vector<SparseRow> E;
  Vect e;
};

namespace detail {

/// Cone K = R^l_+ x Q^{q_1} x ... ; vectors are stored contiguously.
struct ConeLayout {
  std::size_t lin = 0;
  std::vector<std::size_t> soc_off, soc_dim;
  std::size_t total = 0;
  std::size_t degree() const { return lin + soc_dim.size(); }
};

/// Largest alpha >= 0 (capped at `cap`) keeping v + alpha*dv in the cone.
inline double max_step(const ConeLayout& K, std::span<const double> v, std::span<const double> dv, double cap) {
  double alpha = cap;
  for (std::size_t i = 0; i < K.lin; ++i)
    if (dv[i] < 0) alpha = std::min(alpha, -v[i] / dv[i]);
  for (std::size_t k = 0; k < K.soc_dim.size(); ++k) {
    const std::size_t o = K.soc_off[k], q = K.soc_dim[k];
    double a = dv[o] * dv[o], b = v[o] * dv[o], vn = 0.0;
    for (std::size_t i = 1; i < q; ++i) {
      a -= dv[o + i] * dv[o + i];
      b -= v[o + i] * dv[o + i];
      vn += v[o + i] * v[o + i];
    }
    vn = std::sqrt(vn);
    const double c = (v[o] - vn) * (v[o] + vn);
    b *= 2.0;
    // f(t) = a t^2 + b t + c, f(0) = c > 0; first positive root exits the cone.
    double root = std::numeric_limits<double>::infinity();
    if (c <= 0) {
      root = 0.0;
    } else if (std::abs(a) <= 1e-300) {
      if (b < 0) root = -c / b;
    } else {
      const double disc = b * b - 4 * a * c;
      if (disc >= 0) {
        const double sq = std::sqrt(disc);
        const double qq = -0.5 * (b + (b >= 0 ? sq : -sq));
        for (double r : {qq / a, qq != 0 ? c / qq : std::numeric_limits<double>::infinity()})
          if (r > 0) root = std::min(root, r);
      }
    }
    // guard the opposite nappe when dv points through the apex direction
    if (dv[o] < 0) root = std::min(root, -v[o] / dv[o]);
    alpha = std::min(alpha, root);
  }
  return std::max(alpha, 0.0);
}

/// Amount by which v must be shifted along e to enter the cone interior.
inline double cone_violation(const ConeLayout& K, std::span<const double> v) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < K.lin; ++i) worst = std::max(worst, -v[i]);
  for (std::size_t k = 0; k < K.soc_dim.size(); ++k) {
    const std::size_t o = K.soc_off[k], q = K.soc_dim[k];
    double nrm = 0.0;
    for (std::size_t i = 1; i < q; ++i) nrm += v[o + i] * v[o + i];
    worst = std::max(worst, std::sqrt(nrm) - v[o]);
  }
  return worst;
}

inline void add_identity(const ConeLayout& K, std::span<double> v, double a) {
  for (std::size_t i = 0; i < K.lin; ++i) v[i] += a;
  for (std::size_t k = 0; k < K.soc_dim.size(); ++k) v[K.soc_off[k]] += a;
}

/// Jordan product u o v.
inline Vect jordan(const ConeLayout& K, std::span<const double> u, std::span<const double> v) {
  Vect w(K.total);
  for (std::size_t i = 0; i < K.lin; ++i) w[i] = u[i] * v[i];
  for (std::size_t k = 0; k < K.soc_dim.size(); ++k) {
    const std::size_t o = K.soc_off[k], q = K.soc_dim[k];
    double s = 0.0;
    for (std::size_t i = 0; i < q; ++i) s += u[o + i] * v[o + i];
    w[o] = s;
    for (std::size_t i = 1; i < q; ++i) w[o + i] = u[o] * v[o + i] + v[o] * u[o + i];
  }
  return w;
}

/// Solves lambda o x = r for x.
inline Vect jordan_solve(const ConeLayout& K, std::span<const double> lam, std::span<const double> r) {
  Vect x(K.total);
  for (std::size_t i = 0; i < K.lin; ++i) x[i] = r[i] / lam[i];
  for (std::size_t k = 0; k < K.soc_dim.size(); ++k) {
    const std::size_t o = K.soc_off[k], q = K.soc_dim[k];
    double det = lam[o] * lam[o], l1r1 = 0.0;
    for (std::size_t i = 1; i < q; ++i) {
      det -= lam[o + i] * lam[o + i];
      l1r1 += lam[o + i] * r[o + i];
    }
    const double x0 = (lam[o] * r[o] - l1r1) / det;
    x[o] = x0;
    for (std::size_t i = 1; i < q; ++i) x[o + i] = (r[o + i] - x0 * lam[o + i]) / lam[o];
  }
  return x;
}

/// Nesterov-Todd scaling W (symmetric) with W z = W^{-1} s = lambda.
struct NtScaling {
  Vect lin_w;               ///< sqrt(s/z) per linear row
  std::vector<Mat> W, Winv; ///< per cone block
  Vect lambda;

  void apply(const ConeLayout& K, std::span<const double> v, std::span<double> out, bool inv) const {
    for (std::size_t i = 0; i < K.lin; ++i) out[i] = inv ? v[i] / lin_w[i] : v[i] * lin_w[i];
    for (std::size_t k = 0; k < K.soc_dim.size(); ++k) {
      const std::size_t o = K.soc_off[k], q = K.soc_dim[k];
      const Mat& M = inv ? Winv[k] : W[k];
      for (std::size_t i = 0; i < q; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < q; ++j) s += M(i, j) * v[o + j];
        out[o + i] = s;
      }
    }
  }
};

inline NtScaling nt_scaling(const ConeLayout& K, std::span<const double> s, std::span<const double> z) {
  NtScaling sc;
  sc.lin_w.resize(K.lin);
  sc.lambda.resize(K.total);
  for (std::size_t i = 0; i < K.lin; ++i) {
    sc.lin_w[i] = std::sqrt(s[i] / z[i]);
    sc.lambda[i] = std::sqrt(s[i] * z[i]);
  }
  for (std::size_t k = 0; k < K.soc_dim.size(); ++k) {
    const std::size_t o = K.soc_off[k], q = K.soc_dim[k];
    auto jnorm = [&](std::span<const double> v) {
      const double tail = norm2(v.subspan(o + 1, q - 1));
      return std::sqrt(std::max((v[o] - tail) * (v[o] + tail), 1e-300));
    };
    const double sn = jnorm(s), zn = jnorm(z);
    Vect sb(q), zb(q);
    for (std::size_t i = 0; i < q; ++i) {
      sb[i] = s[o + i] / sn;
      zb[i] = z[o + i] / zn;
    }
    const double gamma = std::sqrt(std::max((1.0 + dot(sb, zb)) / 2.0, 1e-300));
    Vect wb(q);
    wb[0] = (sb[0] + zb[0]) / (2 * gamma);
    for (std::size_t i = 1; i < q; ++i) wb[i] = (sb[i] - zb[i]) / (2 * gamma);
    const double eta = std::sqrt(sn / zn);
    Mat W(q, q), Wi(q, q);
    W(0, 0) = eta * wb[0];
    Wi(0, 0) = wb[0] / eta;
    for (std::size_t i = 1; i < q; ++i) {
      W(0, i) = W(i, 0) = eta * wb[i];
      Wi(0, i) = Wi(i, 0) = -wb[i] / eta;
      for (std::size_t j = 1; j < q; ++j) {
        const double base = (i == j ? 1.0 : 0.0) + wb[i] * wb[j] / (1.0 + wb[0]);
        W(i, j) = eta * base;
        Wi(i, j) = base / eta;
      }
    }
    for (std::size_t i = 0; i < q; ++i) {
      double l = 0.0;
      for (std::size_t j = 0; j < q; ++j) l += W(i, j) * z[o + j];
      sc.lambda[o + i] = l;
    }
    sc.W.push_back(std::move(W));
    sc.Winv.push_back(std::move(Wi));
  }
  return sc;
}

/// Expanded KKT  [dI A' G'; A -dI 0; G 0 -W^2-dI], quasi-definite so a
/// sparse LDL' exists for any ordering. The pattern is fixed, only values
/// change between iterations.
class ExpandedKkt {
 public:
  ExpandedKkt(std::size_t n, const std::vector<SparseRow>& A, const std::vector<SparseRow>& G, const ConeLayout& K)
      : n_(n), p_(A.size()), A_(A), G_(G), K_(K) {}

  /// Factors with the smallest regularization that succeeds, starting at
  /// level `from`.
  void factor(const NtScaling* sc, std::size_t from = 0) {
    sc_ = sc;
    ok_ = false;
    for (level_ = from; level_ < deltas_.size(); ++level_) {
      assemble(deltas_[level_]);
      if (ok_) return;
    }
  }

  /// Refactors with the next larger regularization; false when none is left.
  bool escalate() {
    if (level_ + 1 >= deltas_.size()) return false;
    factor(sc_, level_ + 1);
    return ok_;
  }

  bool ok() const { return ok_; }

  void solve(std::span<const double> p1, std::span<const double> p2, std::span<const double> p3, Vect& dx, Vect& dy,
             Vect& dz) const {
    const std::size_t m = K_.total;
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n_ + p_ + m));
    for (std::size_t i = 0; i < n_; ++i) rhs[static_cast<Eigen::Index>(i)] = p1[i];
    for (std::size_t i = 0; i < p_; ++i) rhs[static_cast<Eigen::Index>(n_ + i)] = p2[i];
    for (std::size_t i = 0; i < m; ++i) rhs[static_cast<Eigen::Index>(n_ + p_ + i)] = p3[i];
    Eigen::VectorXd sol = ldlt_.solve(rhs);
    dx.assign(sol.data(), sol.data() + n_);
    dy.assign(sol.data() + n_, sol.data() + n_ + p_);
    dz.assign(sol.data() + n_ + p_, sol.data() + n_ + p_ + m);
  }

 private:
  void assemble(double delta) {
    const NtScaling* sc = sc_;
    const std::size_t m = K_.total;
    const std::size_t dim = n_ + p_ + m;
    std::vector<Eigen::Triplet<double>> trips;
    auto push = [&](std::size_t i, std::size_t j, double v) {
      trips.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    };
    for (std::size_t i = 0; i < n_; ++i) push(i, i, delta);
    for (std::size_t r = 0; r < p_; ++r) {
      for (std::size_t t = 0; t < A_[r].idx.size(); ++t) push(n_ + r, A_[r].idx[t], A_[r].val[t]);
      push(n_ + r, n_ + r, -delta);
    }
    const std::size_t zo = n_ + p_;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t t = 0; t < G_[i].idx.size(); ++t) push(zo + i, G_[i].idx[t], G_[i].val[t]);
    for (std::size_t i = 0; i < K_.lin; ++i) {
      const double w = sc ? sc->lin_w[i] * sc->lin_w[i] : 1.0;
      push(zo + i, zo + i, -w - delta);
    }
    for (std::size_t k = 0; k < K_.soc_dim.size(); ++k) {
      const std::size_t o = K_.soc_off[k], q = K_.soc_dim[k];
      const Mat W2 = sc ? sc->W[k] * sc->W[k] : Mat::identity(q);
      for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = 0; j <= i; ++j) push(zo + o + i, zo + o + j, -W2(i, j) - (i == j ? delta : 0.0));
    }
    Eigen::SparseMatrix<double> Kmat(static_cast<int>(dim), static_cast<int>(dim));
    Kmat.setFromTriplets(trips.begin(), trips.end());
    if (!analyzed_) {
      ldlt_.analyzePattern(Kmat);
      analyzed_ = true;
    }
    ldlt_.factorize(Kmat);
    ok_ = ldlt_.info() == Eigen::Success && ldlt_.vectorD().allFinite();
  }

  static constexpr std::array<double, 4> deltas_{1e-9, 1e-7, 1e-5, 1e-3};
  std::size_t n_, p_;
  const std::vector<SparseRow>& A_;
  const std::vector<SparseRow>& G_;
  const ConeLayout& K_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt_;
  const NtScaling* sc_ = nullptr;
  std::size_t level_ = 0;
  bool analyzed_ = false;
  bool ok_ = false;
};

inline ConeSolution solve_once(const SparseConeProblem& prob, const SolverOptions& opt, bool adaptive) {
  const std::size_t n = prob.num_vars;
  if (n == 0) throw Error(ErrorCode::InvalidInput, "cone problem without variables");
  if (prob.c.size() != n || prob.G.size() != prob.h.size() || prob.E.size() != prob.e.size())
    throw Error(ErrorCode::InvalidInput, "cone problem dimensions are inconsistent");
  ConeLayout K;
  K.lin = prob.lin;
  std::size_t off = K.lin;
  for (std::size_t d : prob.soc_dims) {
    K.soc_off.push_back(off);
    K.soc_dim.push_back(d);
    off += d;
  }
  K.total = off;
  if (K.total != prob.G.size()) throw Error(ErrorCode::InvalidInput, "cone sizes do not match the row count");
  for (const auto* rows : {&prob.G, &prob.E})
    for (const auto& r : *rows)
      for (std::size_t j : r.idx)
        if (j >= n) throw Error(ErrorCode::InvalidInput, "cone problem column index out of range");
  const std::vector<SparseRow>& Grows = prob.G;
  const std::vector<SparseRow>& Arows = prob.E;
  const Vect& h = prob.h;
  const std::size_t m = K.total, p = prob.E.size();
  const Vect& b = prob.e;
  const Vect& c = prob.c;

  auto Gmul = [&](std::span<const double> x) {
    Vect r(m);
    for (std::size_t i = 0; i < m; ++i) r[i] = Grows[i].dot(x);
    return r;
  };
  auto GTmul = [&](std::span<const double> z) {
    Vect r(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      if (z[i] != 0.0) Grows[i].axpy(z[i], r);
    return r;
  };
  auto Amul = [&](std::span<const double> x) {
    Vect r(p);
    for (std::size_t i = 0; i < p; ++i) r[i] = Arows[i].dot(x);
    return r;
  };
  auto ATmul = [&](std::span<const double> y) {
    Vect r(n, 0.0);
    for (std::size_t i = 0; i < p; ++i)
      if (y[i] != 0.0) Arows[i].axpy(y[i], r);
    return r;
  };

  ExpandedKkt kkt(n, Arows, Grows, K);
  ConeSolution out;

  auto apply_w2 = [&](const NtScaling* sc, std::span<const double> v) {
    Vect out(m);
    if (!sc) {
      out.assign(v.begin(), v.end());
      return out;
    }
    Vect tmp(m);
    sc->apply(K, v, tmp, false);
    sc->apply(K, tmp, out, false);
    return out;
  };
  // [0 A' G'; A 0 0; G 0 -W^2][dx;dy;dz] = [p1;p2;p3], refined against the
  // unregularized operator; the best refinement iterate is kept. Inaccurate
  // solves refactor with more regularization.
  auto kkt_solve = [&](const NtScaling* sc, std::span<const double> p1, std::span<const double> p2,
                       std::span<const double> p3, Vect& dx, Vect& dy, Vect& dz) {
    const double scale = 1.0 + std::max({norm_inf(p1), norm_inf(p2), norm_inf(p3)});
    double best = std::numeric_limits<double>::infinity();
    Vect bx, by, bz;
    do {
      kkt.solve(p1, p2, p3, dx, dy, dz);
      double level_best = std::numeric_limits<double>::infinity();
      for (int it = 0; it < 6; ++it) {
        Vect e1 = ATmul(dy), gz = GTmul(dz);
        for (std::size_t i = 0; i < n; ++i) e1[i] = p1[i] - e1[i] - gz[i];
        Vect e2 = Amul(dx);
        for (std::size_t i = 0; i < p; ++i) e2[i] = p2[i] - e2[i];
        Vect e3 = Gmul(dx), w2dz = apply_w2(sc, dz);
        for (std::size_t i = 0; i < m; ++i) e3[i] = p3[i] - e3[i] + w2dz[i];
        const double err = std::max({norm_inf(e1), norm_inf(e2), norm_inf(e3)});
        if (!(err < level_best)) break;
        level_best = err;
        if (err < best) {
          best = err;
          bx = dx;
          by = dy;
          bz = dz;
        }
        if (err <= 1e-15 * scale) break;
        Vect cx_, cy_, cz_;
        kkt.solve(e1, e2, e3, cx_, cy_, cz_);
        for (std::size_t i = 0; i < n; ++i) dx[i] += cx_[i];
        for (std::size_t i = 0; i < p; ++i) dy[i] += cy_[i];
        for (std::size_t i = 0; i < m; ++i) dz[i] += cz_[i];
      }
    } while (adaptive && best > 1e-10 * scale && kkt.escalate());
    dx = std::move(bx);
    dy = std::move(by);
    dz = std::move(bz);
  };

  // --- initial point
  kkt.factor(nullptr);
  if (!kkt.ok()) return out;
  Vect x, y, z, s, tmpz;
  {
    Vect zero_n(n, 0.0), zero_p(p, 0.0), zero_m(m, 0.0);
    Vect dz;
    kkt_solve(nullptr, zero_n, b, h, x, y, dz);
    s.resize(m);
    for (std::size_t i = 0; i < m; ++i) s[i] = -dz[i];
    Vect negc(n);
    for (std::size_t i = 0; i < n; ++i) negc[i] = -c[i];
    Vect x2;
    kkt_solve(nullptr, negc, zero_p, zero_m, x2, y, z);
  }
  if (m > 0) {
    const double ap = cone_violation(K, s);
    if (ap >= -1e-8) add_identity(K, s, 1.0 + std::max(ap, 0.0));
    const double ad = cone_violation(K, z);
    if (ad >= -1e-8) add_identity(K, z, 1.0 + std::max(ad, 0.0));
  }
  double tau = 1.0, kappa = 1.0;

  const double bnorm = std::max(norm_inf(b), norm_inf(h));
  const double cnorm = norm_inf(c);
  const double D = static_cast<double>(K.degree());

  auto finish_optimal = [&](std::size_t it, double pres, double dres, double gap) {
    out.status = SolveStatus::Optimal;
    out.x = (1.0 / tau) * x;
    out.y = (1.0 / tau) * y;
    Vect zz = (1.0 / tau) * z;
    out.z_lin.assign(zz.begin(), zz.begin() + static_cast<std::ptrdiff_t>(K.lin));
    out.z_soc.clear();
    for (std::size_t k = 0; k < K.soc_dim.size(); ++k)
      out.z_soc.emplace_back(zz.begin() + static_cast<std::ptrdiff_t>(K.soc_off[k]),
                             zz.begin() + static_cast<std::ptrdiff_t>(K.soc_off[k] + K.soc_dim[k]));
    out.objective = dot(c, out.x);
    out.primal_residual = pres;
    out.dual_residual = dres;
    out.gap = gap;
    out.iterations = it;
  };

  double best_merit = std::numeric_limits<double>::infinity();
  std::size_t stall = 0;
  double accepted_score = std::numeric_limits<double>::infinity();
  std::optional<ConeSolution> accepted;

  for (std::size_t it = 0; it <= opt.max_iter; ++it) {
    // residuals of the embedding
    Vect r1 = ATmul(y);
    {
      Vect gz = GTmul(z);
      for (std::size_t i = 0; i < n; ++i) r1[i] += gz[i] + c[i] * tau;
    }
    Vect r2 = Amul(x);
    for (std::size_t i = 0; i < p; ++i) r2[i] -= b[i] * tau;
    Vect r3 = Gmul(x);
    for (std::size_t i = 0; i < m; ++i) r3[i] += s[i] - h[i] * tau;
    const double cx = dot(c, x), by = dot(b, y), hz = dot(h, z);
    const double r4 = kappa + cx + by + hz;
    const double sz = dot(s, z);

    const double pres = std::max(norm_inf(r2), norm_inf(r3)) / tau / (1.0 + bnorm);
    const double dres = norm_inf(r1) / tau / (1.0 + cnorm);
    const double pcost = cx / tau, dcost = -(by + hz) / tau;
    const double gap = sz / (tau * tau);

    if (opt.trace) out.trace.push_back({pcost, dcost, pres, dres, sz + tau * kappa, tau, kappa, 0.0});

    // aim below the requested tolerance, fall back to the best acceptable iterate
    const double rel_gap = std::max(gap, std::abs(pcost - dcost)) / (1.0 + std::abs(pcost));
    const double target = 0.1 * opt.tol;
    if (pres <= target && dres <= target && rel_gap <= target) {
      finish_optimal(it, pres, dres, rel_gap);
      return out;
    }
    if (pres <= opt.tol && dres <= opt.tol && rel_gap <= opt.tol) {
      const double score = std::max({pres, dres, rel_gap});
      if (score < accepted_score) {
        accepted_score = score;
        finish_optimal(it, pres, dres, rel_gap);
        accepted = out;
      }
    }
    // infeasibility certificates
    if (by + hz < 0) {
      Vect cert = ATmul(y);
      Vect gz = GTmul(z);
      for (std::size_t i = 0; i < n; ++i) cert[i] += gz[i];
      if (norm_inf(cert) / -(by + hz) <= opt.tol && cone_violation(K, z) <= 0) {
        out.status = SolveStatus::Infeasible;
        out.primal_residual = norm_inf(cert) / -(by + hz);
        out.iterations = it;
        return out;
      }
    }
    if (cx < 0) {
      Vect ax = Amul(x), gxs = Gmul(x);
      for (std::size_t i = 0; i < m; ++i) gxs[i] += s[i];
      if (std::max(norm_inf(ax), norm_inf(gxs)) / -cx <= opt.tol) {
        out.status = SolveStatus::Unbounded;
        out.dual_residual = std::max(norm_inf(ax), norm_inf(gxs)) / -cx;
        out.iterations = it;
        return out;
      }
    }
    if (it == opt.max_iter) break;

    const double merit = std::max({pres, dres, gap / (1.0 + std::abs(pcost))});
    if (merit < 0.5 * best_merit) {
      best_merit = merit;
      stall = 0;
    } else if (++stall > 25) {
      break;
    }

    NtScaling sc = nt_scaling(K, s, z);
    kkt.factor(&sc);
    if (!kkt.ok()) break;

    Vect u1x, u1y, u1z;
    {
      Vect negc(n);
      for (std::size_t i = 0; i < n; ++i) negc[i] = -c[i];
      kkt_solve(&sc, negc, b, h, u1x, u1y, u1z);
    }
    const double u1dot = dot(c, u1x) + dot(b, u1y) + dot(h, u1z) - kappa / tau;
    const double mu = (sz + tau * kappa) / (D + 1.0);

    struct Dir {
      Vect dx, dy, dz, ds;
      double dtau = 0, dkappa = 0;
    };
    auto direction = [&](double sigma, std::span<const double> rc, double rtk) {
      Dir d;
      Vect xi = jordan_solve(K, sc.lambda, rc);
      Vect wxi(m);
      sc.apply(K, xi, wxi, false);
      const double f = 1.0 - sigma;
      Vect q1(n), q2(p), q3(m);
      for (std::size_t i = 0; i < n; ++i) q1[i] = -f * r1[i];
      for (std::size_t i = 0; i < p; ++i) q2[i] = -f * r2[i];
      for (std::size_t i = 0; i < m; ++i) q3[i] = -f * r3[i] - wxi[i];
      Vect u2x, u2y, u2z;
      kkt_solve(&sc, q1, q2, q3, u2x, u2y, u2z);
      d.dtau = (-f * r4 - rtk / tau - (dot(c, u2x) + dot(b, u2y) + dot(h, u2z))) / u1dot;
      d.dx = u2x;
      d.dy = u2y;
      d.dz = u2z;
      for (std::size_t i = 0; i < n; ++i) d.dx[i] += d.dtau * u1x[i];
      for (std::size_t i = 0; i < p; ++i) d.dy[i] += d.dtau * u1y[i];
      for (std::size_t i = 0; i < m; ++i) d.dz[i] += d.dtau * u1z[i];
      // ds = W (xi - W dz)
      Vect wdz(m), t(m);
      sc.apply(K, d.dz, wdz, false);
      for (std::size_t i = 0; i < m; ++i) t[i] = xi[i] - wdz[i];
      d.ds.resize(m);
      sc.apply(K, t, d.ds, false);
      d.dkappa = (rtk - kappa * d.dtau) / tau;
      return d;
    };
    auto step_length = [&](const Dir& d, double cap) {
      double a = cap;
      a = std::min(a, max_step(K, s, d.ds, a));
      a = std::min(a, max_step(K, z, d.dz, a));
      if (d.dtau < 0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    // predictor
    Vect lamlam = jordan(K, sc.lambda, sc.lambda);
    Vect rc(m);
    for (std::size_t i = 0; i < m; ++i) rc[i] = -lamlam[i];
    Dir aff = direction(0.0, rc, -tau * kappa);
    const double a_aff = step_length(aff, 1.0);
    const double sigma = std::clamp(std::pow(1.0 - a_aff, 3), 0.0, 1.0);

    // corrector
    Vect wids(m), wdz(m);
    sc.apply(K, aff.ds, wids, true);
    sc.apply(K, aff.dz, wdz, false);
    Vect corr = jordan(K, wids, wdz);
    for (std::size_t i = 0; i < m; ++i) rc[i] = -lamlam[i] - corr[i];
    add_identity(K, rc, sigma * mu);
    const double rtk = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
    Dir d = direction(sigma, rc, rtk);
    const double alpha = std::min(1.0, 0.99 * step_length(d, 1.0 / 0.99));

    for (std::size_t i = 0; i < n; ++i) x[i] += alpha * d.dx[i];
    for (std::size_t i = 0; i < p; ++i) y[i] += alpha * d.dy[i];
    for (std::size_t i = 0; i < m; ++i) {
      z[i] += alpha * d.dz[i];
      s[i] += alpha * d.ds[i];
    }
    tau += alpha * d.dtau;
    kappa += alpha * d.dkappa;
    if (opt.trace) out.trace.back().step = alpha;
    if (!(tau > 0) || !std::isfinite(tau) || !all_finite(x)) break;
  }

  if (accepted) {
    accepted->trace = std::move(out.trace);
    return *accepted;
  }
  out.status = SolveStatus::NumericFailure;
  out.x = (1.0 / tau) * x;
  out.y = (1.0 / tau) * y;
  out.objective = dot(c, out.x);
  out.iterations = opt.max_iter;
  return out;
}

}  // namespace detail

/// Solves the cone program. Never throws on solver trouble; the status
/// says what happened. A numeric failure is retried once with the KKT
/// regularization raised whenever a solve loses accuracy.
inline ConeSolution solve(const SparseConeProblem& prob, const SolverOptions& opt = {}) {
  ConeSolution first = detail::solve_once(prob, opt, false);
  if (first.status != SolveStatus::NumericFailure) return first;
  ConeSolution second = detail::solve_once(prob, opt, true);
  if (second.status == SolveStatus::NumericFailure) return first;
  return second;
}

/// Dense entry point; converted to the sparse standard form.
inline ConeSolution solve(const ConeProblem& prob, const SolverOptions& opt = {}) {
  const std::size_t n = prob.num_vars();
  if (n == 0) throw Error(ErrorCode::InvalidInput, "cone problem without variables");
  if (prob.G.rows() != prob.h.size() || prob.E.rows() != prob.e.size() ||
      (prob.G.rows() && prob.G.cols() != n) || (prob.E.rows() && prob.E.cols() != n))
    throw Error(ErrorCode::InvalidInput, "cone problem dimensions are inconsistent");
  SparseConeProblem sp;
  sp.num_vars = n;
  sp.c = prob.c;
  sp.lin = prob.G.rows();
  for (std::size_t i = 0; i < sp.lin; ++i) {
    sp.G.push_back(sparse_row(prob.G.row(i)));
    sp.h.push_back(prob.h[i]);
  }
  for (const auto& sc : prob.socs) {
    if (sc.A.cols() != n || sc.c.size() != n || sc.b.size() != sc.A.rows())
      throw Error(ErrorCode::InvalidInput, "cone block dimensions are inconsistent");
    sp.soc_dims.push_back(1 + sc.A.rows());
    sp.G.push_back(sparse_row(sc.c, -1.0));
    sp.h.push_back(sc.d);
    for (std::size_t i = 0; i < sc.A.rows(); ++i) {
      sp.G.push_back(sparse_row(sc.A.row(i), -1.0));
      sp.h.push_back(sc.b[i]);
    }
  }
  for (std::size_t i = 0; i < prob.E.rows(); ++i) sp.E.push_back(sparse_row(prob.E.row(i)));
  sp.e = prob.e;
  return solve(sp, opt);
}

struct KktReport {
  double primal = 0.0;          ///< max violation of E x = e, G x <= h and the cones
  double dual = 0.0;            ///< stationarity plus dual-cone violation
  double complementarity = 0.0; ///< |c'x + e'y + h'z| / (1 + |c'x|)
};

/// Recomputes optimality conditions from the problem data and the returned
/// primal/dual vectors only.
inline KktReport check_kkt(const ConeProblem& prob, const ConeSolution& sol) {
  KktReport r;
  const std::size_t n = prob.num_vars();
  if (sol.x.size() != n) return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                                 std::numeric_limits<double>::infinity()};
  const Vect& x = sol.x;
  for (std::size_t i = 0; i < prob.E.rows(); ++i) r.primal = std::max(r.primal, std::abs(dot(prob.E.row(i), x) - prob.e[i]));
  for (std::size_t i = 0; i < prob.G.rows(); ++i) r.primal = std::max(r.primal, dot(prob.G.row(i), x) - prob.h[i]);
  for (const auto& sc : prob.socs) {
    Vect u = sc.A * x;
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += sc.b[i];
    r.primal = std::max(r.primal, norm2(u) - dot(sc.c, x) - sc.d);
  }

  const bool have_duals = sol.y.size() == prob.E.rows() && sol.z_lin.size() == prob.G.rows() &&
                          sol.z_soc.size() == prob.socs.size();
  if (!have_duals) {
    r.dual = r.complementarity = std::numeric_limits<double>::infinity();
    return r;
  }
  Vect grad = prob.c;
  double dual_obj = dot(prob.e, sol.y) + dot(prob.h, sol.z_lin);
  {
    Vect t = mul_transpose(prob.E, sol.y);
    for (std::size_t i = 0; i < n; ++i) grad[i] += t[i];
    t = mul_transpose(prob.G, sol.z_lin);
    for (std::size_t i = 0; i < n; ++i) grad[i] += t[i];
  }
  double cone_viol = 0.0;
  for (double zl : sol.z_lin) cone_viol = std::max(cone_viol, -zl);
  for (std::size_t k = 0; k < prob.socs.size(); ++k) {
    const auto& sc = prob.socs[k];
    const Vect& zk = sol.z_soc[k];
    if (zk.size() != 1 + sc.A.rows()) return {r.primal, std::numeric_limits<double>::infinity(),
                                              std::numeric_limits<double>::infinity()};
    std::span<const double> z1(zk.data() + 1, zk.size() - 1);
    for (std::size_t i = 0; i < n; ++i) grad[i] -= zk[0] * sc.c[i];
    Vect t = mul_transpose(sc.A, z1);
    for (std::size_t i = 0; i < n; ++i) grad[i] -= t[i];
    dual_obj += zk[0] * sc.d + dot(sc.b, z1);
    cone_viol = std::max(cone_viol, norm2(z1) - zk[0]);
  }
  r.dual = std::max(norm_inf(grad), cone_viol);
  const double cx = dot(prob.c, x);
  r.complementarity = std::abs(cx + dual_obj) / (1.0 + std::abs(cx));
  return r;
}

}  // namespace quadhull
