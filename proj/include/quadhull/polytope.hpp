/**
 * @file polytope.hpp
 * @brief H-polytopes: LP helpers, boundedness, affine hull, irredundant
 * facets, Chebyshev center, and vertex/edge enumeration by double description.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "quadhull/affine_map.hpp"
#include "quadhull/conicsolve.hpp"

namespace quadhull {

/// {x : A x <= b}
struct HPolytope {
  Mat A;
  Vect b;

  HPolytope() = default;
  explicit HPolytope(std::size_t n) : A(0, n) {}
  HPolytope(Mat a, Vect rhs) : A(std::move(a)), b(std::move(rhs)) {
    if (A.rows() != b.size()) throw Error(ErrorCode::InvalidInput, "polytope: row count mismatch");
    if (!A.all_finite() || !all_finite(b)) throw Error(ErrorCode::InvalidInput, "polytope: non-finite data");
  }

  std::size_t dim() const { return A.cols(); }
  std::size_t rows() const { return A.rows(); }

  void add(std::span<const double> row, double rhs) {
    A.append_row(row);
    b.push_back(rhs);
  }

  double slack(std::size_t i, std::span<const double> x) const { return b[i] - dot(A.row(i), x); }

  bool contains(std::span<const double> x, double tol) const {
    for (std::size_t i = 0; i < rows(); ++i)
      if (slack(i, x) < -tol) return false;
    return true;
  }

  /// Scales each row to unit norm; all-zero rows are kept as 0 <= b.
  HPolytope normalized() const {
    HPolytope out(dim());
    for (std::size_t i = 0; i < rows(); ++i) {
      const double nr = norm2(A.row(i));
      if (nr == 0.0) {
        out.add(A.row(i), b[i]);
        continue;
      }
      Vect r(A.row(i).begin(), A.row(i).end());
      for (double& v : r) v /= nr;
      out.add(r, b[i] / nr);
    }
    return out;
  }

  /// {z : A (L z + t) <= b}
  HPolytope pullback(const AffineMap& f) const {
    if (f.out_dim() != dim()) throw Error(ErrorCode::InvalidInput, "pullback: dimension mismatch");
    HPolytope out(f.in_dim());
    Mat al = A * f.L;
    Vect at = A * f.t;
    for (std::size_t i = 0; i < rows(); ++i) out.add(al.row(i), b[i] - at[i]);
    return out;
  }
};

struct VPolytope {
  std::size_t dim = 0;
  std::vector<Vect> vertices;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
};

// ---------------------------------------------------------------------------
// LP plumbing

struct LpResult {
  SolveStatus status = SolveStatus::NumericFailure;
  Vect x;
  double value = 0.0;
};

/// max obj'x over P (plus optional equalities E x = e).
inline LpResult lp_max(const HPolytope& P, std::span<const double> obj, const Tolerances& tol,
                       const Mat* E = nullptr, const Vect* e = nullptr) {
  const std::size_t n = P.dim();
  LpResult r;
  if (n == 0) {
    r.status = P.contains(Vect{}, tol.slack_tol) ? SolveStatus::Optimal : SolveStatus::Infeasible;
    return r;
  }
  ConeProblem prob(n);
  for (std::size_t j = 0; j < n; ++j) prob.c[j] = -obj[j];
  for (std::size_t i = 0; i < P.rows(); ++i) prob.add_inequality(P.A.row(i), P.b[i]);
  if (E)
    for (std::size_t i = 0; i < E->rows(); ++i) prob.add_equality(E->row(i), (*e)[i]);
  SolverOptions opt;
  opt.tol = tol.solver_tol;
  opt.max_iter = tol.max_iter;
  ConeSolution s = solve(prob, opt);
  r.status = s.status;
  if (s.status == SolveStatus::Optimal) {
    r.x = std::move(s.x);
    r.value = dot(obj, r.x);
  }
  return r;
}

inline void expect_optimal(const LpResult& r, const char* what) {
  switch (r.status) {
    case SolveStatus::Optimal: return;
    case SolveStatus::Infeasible: throw Error(ErrorCode::Infeasible, std::string(what) + ": polytope is empty");
    case SolveStatus::Unbounded: throw Error(ErrorCode::Unbounded, std::string(what) + ": polytope is unbounded");
    default: throw Error(ErrorCode::NumericFailure, std::string(what) + ": LP did not converge");
  }
}

struct ChebyshevBall {
  Vect center;
  double radius = 0.0;
};

/// Largest inscribed ball. Unbounded P raises Unbounded.
inline ChebyshevBall chebyshev_ball(const HPolytope& P, const Tolerances& tol) {
  const std::size_t n = P.dim();
  if (n == 0) {
    if (!P.contains(Vect{}, tol.slack_tol)) throw Error(ErrorCode::Infeasible, "chebyshev: polytope is empty");
    return {{}, 0.0};
  }
  HPolytope lifted(n + 1);
  Vect row(n + 1);
  for (std::size_t i = 0; i < P.rows(); ++i) {
    std::copy(P.A.row(i).begin(), P.A.row(i).end(), row.begin());
    row[n] = norm2(P.A.row(i));
    lifted.add(row, P.b[i]);
  }
  Vect cap(n + 1, 0.0);
  cap[n] = -1.0;
  lifted.add(cap, 0.0);
  Vect obj(n + 1, 0.0);
  obj[n] = 1.0;
  LpResult r = lp_max(lifted, obj, tol);
  expect_optimal(r, "chebyshev");
  return {Vect(r.x.begin(), r.x.begin() + static_cast<std::ptrdiff_t>(n)), r.x[n]};
}

inline bool is_empty(const HPolytope& P, const Tolerances& tol) {
  try {
    chebyshev_ball(P, tol);
    return false;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Infeasible) return true;
    throw;
  }
}

/// Componentwise min/max over P, one LP each.
inline std::pair<Vect, Vect> bounding_box(const HPolytope& P, const Tolerances& tol) {
  const std::size_t n = P.dim();
  Vect lo(n), hi(n), dir(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    dir[j] = 1.0;
    LpResult up = lp_max(P, dir, tol);
    expect_optimal(up, "bounding box");
    hi[j] = up.value;
    dir[j] = -1.0;
    LpResult down = lp_max(P, dir, tol);
    expect_optimal(down, "bounding box");
    lo[j] = -down.value;
    dir[j] = 0.0;
  }
  return {lo, hi};
}

/// 2n LPs maximizing +-x_i. Empty P raises Infeasible.
inline bool is_bounded(const HPolytope& P, const Tolerances& tol = {}) {
  try {
    bounding_box(P, tol);
    return true;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Unbounded) return false;
    throw;
  }
}

inline ChebyshevBall interior_point(const HPolytope& P, const Tolerances& tol = {}) {
  ChebyshevBall ball = chebyshev_ball(P.normalized(), tol);
  if (ball.radius <= tol.slack_tol)
    throw Error(ErrorCode::Internal, "interior_point: polytope is not full-dimensional");
  return ball;
}

// ---------------------------------------------------------------------------
// Affine hull

struct AffineHull {
  Mat M;             ///< implicit equalities M x = f
  Vect f;
  HPolytope reduced; ///< full-dimensional in the free coordinates
  AffineMap embed;   ///< reduced coordinates -> original coordinates
  std::vector<std::size_t> free_coords;
  bool full_dim = true;
};

/// Detects implicit equalities (largest slack over P <= slack_tol) and eliminates
/// them. A positive Chebyshev radius certifies full dimension up front.
inline AffineHull affine_hull(const HPolytope& P, const Tolerances& tol = {}) {
  const std::size_t n = P.dim();
  HPolytope Pn = P.normalized();
  AffineHull out;
  out.M = Mat(0, n);
  ChebyshevBall ball = chebyshev_ball(Pn, tol);
  if (ball.radius > tol.slack_tol) {
    out.reduced = Pn;
    out.embed = AffineMap::identity(n);
    for (std::size_t j = 0; j < n; ++j) out.free_coords.push_back(j);
    return out;
  }
  out.full_dim = false;
  std::vector<bool> is_eq(Pn.rows(), false);
  for (std::size_t i = 0; i < Pn.rows(); ++i) {
    if (norm2(Pn.A.row(i)) == 0.0) continue;
    Vect down(Pn.A.row(i).begin(), Pn.A.row(i).end());
    for (double& v : down) v = -v;
    LpResult r = lp_max(Pn, down, tol);
    expect_optimal(r, "affine hull");
    if (Pn.b[i] + r.value <= tol.slack_tol) {
      is_eq[i] = true;
      out.M.append_row(Pn.A.row(i));
      out.f.push_back(Pn.b[i]);
    }
  }
  RowReduction red = row_reduce(out.M, out.f, tol.pivot_tol);
  if (!red.consistent) throw Error(ErrorCode::Infeasible, "affine hull: inconsistent implicit equalities");
  const std::size_t k = red.nonbasic.size();
  Mat L(n, k);
  Vect t(n, 0.0);
  for (std::size_t j = 0; j < k; ++j) L(red.nonbasic[j], j) = 1.0;
  for (std::size_t i = 0; i < red.rank; ++i) {
    for (std::size_t j = 0; j < k; ++j) L(red.basic[i], j) = red.C(i, j);
    t[red.basic[i]] = red.h[i];
  }
  out.embed = AffineMap(L, t);
  out.free_coords = red.nonbasic;
  HPolytope sub = Pn.pullback(out.embed);
  HPolytope kept(k);
  for (std::size_t i = 0; i < sub.rows(); ++i) {
    if (is_eq[i] || norm2(sub.A.row(i)) <= tol.pivot_tol) continue;
    kept.add(sub.A.row(i), sub.b[i]);
  }
  out.reduced = kept.normalized();
  return out;
}

// ---------------------------------------------------------------------------
// Facets

/// Sequential redundancy removal: row i is dropped when maximizing it over
/// the surviving rows (with itself relaxed by 1) stays within slack_tol of b_i.
inline HPolytope facets(const HPolytope& P, const Tolerances& tol = {}) {
  HPolytope Pn = P.normalized();
  const std::size_t m = Pn.rows(), n = Pn.dim();
  std::vector<bool> alive(m, true);
  for (std::size_t i = 0; i < m; ++i) {
    if (norm2(Pn.A.row(i)) == 0.0) {
      alive[i] = false;
      continue;
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (!alive[j]) continue;
      bool same = std::abs(Pn.b[i] - Pn.b[j]) <= tol.slack_tol;
      for (std::size_t k = 0; same && k < n; ++k) same = std::abs(Pn.A(i, k) - Pn.A(j, k)) <= tol.pivot_tol;
      if (same) {
        alive[i] = false;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!alive[i]) continue;
    HPolytope rest(n);
    for (std::size_t j = 0; j < m; ++j)
      if (alive[j] && j != i) rest.add(Pn.A.row(j), Pn.b[j]);
    rest.add(Pn.A.row(i), Pn.b[i] + 1.0);
    LpResult r = lp_max(rest, Pn.A.row(i), tol);
    expect_optimal(r, "facets");
    if (r.value <= Pn.b[i] + tol.slack_tol) alive[i] = false;
  }
  HPolytope out(n);
  for (std::size_t i = 0; i < m; ++i)
    if (alive[i]) out.add(Pn.A.row(i), Pn.b[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Vertex and edge enumeration

namespace detail {

class Bits {
 public:
  explicit Bits(std::size_t n = 0) : w_((n + 63) / 64, 0) {}
  void set(std::size_t i) { w_[i / 64] |= std::uint64_t{1} << (i % 64); }
  bool test(std::size_t i) const { return (w_[i / 64] >> (i % 64)) & 1U; }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : w_) c += static_cast<std::size_t>(__builtin_popcountll(w));
    return c;
  }
  Bits operator&(const Bits& o) const {
    Bits r = *this;
    for (std::size_t k = 0; k < w_.size(); ++k) r.w_[k] &= o.w_[k];
    return r;
  }
  bool subset_of(const Bits& o) const {
    for (std::size_t k = 0; k < w_.size(); ++k)
      if (w_[k] & ~o.w_[k]) return false;
    return true;
  }

 private:
  std::vector<std::uint64_t> w_;
};

struct Ray {
  Vect y;
  Bits zero;
};

inline void scale_unit_inf(Vect& y) {
  const double s = norm_inf(y);
  if (s > 0)
    for (double& v : y) v /= s;
}

}  // namespace detail

/// Double description on the homogenized cone {(x, s) : A x - b s <= 0, s >= 0},
/// constraints inserted in index order. Edges are vertex pairs whose common
/// active rows have rank n - 1.
inline VPolytope vertices_and_edges(const HPolytope& P, const Tolerances& tol = {}) {
  using detail::Bits;
  using detail::Ray;
  const std::size_t n = P.dim();
  if (n > tol.dim_cap)
    throw Error(ErrorCode::Capacity, "vertex enumeration in dimension " + std::to_string(n) +
                                         " exceeds the cap of " + std::to_string(tol.dim_cap) +
                                         "; reduce the instance size");
  VPolytope out;
  out.dim = n;
  if (n == 0) {
    if (P.contains(Vect{}, tol.slack_tol)) out.vertices.push_back({});
    return out;
  }
  HPolytope Pn = P.normalized();
  const std::size_t d = n + 1;
  // homogenized rows, last one is -s <= 0
  Mat H(0, d);
  {
    Vect r(d);
    for (std::size_t i = 0; i < Pn.rows(); ++i) {
      std::copy(Pn.A.row(i).begin(), Pn.A.row(i).end(), r.begin());
      r[n] = -Pn.b[i];
      const double nr = norm2(r);
      if (nr == 0.0) continue;
      for (double& v : r) v /= nr;
      H.append_row(r);
    }
    std::fill(r.begin(), r.end(), 0.0);
    r[n] = -1.0;
    H.append_row(r);
  }
  const std::size_t m = H.rows();

  // initial basis: first d linearly independent rows, scanning from the s >= 0 row
  std::vector<std::size_t> basis;
  {
    Mat acc(0, d);
    std::vector<std::size_t> order{m - 1};
    for (std::size_t i = 0; i + 1 < m; ++i) order.push_back(i);
    for (std::size_t i : order) {
      Mat trial = acc;
      trial.append_row(H.row(i));
      if (rank(trial, tol.pivot_tol) == trial.rows()) {
        acc = std::move(trial);
        basis.push_back(i);
        if (basis.size() == d) break;
      }
    }
    if (basis.size() < d) throw Error(ErrorCode::Unbounded, "vertex enumeration: polytope is unbounded");
  }
  Mat B(d, d);
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t j = 0; j < d; ++j) B(k, j) = H(basis[k], j);
  Mat Binv = inverse(B);

  std::vector<bool> added(m, false);
  for (std::size_t i : basis) added[i] = true;
  auto zero_set = [&](const Vect& y) {
    Bits z(m);
    for (std::size_t i = 0; i < m; ++i)
      if (added[i] && std::abs(dot(H.row(i), y)) <= tol.ray_tol) z.set(i);
    return z;
  };

  std::vector<Ray> rays;
  for (std::size_t k = 0; k < d; ++k) {
    Vect y(d);
    for (std::size_t j = 0; j < d; ++j) y[j] = -Binv(j, k);
    detail::scale_unit_inf(y);
    rays.push_back({y, zero_set(y)});
  }

  for (std::size_t i = 0; i < m; ++i) {
    if (added[i]) continue;
    const auto row = H.row(i);
    std::vector<double> val(rays.size());
    std::vector<std::size_t> pos, neg, zer;
    for (std::size_t k = 0; k < rays.size(); ++k) {
      val[k] = dot(row, rays[k].y);
      if (val[k] > tol.ray_tol) pos.push_back(k);
      else if (val[k] < -tol.ray_tol) neg.push_back(k);
      else zer.push_back(k);
    }
    if (pos.empty()) {
      added[i] = true;
      for (auto& r : rays) r.zero = zero_set(r.y);
      continue;
    }
    std::vector<Ray> next;
    for (std::size_t k : neg) next.push_back(rays[k]);
    for (std::size_t k : zer) next.push_back(rays[k]);
    for (std::size_t p : pos)
      for (std::size_t q : neg) {
        Bits common = rays[p].zero & rays[q].zero;
        if (common.count() + 2 < d) continue;
        bool adjacent = true;
        for (std::size_t r = 0; r < rays.size() && adjacent; ++r)
          if (r != p && r != q && common.subset_of(rays[r].zero)) adjacent = false;
        if (!adjacent) continue;
        Vect y(d);
        for (std::size_t j = 0; j < d; ++j) y[j] = val[p] * rays[q].y[j] - val[q] * rays[p].y[j];
        detail::scale_unit_inf(y);
        next.push_back({y, Bits(m)});
      }
    added[i] = true;
    rays = std::move(next);
    for (auto& r : rays) r.zero = zero_set(r.y);
  }

  for (const auto& r : rays) {
    const double s = r.y[n];
    if (s <= tol.ray_tol) throw Error(ErrorCode::Unbounded, "vertex enumeration: polytope is unbounded");
    Vect v(r.y.begin(), r.y.begin() + static_cast<std::ptrdiff_t>(n));
    for (double& x : v) x /= s;
    bool dup = false;
    for (const auto& w : out.vertices) {
      double diff = 0.0;
      for (std::size_t j = 0; j < n; ++j) diff = std::max(diff, std::abs(w[j] - v[j]));
      if (diff <= 1e-9 * (1.0 + norm_inf(v))) dup = true;
    }
    if (!dup) out.vertices.push_back(std::move(v));
  }
  if (out.vertices.empty()) return out;

  // deterministic lexicographic order
  std::sort(out.vertices.begin(), out.vertices.end());

  const double act_tol = std::max(1e-8, 10 * tol.ray_tol);
  std::vector<std::vector<std::size_t>> active(out.vertices.size());
  for (std::size_t v = 0; v < out.vertices.size(); ++v)
    for (std::size_t i = 0; i < Pn.rows(); ++i)
      if (std::abs(Pn.slack(i, out.vertices[v])) <= act_tol * (1.0 + std::abs(Pn.b[i]))) active[v].push_back(i);
  for (std::size_t u = 0; u < out.vertices.size(); ++u)
    for (std::size_t v = u + 1; v < out.vertices.size(); ++v) {
      Mat common(0, n);
      std::size_t a = 0, b = 0;
      while (a < active[u].size() && b < active[v].size()) {
        if (active[u][a] == active[v][b]) {
          common.append_row(Pn.A.row(active[u][a]));
          ++a;
          ++b;
        } else if (active[u][a] < active[v][b]) {
          ++a;
        } else {
          ++b;
        }
      }
      if (common.rows() + 1 >= n && rank(common, 1e-9) == n - 1) out.edges.emplace_back(u, v);
    }
  return out;
}

}  // namespace quadhull
