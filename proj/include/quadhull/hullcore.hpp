/**
 * @file hullcore.hpp
 * @brief Convex hull of {x'Qx + alpha'x = g} inside a polytope, built by
 * induction on the dimension: base cases are written down directly, every
 * other case is the hull of the union of its facet restrictions.
 */
#pragma once

#include <map>
#include <sstream>

#include "quadhull/hullrep.hpp"
#include "quadhull/oracle.hpp"
#include "quadhull/reduction.hpp"

namespace quadhull {

enum class CaseTag { Empty, BasePoint, BaseLinear, BaseOneSided, BaseSingleSquare, RecurseFacets };

inline const char* to_string(CaseTag t) {
  switch (t) {
    case CaseTag::Empty: return "Empty";
    case CaseTag::BasePoint: return "BasePoint";
    case CaseTag::BaseLinear: return "BaseLinear";
    case CaseTag::BaseOneSided: return "BaseOneSided";
    case CaseTag::BaseSingleSquare: return "BaseSingleSquare";
    case CaseTag::RecurseFacets: return "RecurseFacets";
  }
  return "?";
}

struct Classification {
  CaseTag tag = CaseTag::Empty;
  std::string lemma;
};

/// Decision table, first matching row wins.
inline Classification classify_counts(std::size_t n_qp, std::size_t n_qm, std::size_t n_l, std::size_t n_o, double g,
                                      bool p_empty) {
  if (p_empty) return {CaseTag::Empty, "empty-polytope"};
  if (n_qp == 0 && n_qm == 0 && n_l == 0) {
    if (g != 0.0) return {CaseTag::Empty, "constant-equation"};
    return {n_o == 0 ? CaseTag::BasePoint : CaseTag::BaseLinear, "constant-equation"};
  }
  if (n_qp == 0 && n_qm == 0 && n_l == 1) return {CaseTag::BaseLinear, "linear-hyperplane"};
  if (n_o >= 1) return {CaseTag::RecurseFacets, "interior-shift-absent-var"};
  if (n_l >= 2) return {CaseTag::RecurseFacets, "interior-shift-linear-pair"};
  if (n_l == 1 && n_qp >= 1 && n_qm >= 1) return {CaseTag::RecurseFacets, "interior-shift-mixed-linear"};
  if (n_l <= 1 && (n_qp == 0 || n_qm == 0)) return {CaseTag::BaseOneSided, "one-sided-squares"};
  if (n_qp == 1) return {CaseTag::BaseSingleSquare, "single-positive-square"};
  return {CaseTag::RecurseFacets, "ruled-surface"};
}

inline Classification classify(const CanonicalSet& c, bool check_empty = true) {
  const bool empty = check_empty && is_empty(c.P, c.tol);
  return classify_counts(c.n_qp, c.n_qm, c.n_l, c.n_o, c.g, empty);
}

// ---------------------------------------------------------------------------
// Building blocks

/// Smallest uniform relaxation tau making the leaf feasible; <= slack_tol
/// means nonempty.
inline double soc_leaf_violation(const SocLeaf& leaf, const Tolerances& tol) {
  const std::size_t n = leaf.P.dim();
  if (n == 0) {
    double v = 0.0;
    for (std::size_t i = 0; i < leaf.P.rows(); ++i) v = std::max(v, -leaf.P.b[i]);
    return v;
  }
  ConeProblem prob(n + 1);
  prob.c[n] = 1.0;
  Vect row(n + 1);
  for (std::size_t i = 0; i < leaf.P.rows(); ++i) {
    std::copy(leaf.P.A.row(i).begin(), leaf.P.A.row(i).end(), row.begin());
    row[n] = -1.0;
    prob.add_inequality(row, leaf.P.b[i]);
  }
  for (std::size_t i = 0; i < leaf.E.rows(); ++i) {
    std::copy(leaf.E.row(i).begin(), leaf.E.row(i).end(), row.begin());
    row[n] = -1.0;
    prob.add_inequality(row, leaf.e[i]);
    for (std::size_t j = 0; j < n; ++j) row[j] = -row[j];
    prob.add_inequality(row, -leaf.e[i]);
  }
  std::fill(row.begin(), row.end(), 0.0);
  row[n] = -1.0;
  prob.add_inequality(row, 1.0);
  for (const auto& s : leaf.socs) {
    SocConstraint t;
    t.A = Mat(s.A.rows(), n + 1);
    for (std::size_t i = 0; i < s.A.rows(); ++i)
      for (std::size_t j = 0; j < n; ++j) t.A(i, j) = s.A(i, j);
    t.b = s.b;
    t.c = s.c;
    t.c.push_back(1.0);
    t.d = s.d;
    prob.socs.push_back(std::move(t));
  }
  SolverOptions opt;
  opt.tol = tol.solver_tol;
  opt.max_iter = tol.max_iter;
  ConeSolution sol = solve(prob, opt);
  if (sol.status != SolveStatus::Optimal)
    throw Error(ErrorCode::NumericFailure, std::string("leaf feasibility solve: ") + to_string(sol.status));
  return sol.x[n];
}

inline bool soc_leaf_empty(const SocLeaf& leaf, const Tolerances& tol) {
  return soc_leaf_violation(leaf, tol) > tol.slack_tol;
}

/// Drops points lying within prune_tol (L1) of the hull of the remaining ones.
inline std::vector<Vect> prune_to_extreme(std::vector<Vect> pts, const Tolerances& tol) {
  if (pts.empty()) return pts;
  const std::size_t n = pts.front().size();
  // exact-ish duplicates first
  std::sort(pts.begin(), pts.end());
  std::vector<Vect> uniq;
  for (auto& p : pts) {
    bool dup = false;
    for (const auto& q : uniq) {
      double d = 0.0;
      for (std::size_t j = 0; j < n; ++j) d = std::max(d, std::abs(p[j] - q[j]));
      if (d <= tol.prune_tol) {
        dup = true;
        break;
      }
    }
    if (!dup) uniq.push_back(std::move(p));
  }
  if (uniq.size() <= 2 || n == 0) return uniq;

  std::vector<bool> keep(uniq.size(), true);
  for (std::size_t k = 0; k < uniq.size(); ++k) {
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < uniq.size(); ++j)
      if (j != k && keep[j]) others.push_back(j);
    const std::size_t K = others.size();
    // variables: mu (K), r (n); min sum r, |p - V mu| <= r, mu >= 0, sum mu = 1
    ConeProblem prob(K + n);
    for (std::size_t j = 0; j < n; ++j) prob.c[K + j] = 1.0;
    Vect row(K + n);
    for (std::size_t j = 0; j < n; ++j) {
      std::fill(row.begin(), row.end(), 0.0);
      for (std::size_t a = 0; a < K; ++a) row[a] = -uniq[others[a]][j];
      row[K + j] = -1.0;
      prob.add_inequality(row, -uniq[k][j]);
      for (std::size_t a = 0; a < K; ++a) row[a] = uniq[others[a]][j];
      prob.add_inequality(row, uniq[k][j]);
    }
    for (std::size_t a = 0; a < K; ++a) {
      std::fill(row.begin(), row.end(), 0.0);
      row[a] = -1.0;
      prob.add_inequality(row, 0.0);
    }
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t a = 0; a < K; ++a) row[a] = 1.0;
    prob.add_equality(row, 1.0);
    SolverOptions opt;
    opt.tol = tol.solver_tol;
    opt.max_iter = tol.max_iter;
    ConeSolution s = solve(prob, opt);
    if (s.status == SolveStatus::Optimal && s.objective <= tol.prune_tol) keep[k] = false;
  }
  std::vector<Vect> out;
  for (std::size_t k = 0; k < uniq.size(); ++k)
    if (keep[k]) out.push_back(std::move(uniq[k]));
  return out;
}

/// Hull of P minus the open region ||A v + b|| < c'v + d. Extreme points of
/// that hull lie on edges of P: candidates are the vertices outside or on
/// the region and the points where an edge crosses its boundary.
inline VPolytope reverse_convex_hull_via_edges(const HPolytope& P, const SocConstraint& soc, const Tolerances& tol) {
  VPolytope out;
  out.dim = P.dim();
  VPolytope V = vertices_and_edges(P, tol);
  auto gap = [&](std::span<const double> v) {
    Vect u = soc.A * v;
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += soc.b[i];
    return norm2(u) - dot(soc.c, v) - soc.d;  // >= 0 outside the open region
  };
  std::vector<Vect> cand;
  for (const auto& v : V.vertices) {
    const double scale = 1.0 + norm_inf(v);
    if (gap(v) >= -tol.surface_tol * scale) cand.push_back(v);
  }
  for (const auto& [i, j] : V.edges) {
    const Vect& p = V.vertices[i];
    const Vect dir = V.vertices[j] - p;
    Vect u = soc.A * p;
    for (std::size_t k = 0; k < u.size(); ++k) u[k] += soc.b[k];
    const Vect e = soc.A * dir;
    const double al = dot(soc.c, p) + soc.d, be = dot(soc.c, dir);
    // ||u + s e||^2 = (al + s be)^2
    const double qa = dot(e, e) - be * be;
    const double qb = 2.0 * (dot(u, e) - al * be);
    const double qc = dot(u, u) - al * al;
    const double zero = 1e-12 * (1.0 + std::abs(qa) + std::abs(qb) + std::abs(qc));
    std::vector<double> roots;
    detail::line_roots(qa, qb, qc, 0.0, 1.0, zero, roots);
    if (std::abs(qa) <= zero && std::abs(qb) <= zero) continue;  // whole edge on the boundary: its ends are vertices
    for (double s : roots) {
      if (al + s * be < -tol.surface_tol) continue;
      Vect x = p;
      for (std::size_t k = 0; k < x.size(); ++k) x[k] += s * dir[k];
      cand.push_back(std::move(x));
    }
  }
  out.vertices = prune_to_extreme(std::move(cand), tol);
  return out;
}

// ---------------------------------------------------------------------------
// Trace and options

struct TraceLine {
  std::size_t depth = 0;
  std::size_t dim = 0;
  std::array<std::size_t, 4> counts{};
  std::string tag;
  std::string lemma;
  std::size_t children = 0;
};

inline std::string format_trace(const TraceLine& t) {
  std::ostringstream os;
  os << std::string(2 * t.depth, ' ') << "dim " << t.dim << " (" << t.counts[0] << ',' << t.counts[1] << ','
     << t.counts[2] << ',' << t.counts[3] << ") " << t.tag;
  if (!t.lemma.empty()) os << ' ' << t.lemma;
  if (t.tag == "RecurseFacets") os << " children=" << t.children;
  return os.str();
}

struct BuildOptions {
  std::size_t max_leaves = 5000;
  std::size_t max_depth = 0;  ///< 0 means the ambient dimension
  bool aggregate_linear = false;
  bool check_empty_children = true;  ///< cross-check empty facet children with the sampling oracle
  std::size_t empty_check_density = 24;
};

struct BuildResult {
  HullRep hull;
  std::vector<TraceLine> trace;
  std::size_t leaves = 0;
};

struct FacetChild {
  QuadInstance inst;
  AffineMap embed;
  std::size_t pivot = 0;
};

/// Restriction to facet i: the coordinate with the largest |F_ij| is
/// eliminated through F_i x = f_i.
inline FacetChild facet_restrict(const QuadInstance& inst, const HPolytope& F, std::size_t i) {
  const std::size_t n = inst.dim();
  if (n == 0) throw Error(ErrorCode::InvalidInput, "facet_restrict: zero-dimensional instance");
  const auto a = F.A.row(i);
  std::size_t j0 = 0;
  for (std::size_t j = 1; j < n; ++j)
    if (std::abs(a[j]) > std::abs(a[j0])) j0 = j;
  if (a[j0] == 0.0) throw Error(ErrorCode::InvalidInput, "facet_restrict: zero facet row");
  Mat L(n, n - 1);
  Vect t(n, 0.0);
  for (std::size_t j = 0, c = 0; j < n; ++j) {
    if (j == j0) continue;
    L(j, c) = 1.0;
    L(j0, c) = -a[j] / a[j0];
    ++c;
  }
  t[j0] = F.b[i] / a[j0];
  AffineMap embed(L, t);
  QuadInstance base = inst;
  base.P = HPolytope(n);
  for (std::size_t k = 0; k < F.rows(); ++k)
    if (k != i) base.P.add(F.A.row(k), F.b[k]);
  QuadInstance child = substitute(base, embed);
  HPolytope rows(n - 1);
  for (std::size_t k = 0; k < child.P.rows(); ++k)
    if (norm2(child.P.A.row(k)) > inst.tol.pivot_tol) rows.add(child.P.A.row(k), child.P.b[k]);
    else if (child.P.b[k] < -inst.tol.slack_tol) rows.add(child.P.A.row(k), child.P.b[k]);
  child.P = rows;
  return {child, embed, j0};
}

// ---------------------------------------------------------------------------
// Base cases in canonical coordinates

inline HullRep base_linear(const CanonicalSet& c) {
  SocLeaf leaf;
  leaf.P = c.P;
  leaf.E = Mat(0, c.dim());
  if (c.n_l == 1) {
    Vect row(c.dim(), 0.0);
    row[c.n_qp + c.n_qm] = 1.0;
    leaf.E.append_row(row);
    leaf.e.push_back(c.g);
  }
  if (soc_leaf_empty(leaf, c.tol)) return nullptr;
  return make_soc_leaf(std::move(leaf), c.n_l == 1 ? "linear-hyperplane" : "constant-equation");
}

/// ||(2 sq, t - 1)|| <= t + 1 with t = sigma (g - y), i.e. ||sq||^2 <= t.
inline SocConstraint one_sided_cone(const CanonicalSet& c) {
  const std::size_t n = c.dim();
  const std::size_t k = c.n_qp + c.n_qm;
  const double sigma = c.n_qm == 0 ? 1.0 : -1.0;
  const bool has_y = c.n_l == 1;
  SocConstraint s;
  s.A = Mat(k + 1, n);
  s.b = Vect(k + 1, 0.0);
  s.c = Vect(n, 0.0);
  for (std::size_t i = 0; i < k; ++i) s.A(i, i) = 2.0;
  if (has_y) {
    s.A(k, k) = -sigma;
    s.c[k] = -sigma;
  }
  s.b[k] = sigma * c.g - 1.0;
  s.d = sigma * c.g + 1.0;
  return s;
}

inline HullRep base_one_sided(const CanonicalSet& c) {
  SocConstraint cone = one_sided_cone(c);
  SocLeaf convex_part;
  convex_part.P = c.P;
  convex_part.socs.push_back(cone);
  if (soc_leaf_empty(convex_part, c.tol)) return nullptr;
  VPolytope outer = reverse_convex_hull_via_edges(c.P, cone, c.tol);
  if (outer.vertices.empty()) return nullptr;
  return make_intersection({make_soc_leaf(std::move(convex_part), "one-sided-squares: convex part"),
                            make_vpoly_leaf(std::move(outer), "one-sided-squares: reverse-convex part")},
                           "one-sided-squares");
}

/// ||(sqrt g, x)|| <= side * w
inline SocConstraint single_square_cone(const CanonicalSet& c, double side) {
  const std::size_t n = c.dim();
  const std::size_t m = c.n_qm;
  const std::size_t off = c.g > 0.0 ? 1 : 0;
  SocConstraint s;
  s.A = Mat(m + off, n);
  s.b = Vect(m + off, 0.0);
  if (off) s.b[0] = std::sqrt(c.g);
  for (std::size_t j = 0; j < m; ++j) s.A(off + j, 1 + j) = 1.0;
  s.c = Vect(n, 0.0);
  s.c[0] = side;
  s.d = 0.0;
  return s;
}

inline HullRep base_single_square(const CanonicalSet& c) {
  const std::size_t n = c.dim();
  if (c.n_qp == 0) {
    // -sum x^2 = g has at most the origin
    if (c.g > 0.0) return nullptr;
    Vect origin(n, 0.0);
    if (!c.P.contains(origin, c.tol.slack_tol)) return nullptr;
    VPolytope vp;
    vp.dim = n;
    vp.vertices.push_back(origin);
    return make_vpoly_leaf(std::move(vp), "single-positive-square: origin");
  }
  std::vector<HullRep> convex_parts, outer_parts;
  for (double side : {1.0, -1.0}) {
    SocConstraint cone = single_square_cone(c, side);
    SocLeaf leaf;
    leaf.P = c.P;
    leaf.socs.push_back(cone);
    if (!soc_leaf_empty(leaf, c.tol))
      convex_parts.push_back(make_soc_leaf(std::move(leaf), side > 0 ? "single-positive-square: w >= norm"
                                                                      : "single-positive-square: -w >= norm"));
    HPolytope half = c.P;
    Vect row(n, 0.0);
    row[0] = -side;
    half.add(row, 0.0);
    if (is_empty(half, c.tol)) continue;
    VPolytope outer = reverse_convex_hull_via_edges(half, cone, c.tol);
    if (!outer.vertices.empty())
      outer_parts.push_back(make_vpoly_leaf(std::move(outer), side > 0 ? "single-positive-square: w <= norm, w >= 0"
                                                                       : "single-positive-square: -w <= norm, w <= 0"));
  }
  HullRep convex = make_disjunction(std::move(convex_parts), "single-positive-square: convex parts");
  HullRep outer = make_disjunction(std::move(outer_parts), "single-positive-square: reverse-convex parts");
  return make_intersection({convex, outer}, "single-positive-square");
}

// ---------------------------------------------------------------------------
// Ruled-surface witness

/// Direction (u, v) of a line through p contained in
/// sum w^2 - sum x^2 = g, for canonical counts (>= 2, >= 1, 0, 0).
inline std::optional<Vect> ruled_line_witness(const CanonicalSet& c, std::span<const double> p) {
  if (!(c.n_qp >= 2 && c.n_qm >= 1 && c.n_l == 0 && c.n_o == 0)) return std::nullopt;
  const std::size_t n = c.dim();
  if (p.size() != n) throw Error(ErrorCode::InvalidInput, "ruled_line_witness: point dimension");
  if (std::abs(c.residual(p)) > c.tol.surface_tol * (1.0 + dot(p, p)))
    throw Error(ErrorCode::InvalidInput, "ruled_line_witness: point is off the surface");
  Vect dir(n, 0.0);
  std::span<const double> a = p.subspan(0, c.n_qp);
  const double na = norm2(a);
  if (norm_inf(p) <= c.tol.surface_tol && c.g == 0.0) {
    dir[0] = 1.0;
    dir[c.n_qp] = 1.0;
    return dir;
  }
  if (na == 0.0) return std::nullopt;
  // v = e_1, u on the unit sphere with a'u = b_1
  const double b1 = p[c.n_qp];
  const double ratio = std::clamp(b1 / na, -1.0, 1.0);
  Vect unit(a.begin(), a.end());
  for (double& x : unit) x /= na;
  Mat perp = orthogonal_complement(unit);
  const double side = std::sqrt(std::max(0.0, 1.0 - ratio * ratio));
  for (std::size_t i = 0; i < c.n_qp; ++i) dir[i] = ratio * unit[i] + side * perp(0, i);
  dir[c.n_qp] = 1.0;
  return dir;
}

// ---------------------------------------------------------------------------
// Driver

namespace detail {

inline bool vpoly_chain(const HullRep& h, AffineMap& acc, const VPolytope*& vp) {
  if (!h) return false;
  if (h->kind == NodeKind::VPolyLeaf) {
    vp = &h->vpoly;
    return true;
  }
  if (h->kind == NodeKind::AffineImage) {
    acc = acc.after(h->map);
    return vpoly_chain(h->children.front(), acc, vp);
  }
  return false;
}

/// Point-set children listing exactly the same points as an earlier one are dropped.
inline std::vector<HullRep> drop_duplicate_point_sets(std::vector<HullRep> kids, std::size_t dim) {
  std::vector<std::vector<Vect>> seen;
  std::vector<HullRep> out;
  for (auto& k : kids) {
    AffineMap acc = AffineMap::identity(dim);
    const VPolytope* vp = nullptr;
    if (!vpoly_chain(k, acc, vp)) {
      out.push_back(std::move(k));
      continue;
    }
    std::vector<Vect> pts;
    for (const auto& v : vp->vertices) {
      Vect x = acc(v);
      for (double& xi : x) xi = std::round(xi * 1e9) / 1e9 + 0.0;
      pts.push_back(std::move(x));
    }
    std::sort(pts.begin(), pts.end());
    if (std::find(seen.begin(), seen.end(), pts) != seen.end()) continue;
    seen.push_back(std::move(pts));
    out.push_back(std::move(k));
  }
  return out;
}

class Builder {
 public:
  Builder(const BuildOptions& opt, std::size_t ambient) : opt_(opt) {
    max_depth_ = opt.max_depth ? opt.max_depth : ambient;
  }

  HullRep node(const QuadInstance& inst, std::size_t depth) {
    const std::size_t n = inst.dim();
    if (depth > max_depth_) throw Error(ErrorCode::BudgetExceeded, "recursion depth cap exceeded");
    if (n == 0) return point(inst, depth);

    Embedded emb;
    try {
      emb = drop_to_fulldim(inst);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Infeasible) throw;
      emit(depth, n, {0, 0, 0, 0}, "Empty", "empty-polytope");
      return nullptr;
    }
    if (emb.reduced) {
      emit(depth, n, {0, 0, 0, 0}, "AffineHull", "reduced to dim " + std::to_string(emb.inst.dim()));
      return apply_map(emb.embed, node(emb.inst, depth), "affine-hull reduction");
    }
    if (n == 1) return univariate(inst, depth);

    CanonicalSet cs = canonicalize(inst, opt_.aggregate_linear);
    Classification cl = classify(cs, false);
    const std::size_t line = emit(depth, n, cs.counts(), to_string(cl.tag), cl.lemma);
    HullRep rep;
    switch (cl.tag) {
      case CaseTag::Empty: return nullptr;
      case CaseTag::BasePoint: rep = nullptr; break;  // only reachable at dimension 0
      case CaseTag::BaseLinear: rep = counted(base_linear(cs)); break;
      case CaseTag::BaseOneSided: rep = counted(base_one_sided(cs)); break;
      case CaseTag::BaseSingleSquare: rep = counted(base_single_square(cs)); break;
      case CaseTag::RecurseFacets: rep = recurse(cs, cl, depth, line); break;
    }
    return apply_map(cs.to_original, rep, cl.lemma);
  }

  std::vector<TraceLine> trace;
  std::size_t leaves = 0;

 private:
  std::size_t emit(std::size_t depth, std::size_t dim, std::array<std::size_t, 4> counts, std::string tag,
                   std::string lemma) {
    trace.push_back({depth, dim, counts, std::move(tag), std::move(lemma), 0});
    return trace.size() - 1;
  }

  HullRep counted(HullRep h) {
    leaves += shape(h).leaves;
    if (leaves > opt_.max_leaves)
      throw Error(ErrorCode::BudgetExceeded,
                  "leaf budget of " + std::to_string(opt_.max_leaves) + " exceeded during hull construction");
    return h;
  }

  HullRep point(const QuadInstance& inst, std::size_t depth) {
    const bool on = std::abs(inst.g) <= inst.tol.surface_tol * (1.0 + inst.data_scale()) &&
                    inst.P.contains(Vect{}, inst.tol.slack_tol);
    emit(depth, 0, {0, 0, 0, 0}, on ? "BasePoint" : "Empty", "constant-equation");
    if (!on) return nullptr;
    VPolytope vp;
    vp.vertices.push_back({});
    return counted(make_vpoly_leaf(std::move(vp), "point"));
  }

  HullRep univariate(const QuadInstance& inst, std::size_t depth) {
    double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < inst.P.rows(); ++i) {
      const double a = inst.P.A(i, 0), b = inst.P.b[i];
      if (a > 0) hi = std::min(hi, b / a);
      else if (a < 0) lo = std::max(lo, b / a);
    }
    const double q = inst.Q(0, 0), a = inst.alpha[0];
    const double scale = 1.0 + inst.data_scale();
    const double zero = inst.tol.eig_tol * scale;
    std::vector<double> roots;
    const double slack = inst.tol.slack_tol * (1.0 + std::max(std::abs(lo), std::abs(hi)));
    detail::line_roots(q, a, -inst.g, lo - slack, hi + slack, zero, roots);
    for (double& r : roots) r = std::clamp(r, lo, hi);
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    const bool quad = std::abs(q) > zero;
    const bool lin = std::abs(a) > zero;
    emit(depth, 1, {quad && q > 0 ? 1u : 0u, quad && q < 0 ? 1u : 0u, !quad && lin ? 1u : 0u, !quad && !lin ? 1u : 0u},
         roots.empty() ? "Empty" : "Univariate", "exact-roots");
    if (roots.empty()) return nullptr;
    VPolytope vp;
    vp.dim = 1;
    for (double r : roots) vp.vertices.push_back({r});
    if (vp.vertices.size() == 2) vp.edges.emplace_back(0, 1);
    return counted(make_vpoly_leaf(std::move(vp), "exact-roots"));
  }

  HullRep recurse(const CanonicalSet& cs, const Classification& cl, std::size_t depth, std::size_t line) {
    QuadInstance canon = cs.as_instance();
    HPolytope F = facets(cs.P, cs.tol);
    canon.P = F;
    std::vector<HullRep> kids;
    for (std::size_t i = 0; i < F.rows(); ++i) {
      FacetChild fc = facet_restrict(canon, F, i);
      HullRep child = node(fc.inst, depth + 1);
      if (!child && opt_.check_empty_children) confirm_empty(fc.inst);
      kids.push_back(apply_map(fc.embed, child, "facet " + std::to_string(i)));
    }
    kids = drop_duplicate_point_sets(std::move(kids), cs.dim());
    std::erase(kids, nullptr);
    trace[line].children = kids.size();
    return make_disjunction(std::move(kids), cl.lemma);
  }

  void confirm_empty(const QuadInstance& inst) {
    if (inst.dim() == 0) return;
    SurfaceSample s;
    try {
      s = sample_surface(inst, opt_.empty_check_density, 7);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Infeasible) return;
      throw;
    }
    if (!s.points.empty()) {
      std::ostringstream os;
      os << "facet child declared empty but the sampling oracle found " << s.points.size()
         << " surface points, first at (";
      for (std::size_t j = 0; j < s.points[0].size(); ++j) os << (j ? "," : "") << s.points[0][j];
      os << ") with residual " << s.residuals[0];
      throw Error(ErrorCode::Internal, os.str());
    }
  }

  BuildOptions opt_;
  std::size_t max_depth_ = 0;
};

}  // namespace detail

inline BuildResult build_hull(const QuadInstance& inst, const BuildOptions& opt = {}) {
  if (!is_bounded(inst.P, inst.tol)) throw Error(ErrorCode::Unbounded, "the polytope is unbounded");
  detail::Builder b(opt, inst.dim());
  BuildResult r;
  r.hull = b.node(inst, 0);
  r.trace = std::move(b.trace);
  r.leaves = b.leaves;
  if (!r.hull) throw Error(ErrorCode::Infeasible, "the set is empty");
  return r;
}

}  // namespace quadhull
