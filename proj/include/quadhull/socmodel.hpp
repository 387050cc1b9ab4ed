/**
 * @file socmodel.hpp
 * @brief Flattened extended formulation of a hull tree: variables, linear
 * rows and second-order cones over affine expressions. Optimization,
 * membership, statistics and text export (conic benchmark format and a
 * readable listing).
 */
#pragma once

#include <cstdio>
#include <iomanip>
#include <sstream>
#include <tuple>

#include "quadhull/hullrep.hpp"

namespace quadhull {

/// sum coef * var + constant
struct LinExpr {
  std::vector<std::pair<std::size_t, double>> terms;
  double constant = 0.0;

  static LinExpr var(std::size_t i, double coef = 1.0) { return {{{i, coef}}, 0.0}; }
  static LinExpr value(double v) { return {{}, v}; }

  void add(const LinExpr& o, double f = 1.0) {
    if (f == 0.0) return;
    for (const auto& [i, v] : o.terms) terms.emplace_back(i, f * v);
    constant += f * o.constant;
  }

  /// Sorted, merged, zeros dropped.
  void tidy() {
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<std::size_t, double>> out;
    for (const auto& t : terms) {
      if (!out.empty() && out.back().first == t.first) out.back().second += t.second;
      else out.push_back(t);
    }
    std::erase_if(out, [](const auto& t) { return t.second == 0.0; });
    terms = std::move(out);
  }

  double eval(std::span<const double> x) const {
    double s = constant;
    for (const auto& [i, v] : terms) s += v * x[i];
    return s;
  }
};

struct SocProgram {
  struct Row {
    LinExpr expr;
    std::string note;
  };
  /// ||lhs|| <= rhs
  struct Cone {
    std::vector<LinExpr> lhs;
    LinExpr rhs;
    std::string note;
  };

  std::size_t num_vars = 0;
  std::vector<std::string> var_names;
  std::vector<std::size_t> original;  ///< variable index of each original coordinate
  std::vector<Row> equalities;        ///< expr = 0
  std::vector<Row> inequalities;      ///< expr <= 0
  std::vector<Cone> cones;
  TreeShape tree;

  std::size_t add_var(std::string name) {
    var_names.push_back(std::move(name));
    return num_vars++;
  }
};

namespace detail {

class Flattener {
 public:
  explicit Flattener(SocProgram& p) : p_(p) {}

  std::vector<LinExpr> emit(const HullRep& h, const LinExpr& scale, const std::string& path) {
    switch (h->kind) {
      case NodeKind::VPolyLeaf: return vpoly(*h, scale, path);
      case NodeKind::ConvexSocLeaf: return soc(*h, scale, path);
      case NodeKind::AffineImage: {
        auto inner = emit(h->children.front(), scale, path + ".a");
        std::vector<LinExpr> out(h->dim);
        for (std::size_t i = 0; i < h->dim; ++i) {
          for (std::size_t j = 0; j < inner.size(); ++j) out[i].add(inner[j], h->map.L(i, j));
          out[i].add(scale, h->map.t[i]);
          out[i].tidy();
        }
        return out;
      }
      case NodeKind::Intersection: {
        std::vector<LinExpr> first;
        for (std::size_t k = 0; k < h->children.size(); ++k) {
          auto part = emit(h->children[k], scale, path + ".i" + std::to_string(k));
          if (k == 0) {
            first = std::move(part);
            continue;
          }
          for (std::size_t j = 0; j < first.size(); ++j) {
            LinExpr tie = part[j];
            tie.add(first[j], -1.0);
            tie.tidy();
            p_.equalities.push_back({std::move(tie), h->note + " [" + path + "] intersection link"});
          }
        }
        return first;
      }
      case NodeKind::Disjunction: {
        std::vector<LinExpr> out(h->dim);
        LinExpr sum;
        for (std::size_t k = 0; k < h->children.size(); ++k) {
          const std::string sub = path + ".d" + std::to_string(k);
          const std::size_t lam = p_.add_var(sub + ".lambda");
          p_.inequalities.push_back({LinExpr::var(lam, -1.0), h->note + " [" + sub + "] weight >= 0"});
          sum.add(LinExpr::var(lam));
          auto part = emit(h->children[k], LinExpr::var(lam), sub);
          for (std::size_t j = 0; j < h->dim; ++j) out[j].add(part[j]);
        }
        sum.add(scale, -1.0);
        sum.tidy();
        p_.equalities.push_back({std::move(sum), h->note + " [" + path + "] weights sum"});
        for (auto& e : out) e.tidy();
        return out;
      }
    }
    throw Error(ErrorCode::Internal, "unknown hull node");
  }

 private:
  std::vector<LinExpr> vpoly(const HullNode& h, const LinExpr& scale, const std::string& path) {
    const auto& V = h.vpoly.vertices;
    std::vector<LinExpr> out(h.dim);
    if (V.size() == 1) {
      for (std::size_t j = 0; j < h.dim; ++j) {
        out[j].add(scale, V[0][j]);
        out[j].tidy();
      }
      return out;
    }
    LinExpr sum;
    for (std::size_t k = 0; k < V.size(); ++k) {
      const std::size_t mu = p_.add_var(path + ".mu" + std::to_string(k));
      p_.inequalities.push_back({LinExpr::var(mu, -1.0), h.note + " [" + path + "] vertex weight >= 0"});
      sum.add(LinExpr::var(mu));
      for (std::size_t j = 0; j < h.dim; ++j)
        if (V[k][j] != 0.0) out[j].add(LinExpr::var(mu, V[k][j]));
    }
    sum.add(scale, -1.0);
    sum.tidy();
    p_.equalities.push_back({std::move(sum), h.note + " [" + path + "] vertex weights sum"});
    for (auto& e : out) e.tidy();
    return out;
  }

  std::vector<LinExpr> soc(const HullNode& h, const LinExpr& scale, const std::string& path) {
    const SocLeaf& leaf = h.soc;
    const std::size_t n = h.dim;
    std::vector<LinExpr> z(n);
    for (std::size_t j = 0; j < n; ++j) z[j] = LinExpr::var(p_.add_var(path + ".v" + std::to_string(j)));
    auto row_expr = [&](std::span<const double> a, double rhs_times_scale) {
      LinExpr e;
      for (std::size_t j = 0; j < n; ++j)
        if (a[j] != 0.0) e.add(z[j], a[j]);
      e.add(scale, rhs_times_scale);
      e.tidy();
      return e;
    };
    for (std::size_t i = 0; i < leaf.P.rows(); ++i)
      p_.inequalities.push_back({row_expr(leaf.P.A.row(i), -leaf.P.b[i]), h.note + " [" + path + "] polytope row"});
    for (std::size_t i = 0; i < leaf.E.rows(); ++i)
      p_.equalities.push_back({row_expr(leaf.E.row(i), -leaf.e[i]), h.note + " [" + path + "] equation"});
    for (const auto& s : leaf.socs) {
      SocProgram::Cone c;
      for (std::size_t i = 0; i < s.A.rows(); ++i) c.lhs.push_back(row_expr(s.A.row(i), s.b[i]));
      c.rhs = row_expr(s.c, s.d);
      c.note = h.note + " [" + path + "] cone";
      p_.cones.push_back(std::move(c));
    }
    return z;
  }

  SocProgram& p_;
};

}  // namespace detail

/// Extended formulation whose projection onto the original variables is the
/// set described by h.
inline SocProgram flatten(const HullRep& h) {
  if (!h) throw Error(ErrorCode::Infeasible, "cannot flatten an empty hull");
  SocProgram p;
  for (std::size_t j = 0; j < h->dim; ++j) p.original.push_back(p.add_var("x" + std::to_string(j)));
  detail::Flattener f(p);
  auto out = f.emit(h, LinExpr::value(1.0), "r");
  for (std::size_t j = 0; j < h->dim; ++j) {
    LinExpr link = LinExpr::var(p.original[j]);
    link.add(out[j], -1.0);
    link.tidy();
    p.equalities.push_back({std::move(link), "original variable x" + std::to_string(j)});
  }
  p.tree = shape(h);
  return p;
}

// ---------------------------------------------------------------------------
// Solver bridge

namespace detail {

inline SparseRow to_row(const LinExpr& e, double sign = 1.0) {
  SparseRow r;
  for (const auto& [i, v] : e.terms) {
    r.idx.push_back(i);
    r.val.push_back(sign * v);
  }
  return r;
}

/// Program constraints in standard form; `extra_vars` columns are appended.
inline SparseConeProblem to_problem(const SocProgram& p, std::size_t extra_vars = 0) {
  SparseConeProblem sp;
  sp.num_vars = p.num_vars + extra_vars;
  sp.c.assign(sp.num_vars, 0.0);
  for (const auto& r : p.inequalities) {
    sp.G.push_back(to_row(r.expr));
    sp.h.push_back(-r.expr.constant);
  }
  sp.lin = sp.G.size();
  for (const auto& c : p.cones) {
    sp.soc_dims.push_back(1 + c.lhs.size());
    sp.G.push_back(to_row(c.rhs, -1.0));
    sp.h.push_back(c.rhs.constant);
    for (const auto& l : c.lhs) {
      sp.G.push_back(to_row(l, -1.0));
      sp.h.push_back(l.constant);
    }
  }
  for (const auto& r : p.equalities) {
    sp.E.push_back(to_row(r.expr));
    sp.e.push_back(-r.expr.constant);
  }
  return sp;
}

inline void expect_solved(const ConeSolution& s, const char* what) {
  switch (s.status) {
    case SolveStatus::Optimal: return;
    case SolveStatus::Infeasible: throw Error(ErrorCode::Infeasible, std::string(what) + ": program is infeasible");
    case SolveStatus::Unbounded: throw Error(ErrorCode::Unbounded, std::string(what) + ": program is unbounded");
    default: throw Error(ErrorCode::NumericFailure, std::string(what) + ": solver did not converge");
  }
}

}  // namespace detail

struct Membership {
  bool member = false;
  double violation = 0.0;  ///< distance from x to the projected set, as found by the solver
};

namespace detail {

/// min tau s.t. ||x_cols - x|| <= tau, appended to sp as one extra column.
inline Membership distance_to(SparseConeProblem sp, std::span<const std::size_t> cols, std::span<const double> x,
                              double tol, const SolverOptions& opt) {
  if (x.size() != cols.size()) throw Error(ErrorCode::InvalidInput, "membership: point dimension");
  if (!all_finite(x)) throw Error(ErrorCode::InvalidInput, "membership: non-finite point");
  const std::size_t tau = sp.num_vars++;
  sp.c.assign(sp.num_vars, 0.0);
  sp.c[tau] = 1.0;
  sp.soc_dims.push_back(1 + x.size());
  sp.G.push_back({{tau}, {-1.0}});
  sp.h.push_back(0.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    sp.G.push_back({{cols[j]}, {-1.0}});
    sp.h.push_back(-x[j]);
  }
  ConeSolution s = solve(sp, opt);
  expect_solved(s, "membership");
  return {s.x[tau] <= tol, std::max(0.0, s.x[tau])};
}

}  // namespace detail

/// min ||x_orig - x|| over the program.
inline Membership membership(const SocProgram& p, std::span<const double> x, double tol, const SolverOptions& opt = {}) {
  return detail::distance_to(detail::to_problem(p), p.original, x, tol, opt);
}

// ---------------------------------------------------------------------------
// Conic benchmark format

struct CbfModel {
  std::string objsense = "MAX";
  std::size_t num_vars = 0;
  std::vector<std::pair<std::string, std::size_t>> var_domains;
  std::size_t num_cons = 0;
  std::vector<std::pair<std::string, std::size_t>> con_domains;
  std::vector<std::pair<std::size_t, double>> obj;
  std::vector<std::tuple<std::size_t, std::size_t, double>> a;
  std::vector<std::pair<std::size_t, double>> b;
  std::vector<std::size_t> original;

  bool operator==(const CbfModel&) const = default;
};

/// Free program variables first, then one slack block per cone (domain Q)
/// tied to the cone expressions by equalities. Constraints: equalities (L=)
/// then inequalities expr <= 0 (L-).
inline CbfModel to_cbf(const SocProgram& p, std::span<const double> objective = {}) {
  CbfModel m;
  std::size_t slack = p.num_vars;
  m.var_domains.emplace_back("F", p.num_vars);
  for (const auto& c : p.cones) m.var_domains.emplace_back("Q", 1 + c.lhs.size());
  m.num_vars = slack;
  for (const auto& c : p.cones) m.num_vars += 1 + c.lhs.size();
  if (p.num_vars == 0) m.var_domains.erase(m.var_domains.begin());
  m.original = p.original;
  if (!objective.empty()) {
    if (objective.size() != p.original.size()) throw Error(ErrorCode::InvalidInput, "objective length");
    for (std::size_t j = 0; j < objective.size(); ++j)
      if (objective[j] != 0.0) m.obj.emplace_back(p.original[j], objective[j]);
  }
  std::size_t row = 0;
  auto put = [&](const LinExpr& e) {
    for (const auto& [i, v] : e.terms) m.a.emplace_back(row, i, v);
    if (e.constant != 0.0) m.b.emplace_back(row, e.constant);
    ++row;
  };
  for (const auto& r : p.equalities) put(r.expr);
  for (const auto& c : p.cones) {
    LinExpr t = LinExpr::var(slack++);
    t.add(c.rhs, -1.0);
    t.tidy();
    put(t);
    for (const auto& l : c.lhs) {
      LinExpr u = LinExpr::var(slack++);
      u.add(l, -1.0);
      u.tidy();
      put(u);
    }
  }
  const std::size_t eq = row;
  for (const auto& r : p.inequalities) put(r.expr);
  m.num_cons = row;
  if (eq) m.con_domains.emplace_back("L=", eq);
  if (row > eq) m.con_domains.emplace_back("L-", row - eq);
  return m;
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string write_cbf(const CbfModel& m) {
  std::ostringstream os;
  os << "# quadhull conic model\n";
  os << "# original variables:";
  for (std::size_t j : m.original) os << ' ' << j;
  os << "\n\nVER\n3\n\nOBJSENSE\n" << m.objsense << "\n\n";
  if (m.num_vars) {
    os << "VAR\n" << m.num_vars << ' ' << m.var_domains.size() << '\n';
    for (const auto& [d, k] : m.var_domains) os << d << ' ' << k << '\n';
    os << '\n';
  }
  if (m.num_cons) {
    os << "CON\n" << m.num_cons << ' ' << m.con_domains.size() << '\n';
    for (const auto& [d, k] : m.con_domains) os << d << ' ' << k << '\n';
    os << '\n';
  }
  if (!m.obj.empty()) {
    os << "OBJACOORD\n" << m.obj.size() << '\n';
    for (const auto& [j, v] : m.obj) os << j << ' ' << detail::fmt_double(v) << '\n';
    os << '\n';
  }
  if (!m.a.empty()) {
    os << "ACOORD\n" << m.a.size() << '\n';
    for (const auto& [i, j, v] : m.a) os << i << ' ' << j << ' ' << detail::fmt_double(v) << '\n';
    os << '\n';
  }
  if (!m.b.empty()) {
    os << "BCOORD\n" << m.b.size() << '\n';
    for (const auto& [i, v] : m.b) os << i << ' ' << detail::fmt_double(v) << '\n';
    os << '\n';
  }
  return os.str();
}

inline CbfModel read_cbf(const std::string& text) {
  CbfModel m;
  std::istringstream in(text);
  std::string line;
  auto fail = [](const std::string& why) { return Error(ErrorCode::InvalidInput, "conic model: " + why); };
  auto next = [&]() -> std::string {
    while (std::getline(in, line)) {
      if (line.rfind("# original variables:", 0) == 0) {
        std::istringstream ls(line.substr(21));
        std::size_t j;
        while (ls >> j) m.original.push_back(j);
        continue;
      }
      if (line.empty() || line[0] == '#') continue;
      return line;
    }
    return {};
  };
  auto count = [&](const std::string& s) {
    try {
      return static_cast<std::size_t>(std::stoull(s));
    } catch (...) {
      throw fail("bad count '" + s + "'");
    }
  };
  bool seen_ver = false;
  for (std::string key = next(); !key.empty(); key = next()) {
    if (key == "VER") {
      if (next() != "3") throw fail("unsupported version");
      seen_ver = true;
    } else if (key == "OBJSENSE") {
      m.objsense = next();
      if (m.objsense != "MAX" && m.objsense != "MIN") throw fail("bad OBJSENSE");
    } else if (key == "VAR" || key == "CON") {
      std::istringstream hs(next());
      std::size_t total = 0, k = 0;
      if (!(hs >> total >> k)) throw fail("bad " + key + " header");
      auto& doms = key == "VAR" ? m.var_domains : m.con_domains;
      std::size_t sum = 0;
      for (std::size_t i = 0; i < k; ++i) {
        std::istringstream ds(next());
        std::string d;
        std::size_t c = 0;
        if (!(ds >> d >> c)) throw fail("bad domain line");
        if (key == "VAR" && d != "F" && d != "Q") throw fail("unsupported variable domain " + d);
        if (key == "CON" && d != "L=" && d != "L-") throw fail("unsupported constraint domain " + d);
        doms.emplace_back(d, c);
        sum += c;
      }
      if (sum != total) throw fail(key + " domain sizes do not add up");
      (key == "VAR" ? m.num_vars : m.num_cons) = total;
    } else if (key == "OBJACOORD" || key == "BCOORD") {
      const std::size_t k = count(next());
      for (std::size_t i = 0; i < k; ++i) {
        std::istringstream ls(next());
        std::size_t j;
        double v;
        if (!(ls >> j >> v)) throw fail("bad " + key + " entry");
        (key == "OBJACOORD" ? m.obj : m.b).emplace_back(j, v);
      }
    } else if (key == "ACOORD") {
      const std::size_t k = count(next());
      for (std::size_t i = 0; i < k; ++i) {
        std::istringstream ls(next());
        std::size_t r, j;
        double v;
        if (!(ls >> r >> j >> v)) throw fail("bad ACOORD entry");
        m.a.emplace_back(r, j, v);
      }
    } else {
      throw fail("unsupported section " + key);
    }
  }
  if (!seen_ver) throw fail("missing VER");
  for (const auto& [r, j, v] : m.a)
    if (r >= m.num_cons || j >= m.num_vars) throw fail("ACOORD index out of range");
  for (const auto& [r, v] : m.b)
    if (r >= m.num_cons) throw fail("BCOORD index out of range");
  for (const auto& [j, v] : m.obj)
    if (j >= m.num_vars) throw fail("OBJACOORD index out of range");
  for (std::size_t j : m.original)
    if (j >= m.num_vars) throw fail("original variable index out of range");
  return m;
}

/// Standard form of a model; the objective is negated for MAX. A cone
/// variable used only in one equality, with coefficient 1, is replaced by the
/// rest of that row, so slack blocks written by to_cbf disappear again.
struct CbfProblem {
  SparseConeProblem prob;
  std::vector<std::size_t> column;  ///< model variable -> problem column, npos when eliminated
};

inline CbfProblem to_problem(const CbfModel& m) {
  constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::vector<SparseRow> rows(m.num_cons);
  Vect bconst(m.num_cons, 0.0);
  for (const auto& [r, j, v] : m.a) {
    rows[r].idx.push_back(j);
    rows[r].val.push_back(v);
  }
  for (const auto& [r, v] : m.b) bconst[r] += v;
  std::vector<bool> is_eq(m.num_cons, false);
  {
    std::size_t r0 = 0;
    for (const auto& [d, k] : m.con_domains) {
      for (std::size_t r = r0; r < r0 + k; ++r) is_eq[r] = d == "L=";
      r0 += k;
    }
  }
  std::vector<std::size_t> uses(m.num_vars, 0), home(m.num_vars, npos);
  std::vector<double> home_coef(m.num_vars, 0.0);
  for (std::size_t r = 0; r < m.num_cons; ++r)
    for (std::size_t t = 0; t < rows[r].idx.size(); ++t) {
      const std::size_t j = rows[r].idx[t];
      ++uses[j];
      home[j] = r;
      home_coef[j] = rows[r].val[t];
    }
  for (const auto& [j, v] : m.obj) uses[j] += 2;

  // which Q blocks can be substituted out
  std::vector<bool> dropped_row(m.num_cons, false), gone(m.num_vars, false);
  std::vector<std::pair<std::size_t, std::size_t>> blocks;  // (first var, dim)
  std::vector<bool> block_gone;
  {
    std::size_t v0 = 0;
    for (const auto& [d, k] : m.var_domains) {
      if (d == "Q") {
        bool ok = true;
        std::vector<std::size_t> seen_rows;
        for (std::size_t j = v0; j < v0 + k && ok; ++j) {
          ok = uses[j] == 1 && is_eq[home[j]] && home_coef[j] == 1.0;
          if (ok) seen_rows.push_back(home[j]);
        }
        std::sort(seen_rows.begin(), seen_rows.end());
        ok = ok && std::adjacent_find(seen_rows.begin(), seen_rows.end()) == seen_rows.end();
        blocks.emplace_back(v0, k);
        block_gone.push_back(ok);
        if (ok)
          for (std::size_t j = v0; j < v0 + k; ++j) {
            gone[j] = true;
            dropped_row[home[j]] = true;
          }
      }
      v0 += k;
    }
  }
  // a substituted row must not mention another substituted variable
  for (std::size_t r = 0; r < m.num_cons; ++r)
    if (dropped_row[r]) {
      std::size_t own = 0;
      for (std::size_t j : rows[r].idx) own += gone[j];
      if (own != 1) throw Error(ErrorCode::InvalidInput, "conic model: cone rows reference each other");
    }

  CbfProblem out;
  out.column.assign(m.num_vars, npos);
  std::size_t cols = 0;
  for (std::size_t j = 0; j < m.num_vars; ++j)
    if (!gone[j]) out.column[j] = cols++;
  SparseConeProblem& sp = out.prob;
  sp.num_vars = cols;
  sp.c.assign(cols, 0.0);
  const double sense = m.objsense == "MAX" ? -1.0 : 1.0;
  for (const auto& [j, v] : m.obj) sp.c[out.column[j]] += sense * v;
  // rest of row r with variable `skip` removed, columns renumbered, times sign
  auto remap = [&](std::size_t r, std::size_t skip, double sign) {
    SparseRow o;
    for (std::size_t t = 0; t < rows[r].idx.size(); ++t) {
      if (rows[r].idx[t] == skip) continue;
      o.idx.push_back(out.column[rows[r].idx[t]]);
      o.val.push_back(sign * rows[r].val[t]);
    }
    return o;
  };
  for (std::size_t r = 0; r < m.num_cons; ++r) {
    if (dropped_row[r]) continue;
    if (is_eq[r]) {
      sp.E.push_back(remap(r, npos, 1.0));
      sp.e.push_back(-bconst[r]);
    } else {
      sp.G.push_back(remap(r, npos, 1.0));
      sp.h.push_back(-bconst[r]);
    }
  }
  sp.lin = sp.G.size();
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto [v0, d] = blocks[k];
    sp.soc_dims.push_back(d);
    for (std::size_t j = v0; j < v0 + d; ++j) {
      if (block_gone[k]) {
        // v_j + rest = 0, cone slack s = v_j = h - G x with G = rest, h = -b
        sp.G.push_back(remap(home[j], j, 1.0));
        sp.h.push_back(-bconst[home[j]]);
      } else {
        sp.G.push_back({{out.column[j]}, {-1.0}});
        sp.h.push_back(0.0);
      }
    }
  }
  return out;
}

struct Optimum {
  double value = 0.0;
  Vect point;  ///< original variables
};

inline Optimum optimize(const CbfModel& m, const SolverOptions& opt = {}) {
  for (std::size_t j : m.original)
    if (j >= m.num_vars) throw Error(ErrorCode::InvalidInput, "conic model: original variable index out of range");
  CbfProblem cp = to_problem(m);
  ConeSolution s = solve(cp.prob, opt);
  detail::expect_solved(s, "optimize");
  auto value_of = [&](std::size_t j) {
    if (cp.column[j] == std::numeric_limits<std::size_t>::max())
      throw Error(ErrorCode::InvalidInput, "conic model: original variable was substituted out");
    return s.x[cp.column[j]];
  };
  Optimum o;
  for (std::size_t j : m.original) o.point.push_back(value_of(j));
  o.value = 0.0;
  for (const auto& [j, v] : m.obj) o.value += v * value_of(j);
  return o;
}

inline Membership membership(const CbfModel& m, std::span<const double> x, double tol, const SolverOptions& opt = {}) {
  CbfProblem cp = to_problem(m);
  std::vector<std::size_t> cols;
  for (std::size_t j : m.original) {
    if (j >= m.num_vars || cp.column[j] == std::numeric_limits<std::size_t>::max())
      throw Error(ErrorCode::InvalidInput, "conic model: original variable index out of range");
    cols.push_back(cp.column[j]);
  }
  return detail::distance_to(std::move(cp.prob), cols, x, tol, opt);
}

/// max c'x over the program, solved through its conic benchmark form so a
/// re-imported model gives bit-identical answers.
inline Optimum optimize(const SocProgram& p, std::span<const double> c, const SolverOptions& opt = {}) {
  if (c.size() != p.original.size()) throw Error(ErrorCode::InvalidInput, "objective length");
  if (!all_finite(c)) throw Error(ErrorCode::InvalidInput, "objective is not finite");
  Optimum o = optimize(to_cbf(p, c), opt);
  o.value = dot(c, o.point);
  return o;
}

/// Support value of the tree in direction c: disjunctions take the best
/// child, images pull c back, vertex lists are scanned, the rest is solved.
inline Optimum optimize_per_leaf(const HullRep& h, std::span<const double> c, const SolverOptions& opt = {}) {
  if (!h) throw Error(ErrorCode::Infeasible, "empty hull");
  switch (h->kind) {
    case NodeKind::Disjunction: {
      Optimum best;
      best.value = -std::numeric_limits<double>::infinity();
      for (const auto& ch : h->children) {
        Optimum o = optimize_per_leaf(ch, c, opt);
        if (o.value > best.value) best = std::move(o);
      }
      return best;
    }
    case NodeKind::AffineImage: {
      Optimum o = optimize_per_leaf(h->children.front(), h->map.pull_direction(c), opt);
      o.point = h->map(o.point);
      o.value = dot(c, o.point);
      return o;
    }
    case NodeKind::VPolyLeaf: {
      Optimum best;
      best.value = -std::numeric_limits<double>::infinity();
      for (const auto& v : h->vpoly.vertices) {
        const double val = dot(c, v);
        if (val > best.value) best = {val, v};
      }
      return best;
    }
    default: {
      SocProgram p = flatten(h);
      return optimize(p, c, opt);
    }
  }
}

// ---------------------------------------------------------------------------
// Reports

struct ProgramStats {
  std::size_t variables = 0;
  std::size_t equalities = 0;
  std::size_t inequalities = 0;
  std::size_t cones = 0;
  std::size_t cone_rows = 0;
  std::size_t leaves = 0;
  std::size_t depth = 0;
  TreeShape tree;
};

inline ProgramStats stats(const SocProgram& p) {
  ProgramStats s;
  s.variables = p.num_vars;
  s.equalities = p.equalities.size();
  s.inequalities = p.inequalities.size();
  s.cones = p.cones.size();
  for (const auto& c : p.cones) s.cone_rows += 1 + c.lhs.size();
  s.leaves = p.tree.leaves;
  s.depth = p.tree.depth;
  s.tree = p.tree;
  return s;
}

inline std::string format_stats(const ProgramStats& s) {
  std::ostringstream os;
  os << "variables " << s.variables << '\n'
     << "equalities " << s.equalities << '\n'
     << "inequalities " << s.inequalities << '\n'
     << "cones " << s.cones << " (rows " << s.cone_rows << ")\n"
     << "leaves " << s.leaves << " (soc " << s.tree.soc_leaves << ", vertex " << s.tree.vpoly_leaves << ")\n"
     << "disjunctions " << s.tree.disjunctions << '\n'
     << "depth " << s.depth << '\n';
  return os.str();
}

inline std::string write_readable(const SocProgram& p) {
  std::ostringstream os;
  auto expr = [&](const LinExpr& e) {
    std::ostringstream es;
    bool first = true;
    for (const auto& [i, v] : e.terms) {
      es << (first ? "" : " ") << (v < 0 ? "- " : first ? "" : "+ ") << detail::fmt_double(std::abs(v)) << ' '
         << p.var_names[i];
      first = false;
    }
    if (e.constant != 0.0 || first)
      es << (first ? "" : " ") << (e.constant < 0 ? "- " : first ? "" : "+ ") << detail::fmt_double(std::abs(e.constant));
    return es.str();
  };
  os << "# quadhull formulation\n";
  os << "variables " << p.num_vars << '\n';
  for (std::size_t i = 0; i < p.num_vars; ++i) os << "  " << i << ' ' << p.var_names[i] << '\n';
  os << "original";
  for (std::size_t j : p.original) os << ' ' << p.var_names[j];
  os << "\n\nequalities " << p.equalities.size() << '\n';
  for (const auto& r : p.equalities) os << "  " << expr(r.expr) << " = 0    # " << r.note << '\n';
  os << "\ninequalities " << p.inequalities.size() << '\n';
  for (const auto& r : p.inequalities) os << "  " << expr(r.expr) << " <= 0    # " << r.note << '\n';
  os << "\ncones " << p.cones.size() << '\n';
  for (const auto& c : p.cones) {
    os << "  || ";
    for (std::size_t k = 0; k < c.lhs.size(); ++k) os << (k ? ", " : "") << expr(c.lhs[k]);
    os << " || <= " << expr(c.rhs) << "    # " << c.note << '\n';
  }
  return os.str();
}

}  // namespace quadhull
