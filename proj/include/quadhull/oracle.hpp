/**
 * @file oracle.hpp
 * @brief Brute-force ground truth. Points of the quadric surface inside P are
 * found exactly on grid lines laid out in P, in every facet of P and along
 * every edge of P; linear maxima are estimated from those points.
 */
#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <random>
#include <thread>

#include "quadhull/reduction.hpp"

namespace quadhull {

struct SurfaceSample {
  std::vector<Vect> points;
  std::vector<double> residuals;
  double max_residual = 0.0;
  std::size_t density = 0;
  std::uint64_t seed = 0;
  std::size_t lines = 0;
};

struct SampleBox {
  Vect lo, hi;
};

namespace detail {

/// Real roots of q t^2 + b t + c = 0 inside [tlo, thi]. When the equation
/// vanishes identically the whole segment lies on the surface and both ends
/// are returned.
inline void line_roots(double q, double b, double c, double tlo, double thi, double zero, std::vector<double>& out) {
  out.clear();
  if (std::abs(q) <= zero && std::abs(b) <= zero) {
    if (std::abs(c) <= zero) {
      out.push_back(tlo);
      if (thi > tlo) out.push_back(thi);
    }
    return;
  }
  if (std::abs(q) <= zero) {
    out.push_back(-c / b);
  } else {
    double disc = b * b - 4.0 * q * c;
    if (disc < 0.0) {
      if (disc < -zero * (b * b + std::abs(4.0 * q * c))) return;
      disc = 0.0;
    }
    const double sq = std::sqrt(disc);
    const double u = -0.5 * (b + (b >= 0 ? sq : -sq));
    if (u != 0.0) {
      out.push_back(u / q);
      out.push_back(c / u);
    } else {
      out.push_back(0.0);
    }
  }
  std::erase_if(out, [&](double t) { return t < tlo || t > thi; });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

inline std::size_t worker_count(std::size_t threads) {
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  return threads;
}

}  // namespace detail

struct OracleOptions {
  std::size_t eval_cap = 1000000;  ///< grid lines per region and call
  std::size_t threads = 1;
  double accept_tol = 1e-9;
  bool faces = true;  ///< also sample facets and edges of P
};

/// Points x = L z + t with z in Z; P itself, a facet or an edge.
struct SampleRegion {
  AffineMap embed;
  HPolytope Z;
  SampleBox zbox;
  Mat normal;  ///< (L'L)^{-1} L', recovers z from a point of the region
};

class SurfaceOracle {
 public:
  explicit SurfaceOracle(const QuadInstance& inst, OracleOptions opt = {}) : inst_(inst), opt_(opt) {
    const Tolerances& tol = inst.tol;
    const std::size_t n = inst.dim();
    if (n == 0) {
      empty_ = !inst.P.contains(Vect{}, tol.slack_tol);
      return;
    }
    AffineHull hull;
    try {
      hull = affine_hull(inst.P, tol);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Infeasible) throw;
      empty_ = true;
      return;
    }
    const std::size_t k = hull.reduced.dim();
    add_region(hull.embed, hull.reduced);
    if (!opt_.faces || k < 2) return;
    HPolytope F = facets(hull.reduced, tol);
    for (std::size_t i = 0; i < F.rows(); ++i) {
      Vect a(F.A.row(i).begin(), F.A.row(i).end());
      const double na = norm2(a);
      Vect unit = (1.0 / na) * a;
      Mat basis = orthogonal_complement(unit).transpose();
      AffineMap face(basis, (F.b[i] / na) * unit);
      HPolytope Zf(k - 1);
      HPolytope pulled = F.pullback(face);
      for (std::size_t r = 0; r < pulled.rows(); ++r)
        if (r != i && norm2(pulled.A.row(r)) > tol.pivot_tol) Zf.add(pulled.A.row(r), pulled.b[r]);
      add_region(hull.embed.after(face), Zf);
    }
    if (k < 3 || k > tol.dim_cap) return;
    VPolytope V = vertices_and_edges(hull.reduced, tol);
    for (const auto& [i, j] : V.edges) {
      Mat L(k, 1);
      for (std::size_t r = 0; r < k; ++r) L(r, 0) = V.vertices[j][r] - V.vertices[i][r];
      HPolytope seg(1);
      seg.add(Vect{1.0}, 1.0);
      seg.add(Vect{-1.0}, 0.0);
      add_region(hull.embed.after(AffineMap(L, V.vertices[i])), seg);
    }
  }

  bool empty() const { return empty_; }
  const std::vector<SampleRegion>& regions() const { return regions_; }

  /// Grid lines in every region; with `box` only the parts of the regions
  /// meeting that box are gridded.
  SurfaceSample sample(std::size_t density, std::uint64_t seed, const SampleBox* box = nullptr) const {
    SurfaceSample out;
    out.seed = seed;
    out.density = 0;
    if (empty_) return out;
    if (inst_.dim() == 0) {
      if (std::abs(inst_.g) <= opt_.accept_tol * (1.0 + inst_.data_scale())) {
        out.points.push_back({});
        out.residuals.push_back(-inst_.g);
      }
      return out;
    }
    for (std::size_t r = 0; r < regions_.size(); ++r) {
      const SampleRegion& reg = regions_[r];
      SampleBox zb = reg.zbox;
      if (box) {
        auto local = region_box(reg, *box);
        if (!local) continue;
        zb = *local;
      }
      const std::size_t m = scan(reg, zb, density, seed + 7919 * r, out);
      if (r == 0) out.density = m;
    }
    for (double v : out.residuals) out.max_residual = std::max(out.max_residual, std::abs(v));
    return out;
  }

  /// z-box of the part of a region inside an x-box; nullopt when they miss.
  std::optional<SampleBox> region_box(const SampleRegion& reg, const SampleBox& box) const {
    HPolytope Zb = reg.Z;
    for (std::size_t j = 0; j < box.lo.size(); ++j) {
      Vect row(reg.embed.L.row(j).begin(), reg.embed.L.row(j).end());
      Zb.add(row, box.hi[j] - reg.embed.t[j]);
      for (double& v : row) v = -v;
      Zb.add(row, reg.embed.t[j] - box.lo[j]);
    }
    try {
      auto [lo, hi] = bounding_box(Zb, inst_.tol);
      return SampleBox{lo, hi};
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Infeasible) return std::nullopt;
      throw;
    }
  }

  /// Whether x lies in the region, up to `tol`.
  bool region_contains(const SampleRegion& reg, std::span<const double> x, double tol) const {
    Vect d(x.begin(), x.end());
    for (std::size_t j = 0; j < d.size(); ++j) d[j] -= reg.embed.t[j];
    Vect z = reg.normal * d;
    Vect back = reg.embed(z);
    double err = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j) err = std::max(err, std::abs(back[j] - x[j]));
    return err <= tol && reg.Z.contains(z, tol);
  }

  const QuadInstance& instance() const { return inst_; }
  const OracleOptions& options() const { return opt_; }

  /// Lines along each z axis through a jittered grid of the other z
  /// coordinates. Returns the grid size used.
  std::size_t scan(const SampleRegion& reg, const SampleBox& zb, std::size_t density, std::uint64_t seed,
                   SurfaceSample& out) const;

 private:
  void add_region(const AffineMap& embed, const HPolytope& Z) {
    SampleRegion reg;
    reg.embed = embed;
    reg.Z = Z;
    try {
      auto [lo, hi] = bounding_box(Z, inst_.tol);
      reg.zbox = {lo, hi};
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Infeasible) return;
      throw;
    }
    const Mat LT = embed.L.transpose();
    reg.normal = inverse(LT * embed.L) * LT;
    regions_.push_back(std::move(reg));
  }

  QuadInstance inst_;
  OracleOptions opt_;
  std::vector<SampleRegion> regions_;
  bool empty_ = false;
};

inline std::size_t SurfaceOracle::scan(const SampleRegion& reg, const SampleBox& zb, std::size_t density,
                                       std::uint64_t seed, SurfaceSample& out) const {
  const QuadInstance& inst = inst_;
  const std::size_t n = inst.dim();
  const std::size_t k = reg.Z.dim();
  const double scale = 1.0 + inst.data_scale();
  if (k == 0) {
    const Vect& x = reg.embed.t;
    const double r = inst.residual(x);
    ++out.lines;
    if (std::abs(r) <= opt_.accept_tol * scale && inst.P.contains(x, opt_.accept_tol)) {
      out.points.push_back(x);
      out.residuals.push_back(r);
    }
    return 1;
  }

  std::size_t m = std::max<std::size_t>(density, 2);
  auto line_count = [&](std::size_t mm) {
    double c = 1.0;
    for (std::size_t j = 0; j + 1 < k; ++j) c *= static_cast<double>(mm);
    return c * static_cast<double>(k);
  };
  if (k == 1) m = 1;
  while (m > 2 && line_count(m) > static_cast<double>(opt_.eval_cap)) --m;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jit(-0.25, 0.25);
  std::vector<Vect> grid(k);
  for (std::size_t j = 0; j < k; ++j) {
    grid[j].resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      double f = m == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(m - 1);
      if (i > 0 && i + 1 < m) f += jit(rng) / static_cast<double>(m - 1);
      grid[j][i] = zb.lo[j] + f * (zb.hi[j] - zb.lo[j]);
    }
  }
  std::size_t per_axis = 1;
  for (std::size_t j = 0; j + 1 < k; ++j) per_axis *= m;
  out.lines += per_axis * k;

  const HPolytope& P = inst.P;
  auto run = [&](std::size_t axis, std::size_t begin, std::size_t end, std::vector<Vect>& pts,
                 std::vector<double>& res) {
    Vect z(k), d(n), Qd, x(n);
    for (std::size_t j = 0; j < n; ++j) d[j] = reg.embed.L(j, axis);
    Qd = inst.Q * d;
    const double q = dot(d, Qd);
    const double ad = dot(inst.alpha, d);
    const double dn = norm2(d);
    const double zero = 1e-13 * scale * std::max(1.0, dn * dn);
    Vect Ad = P.A * d;
    std::vector<double> roots;
    for (std::size_t idx = begin; idx < end; ++idx) {
      std::size_t rem = idx;
      for (std::size_t j = 0; j < k; ++j) {
        if (j == axis) continue;
        z[j] = grid[j][rem % m];
        rem /= m;
      }
      z[axis] = 0.0;
      Vect x0 = reg.embed(z);
      double tlo = zb.lo[axis] - 1.0, thi = zb.hi[axis] + 1.0;
      bool hit = true;
      for (std::size_t i = 0; i < P.rows() && hit; ++i) {
        const double r = P.b[i] - dot(P.A.row(i), x0);
        if (std::abs(Ad[i]) <= 1e-15) {
          if (r < -opt_.accept_tol) hit = false;
        } else if (Ad[i] > 0) {
          thi = std::min(thi, r / Ad[i]);
        } else {
          tlo = std::max(tlo, r / Ad[i]);
        }
      }
      if (!hit || tlo > thi + opt_.accept_tol) continue;
      if (tlo > thi) tlo = thi = 0.5 * (tlo + thi);
      const double b = 2.0 * dot(Qd, x0) + ad;
      const double c = inst.residual(x0);
      detail::line_roots(q, b, c, tlo, thi, zero, roots);
      for (double t : roots) {
        const double f = (q * t + b) * t + c, df = 2.0 * q * t + b;
        double tt = t;
        if (df != 0.0) {
          const double t2 = std::clamp(t - f / df, tlo, thi);
          const double f2 = (q * t2 + b) * t2 + c;
          if (std::abs(f2) < std::abs(f)) tt = t2;
        }
        for (std::size_t j = 0; j < n; ++j) x[j] = x0[j] + tt * d[j];
        const double r = inst.residual(x);
        if (std::abs(r) > opt_.accept_tol * scale || !P.contains(x, opt_.accept_tol)) continue;
        pts.push_back(x);
        res.push_back(r);
      }
    }
  };

  const std::size_t workers = std::min(detail::worker_count(opt_.threads), std::max<std::size_t>(1, per_axis / 64));
  for (std::size_t axis = 0; axis < k; ++axis) {
    if (workers <= 1) {
      run(axis, 0, per_axis, out.points, out.residuals);
      continue;
    }
    std::vector<std::vector<Vect>> pts(workers);
    std::vector<std::vector<double>> res(workers);
    std::vector<std::thread> pool;
    const std::size_t chunk = (per_axis + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t b = w * chunk, e = std::min(per_axis, b + chunk);
      pool.emplace_back([&, w, b, e] { run(axis, b, e, pts[w], res[w]); });
    }
    for (auto& t : pool) t.join();
    for (std::size_t w = 0; w < workers; ++w) {
      out.points.insert(out.points.end(), pts[w].begin(), pts[w].end());
      out.residuals.insert(out.residuals.end(), res[w].begin(), res[w].end());
    }
  }
  return m;
}

inline SurfaceSample sample_surface(const QuadInstance& inst, std::size_t density, std::uint64_t seed,
                                    const OracleOptions& opt = {}) {
  return SurfaceOracle(inst, opt).sample(density, seed);
}

struct BruteMax {
  bool empty = true;
  double value = -std::numeric_limits<double>::infinity();
  Vect point;
  std::vector<double> trace;  ///< incumbent after each refinement
  std::size_t lines = 0;
};

/// Lower bound on max c'x over S: densities 100, 200, 400, ... until two
/// rounds agree within 1e-4 (1 + |value|), then three zoom rounds in the
/// regions holding the incumbent, each shrinking the box by 10.
inline BruteMax brute_max(const SurfaceOracle& oracle, std::span<const double> c, std::uint64_t seed = 0,
                          std::size_t start_density = 100) {
  BruteMax out;
  if (oracle.empty()) return out;
  const QuadInstance& inst = oracle.instance();
  auto absorb = [&](const SurfaceSample& s) {
    out.lines += s.lines;
    for (const auto& p : s.points) {
      const double v = dot(c, p);
      if (v > out.value) {
        out.value = v;
        out.point = p;
        out.empty = false;
      }
    }
    out.trace.push_back(out.value);
  };

  double prev = -std::numeric_limits<double>::infinity();
  std::size_t density = start_density, last = 0;
  for (int round = 0; round < 8; ++round) {
    SurfaceSample s = oracle.sample(density, seed + static_cast<std::uint64_t>(round));
    if (s.density == last) break;  // the line budget no longer allows a finer grid
    last = s.density;
    absorb(s);
    if (round > 0 && std::abs(out.value - prev) <= 1e-4 * (1.0 + std::abs(out.value))) break;
    prev = out.value;
    density *= 2;
  }
  if (out.empty || inst.dim() == 0) return out;

  const auto& full = oracle.regions().front().zbox;
  double half = 0.0;
  for (std::size_t j = 0; j < full.lo.size(); ++j) half = std::max(half, full.hi[j] - full.lo[j]);
  half /= static_cast<double>(std::max<std::size_t>(last, 2));
  const double near = 1e-7 * (1.0 + norm_inf(out.point));
  for (int zoom = 0; zoom < 3; ++zoom) {
    SampleBox local{out.point, out.point};
    for (std::size_t j = 0; j < local.lo.size(); ++j) {
      local.lo[j] -= half;
      local.hi[j] += half;
    }
    SurfaceSample s;
    s.seed = seed + 1000 + static_cast<std::uint64_t>(zoom);
    for (const auto& reg : oracle.regions()) {
      if (!oracle.region_contains(reg, out.point, near + half)) continue;
      auto zb = oracle.region_box(reg, local);
      if (!zb) continue;
      oracle.scan(reg, *zb, start_density, s.seed, s);
    }
    absorb(s);
    half /= 10.0;
  }
  return out;
}

inline BruteMax brute_max(const QuadInstance& inst, std::span<const double> c, std::uint64_t seed = 0,
                          std::size_t start_density = 100, const OracleOptions& opt = {}) {
  return brute_max(SurfaceOracle(inst, opt), c, seed, start_density);
}

inline void write_csv(std::ostream& os, const SurfaceSample& s) {
  const std::size_t n = s.points.empty() ? 0 : s.points.front().size();
  for (std::size_t j = 0; j < n; ++j) os << 'x' << j << ',';
  os << "residual\n";
  char buf[64];
  for (std::size_t k = 0; k < s.points.size(); ++k) {
    for (double v : s.points[k]) {
      std::snprintf(buf, sizeof buf, "%.17g,", v);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.3e\n", s.residuals[k]);
    os << buf;
  }
}

}  // namespace quadhull
