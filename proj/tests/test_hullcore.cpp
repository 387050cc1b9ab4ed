#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "quadhull/hullcore.hpp"
#include "quadhull/oracle.hpp"
#include "quadhull/socmodel.hpp"

using namespace quadhull;

namespace {

HPolytope box(std::size_t n, double lo, double hi) {
  HPolytope P(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vect r(n, 0.0);
    r[i] = 1.0;
    P.add(r, hi);
    r[i] = -1.0;
    P.add(r, -lo);
  }
  return P;
}

Mat diag(std::initializer_list<double> d) { return Mat::diag(Vect(d)); }

double support(const HullRep& h, std::span<const double> c) { return optimize(flatten(h), c).value; }

std::vector<Vect> circle_directions(std::size_t k) {
  std::vector<Vect> out;
  for (std::size_t i = 0; i < k; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(k);
    out.push_back({std::cos(t), std::sin(t)});
  }
  return out;
}

std::vector<Vect> sphere_directions(std::size_t k, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<Vect> out;
  for (std::size_t i = 0; i < k; ++i) {
    Vect c(n);
    for (double& v : c) v = nd(rng);
    const double s = norm2(c);
    for (double& v : c) v /= s;
    out.push_back(c);
  }
  return out;
}

HullRep points(std::vector<Vect> pts) {
  VPolytope vp;
  vp.dim = pts.front().size();
  vp.vertices = std::move(pts);
  return make_vpoly_leaf(std::move(vp), "points");
}

HullRep disk(double cx, double cy, double r) {
  SocLeaf leaf;
  leaf.P = box(2, -10, 10);
  SocConstraint s;
  s.A = Mat{{1, 0}, {0, 1}};
  s.b = Vect{-cx, -cy};
  s.c = Vect{0, 0};
  s.d = r;
  leaf.socs.push_back(s);
  return make_soc_leaf(std::move(leaf), "disk");
}

}  // namespace

TEST_CASE("decision table", "[hullcore]") {
  CHECK(classify_counts(2, 0, 1, 0, 1.0, false).tag == CaseTag::BaseOneSided);
  CHECK(classify_counts(1, 1, 1, 0, 1.0, false).tag == CaseTag::RecurseFacets);
  CHECK(classify_counts(2, 1, 0, 0, 1.0, false).tag == CaseTag::RecurseFacets);
  CHECK(classify_counts(2, 1, 0, 0, 1.0, false).lemma == "ruled-surface");
  CHECK(classify_counts(1, 3, 0, 0, 0.0, false).tag == CaseTag::BaseSingleSquare);
  CHECK(classify_counts(0, 2, 1, 0, 0.5, false).tag == CaseTag::BaseOneSided);
  CHECK(classify_counts(0, 0, 1, 0, 0.0, false).tag == CaseTag::BaseLinear);
  CHECK(classify_counts(0, 0, 0, 2, 0.0, false).tag == CaseTag::BaseLinear);
  CHECK(classify_counts(0, 0, 0, 0, 0.0, false).tag == CaseTag::BasePoint);
  CHECK(classify_counts(0, 0, 0, 2, 1.0, false).tag == CaseTag::Empty);
  CHECK(classify_counts(2, 0, 0, 1, 1.0, false).tag == CaseTag::RecurseFacets);
  CHECK(classify_counts(0, 0, 2, 0, 1.0, false).tag == CaseTag::RecurseFacets);
  CHECK(classify_counts(2, 0, 0, 0, 1.0, true).tag == CaseTag::Empty);
}

TEST_CASE("circle", "[hullcore]") {
  QuadInstance inst(Mat{{1, 0}, {0, 1}}, Vect{0, 0}, 1.0, box(2, -1, 1));
  BuildResult r = build_hull(inst);
  REQUIRE(r.trace.size() == 1);
  CHECK(format_trace(r.trace[0]).rfind("dim 2 (2,0,0,0) BaseOneSided", 0) == 0);
  for (const Vect& c : circle_directions(16)) CHECK(support(r.hull, c) == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("hyperbola", "[hullcore]") {
  QuadInstance inst(Mat{{1, 0}, {0, -1}}, Vect{0, 0}, 1.0, box(2, -2, 2));
  BuildResult r = build_hull(inst);
  CHECK(r.trace[0].tag == "BaseSingleSquare");
  CHECK(support(r.hull, Vect{0.0, 1.0}) == Catch::Approx(std::sqrt(3.0)).margin(1e-6));
  CHECK(support(r.hull, Vect{1.0, 0.0}) == Catch::Approx(2.0).margin(1e-6));
  // the gap between the branches is not filled in
  CHECK(support(r.hull, Vect{0.0, -1.0}) == Catch::Approx(std::sqrt(3.0)).margin(1e-6));
  const SurfaceOracle oracle(inst);
  for (const Vect& c : circle_directions(16))
    CHECK(support(r.hull, c) == Catch::Approx(brute_max(oracle, c).value).margin(1e-5));
}

TEST_CASE("hyperboloid recursion", "[hullcore]") {
  QuadInstance inst(diag({1, 1, -1}), Vect{0, 0, 0}, 1.0, box(3, -2, 2));
  BuildResult r = build_hull(inst);
  REQUIRE_FALSE(r.trace.empty());
  CHECK(r.trace[0].tag == "RecurseFacets");
  CHECK(r.trace[0].lemma == "ruled-surface");
  CHECK(r.trace[0].children == 6);
  for (std::size_t k = 1; k < r.trace.size(); ++k) CHECK(r.trace[k].depth >= 1);
  const SurfaceOracle oracle(inst);
  for (const Vect& c : sphere_directions(12, 3, 4))
    CHECK(support(r.hull, c) == Catch::Approx(brute_max(oracle, c).value).margin(1e-5));
}

TEST_CASE("leaf counts grow with the dimension", "[hullcore]") {
  std::size_t prev = 0;
  for (std::size_t n = 2; n <= 4; ++n) {
    Mat Q = Mat::identity(n);
    Q(n - 1, n - 1) = -1.0;
    BuildResult r = build_hull(QuadInstance(Q, Vect(n, 0.0), 1.0, box(n, -2, 2)));
    CHECK(r.leaves > prev);
    prev = r.leaves;
  }
}

TEST_CASE("facet restriction", "[hullcore]") {
  SECTION("unit square facet x1 = 1") {
    QuadInstance inst(Mat{{1, 0}, {0, 1}}, Vect{0, 0}, 2.0, box(2, 0, 1));
    // row 0 is x1 <= 1
    FacetChild fc = facet_restrict(inst, inst.P, 0);
    CHECK(fc.pivot == 0);
    REQUIRE(fc.inst.dim() == 1);
    CHECK(fc.inst.Q(0, 0) == Catch::Approx(1.0));
    CHECK(fc.inst.alpha[0] == Catch::Approx(0.0).margin(1e-15));
    CHECK(fc.inst.g == Catch::Approx(1.0));
    CHECK(fc.embed(Vect{0.5}) == Vect{1.0, 0.5});
  }
  SECTION("pivot on the largest entry") {
    HPolytope F(2);
    F.add(Vect{0.0, 2.0}, 1.0);
    F.add(Vect{1.0, 0.0}, 1.0);
    F.add(Vect{-1.0, 0.0}, 1.0);
    F.add(Vect{0.0, -1.0}, 1.0);
    QuadInstance inst(Mat{{1, 0}, {0, 1}}, Vect{0, 0}, 1.0, F);
    FacetChild fc = facet_restrict(inst, F, 0);
    CHECK(fc.pivot == 1);
    CHECK(fc.embed(Vect{0.25})[1] == Catch::Approx(0.5));
    CHECK(fc.inst.g == Catch::Approx(0.75));
  }
}

TEST_CASE("one-sided base case", "[hullcore]") {
  SECTION("interval in 1-D") {
    CanonicalSet c = canonicalize(QuadInstance(Mat{{1.0}}, Vect{0.0}, 4.0, box(1, -5, 5)));
    HullRep h = base_one_sided(c);
    REQUIRE(h);
    CHECK(support(h, Vect{1.0}) == Catch::Approx(2.0).margin(1e-6));
    CHECK(support(h, Vect{-1.0}) == Catch::Approx(2.0).margin(1e-6));
  }
  SECTION("paraboloid against the oracle") {
    QuadInstance inst(diag({1, 1, 0}), Vect{0, 0, 1}, 1.0, box(3, -2, 2));
    CanonicalSet c = canonicalize(inst);
    REQUIRE(c.counts() == std::array<std::size_t, 4>{2, 0, 1, 0});
    HullRep h = apply_map(c.to_original, base_one_sided(c));
    const SurfaceOracle oracle(inst);
    for (const Vect& d : sphere_directions(16, 3, 11))
      CHECK(support(h, d) == Catch::Approx(brute_max(oracle, d).value).margin(1e-4));
  }
  SECTION("right-hand side negative on the whole polytope") {
    // w^2 + y = 1 with y in [2, 3]
    HPolytope Q(2);
    Q.add(Vect{1.0, 0.0}, 1.0);
    Q.add(Vect{-1.0, 0.0}, 1.0);
    Q.add(Vect{0.0, 1.0}, 3.0);
    Q.add(Vect{0.0, -1.0}, -2.0);
    CanonicalSet c = canonicalize(QuadInstance(diag({1, 0}), Vect{0, 1}, 1.0, Q));
    CHECK(base_one_sided(c) == nullptr);
  }
}

TEST_CASE("single-square base case", "[hullcore]") {
  SECTION("cone w^2 = x^2 fills the square") {
    CanonicalSet c = canonicalize(QuadInstance(diag({1, -1}), Vect{0, 0}, 0.0, box(2, -1, 1)));
    REQUIRE(c.counts() == std::array<std::size_t, 4>{1, 1, 0, 0});
    HullRep h = base_single_square(c);
    REQUIRE(h);
    for (const Vect& d : circle_directions(16))
      CHECK(support(h, d) == Catch::Approx(std::abs(d[0]) + std::abs(d[1])).margin(1e-6));
  }
  SECTION("no positive square and positive right-hand side") {
    CanonicalSet c = canonicalize(QuadInstance(diag({-1, -1}), Vect{0, 0}, 1.0, box(2, -1, 1)));
    REQUIRE(c.n_qp == 0);
    CHECK(base_single_square(c) == nullptr);
  }
  SECTION("no positive square and zero right-hand side") {
    CanonicalSet c = canonicalize(QuadInstance(diag({-1, -1}), Vect{0, 0}, 0.0, box(2, -1, 1)));
    HullRep h = base_single_square(c);
    REQUIRE(h);
    CHECK(h->kind == NodeKind::VPolyLeaf);
    CHECK(h->vpoly.vertices.size() == 1);
  }
}

TEST_CASE("reverse-convex hull via edges", "[hullcore]") {
  SECTION("interval outside a ball") {
    HPolytope P = box(1, 0, 2);
    SocConstraint s{Mat{{1.0}}, Vect{0.0}, Vect{0.0}, 1.0};
    VPolytope v = reverse_convex_hull_via_edges(P, s, {});
    std::sort(v.vertices.begin(), v.vertices.end());
    REQUIRE(v.vertices.size() == 2);
    CHECK(v.vertices[0][0] == Catch::Approx(1.0));
    CHECK(v.vertices[1][0] == Catch::Approx(2.0));
  }
  SECTION("square minus a larger disk keeps the corners") {
    HPolytope P = box(2, -1, 1);
    SocConstraint s{Mat{{1, 0}, {0, 1}}, Vect{0, 0}, Vect{0, 0}, 1.2};
    VPolytope v = reverse_convex_hull_via_edges(P, s, {});
    REQUIRE(v.vertices.size() == 4);
    for (const Vect& x : v.vertices) {
      CHECK(std::abs(x[0]) == Catch::Approx(1.0));
      CHECK(std::abs(x[1]) == Catch::Approx(1.0));
    }
  }
  SECTION("nothing outside the ball") {
    HPolytope P = box(2, -1, 1);
    SocConstraint s{Mat{{1, 0}, {0, 1}}, Vect{0, 0}, Vect{0, 0}, 5.0};
    CHECK(reverse_convex_hull_via_edges(P, s, {}).vertices.empty());
  }
}

TEST_CASE("pruning keeps extreme points", "[hullcore]") {
  std::vector<Vect> pts{{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0.5, 0.5}, {0.5, 0.0}, {1, 1}};
  std::vector<Vect> out = prune_to_extreme(pts, {});
  CHECK(out.size() == 4);
}

TEST_CASE("hull algebra", "[hullcore]") {
  SECTION("union of two points") {
    HullRep h = make_disjunction({points({{0.0}}), points({{1.0}})}, "pair");
    REQUIRE(h);
    CHECK(h->kind == NodeKind::Disjunction);
    CHECK(support(h, Vect{1.0}) == Catch::Approx(1.0).margin(1e-7));
    CHECK(support(h, Vect{-1.0}) == Catch::Approx(0.0).margin(1e-7));
  }
  SECTION("union of two disks") {
    HullRep h = make_disjunction({disk(-2, 0, 1), disk(2, 0, 1)}, "disks");
    CHECK(support(h, Vect{1.0, 0.0}) == Catch::Approx(3.0).margin(1e-6));
    CHECK(support(h, Vect{0.0, 1.0}) == Catch::Approx(1.0).margin(1e-6));
    CHECK(support(h, Vect{1.0, 1.0}) == Catch::Approx(2.0 + std::sqrt(2.0)).margin(1e-6));
  }
  SECTION("affine image of an interval") {
    HullRep seg = points({{0.0}, {1.0}});
    HullRep img = apply_map(AffineMap(Mat{{2.0}}, Vect{1.0}), seg);
    CHECK(support(img, Vect{1.0}) == Catch::Approx(3.0).margin(1e-7));
    CHECK(-support(img, Vect{-1.0}) == Catch::Approx(1.0).margin(1e-7));
  }
  SECTION("rotated disk") {
    const double t = 0.7;
    HullRep img = apply_map(AffineMap(Mat{{std::cos(t), -std::sin(t)}, {std::sin(t), std::cos(t)}}, Vect{0, 0}),
                            disk(0, 0, 1));
    for (const Vect& d : circle_directions(8)) CHECK(support(img, d) == Catch::Approx(1.0).margin(1e-6));
  }
  SECTION("nested images compose") {
    HullRep inner = apply_map(AffineMap(Mat{{2.0}}, Vect{0.0}), points({{1.0}}));
    HullRep outer = apply_map(AffineMap(Mat{{1.0}}, Vect{3.0}), inner);
    CHECK(outer->children.front()->kind == NodeKind::VPolyLeaf);
    CHECK(support(outer, Vect{1.0}) == Catch::Approx(5.0).margin(1e-7));
  }
  SECTION("empty members") {
    CHECK(make_disjunction({nullptr, nullptr}, "none") == nullptr);
    CHECK(make_intersection({disk(0, 0, 1), nullptr}, "none") == nullptr);
    CHECK(apply_map(AffineMap::identity(2), nullptr) == nullptr);
  }
}

TEST_CASE("ruled line witness", "[hullcore]") {
  QuadInstance inst(diag({1, 1, -1}), Vect{0, 0, 0}, 1.0, box(3, -20, 20));
  CanonicalSet c = canonicalize(inst);
  REQUIRE(c.counts() == std::array<std::size_t, 4>{2, 1, 0, 0});
  SECTION("point on the waist") {
    auto dir = ruled_line_witness(c, Vect{1.0, 0.0, 0.0});
    REQUIRE(dir);
    CHECK((*dir)[0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(std::abs((*dir)[1]) == Catch::Approx(1.0));
    CHECK((*dir)[2] == Catch::Approx(1.0));
  }
  SECTION("cone apex") {
    CanonicalSet cone = canonicalize(QuadInstance(diag({1, 1, -1}), Vect{0, 0, 0}, 0.0, box(3, -1, 1)));
    auto dir = ruled_line_witness(cone, Vect{0.0, 0.0, 0.0});
    REQUIRE(dir);
    CHECK(*dir == Vect{1.0, 0.0, 1.0});
  }
  SECTION("random surface points") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int k = 0; k < 50; ++k) {
      Vect p{u(rng), 0.0, u(rng)};
      const double r = std::sqrt(1.0 + p[2] * p[2]);
      const double phi = u(rng);
      p[0] = r * std::cos(phi);
      p[1] = r * std::sin(phi);
      auto dir = ruled_line_witness(c, p);
      REQUIRE(dir);
      for (double t : {-10.0, -1.0, 1.0, 10.0}) {
        Vect q = p;
        for (std::size_t j = 0; j < 3; ++j) q[j] += t * (*dir)[j];
        CHECK(std::abs(c.residual(q)) <= 1e-8);
      }
    }
  }
  SECTION("wrong counts and off-surface points") {
    CanonicalSet disc = canonicalize(QuadInstance(Mat{{1, 0}, {0, 1}}, Vect{0, 0}, 1.0, box(2, -1, 1)));
    CHECK_FALSE(ruled_line_witness(disc, Vect{1.0, 0.0}));
    CHECK_THROWS_AS(ruled_line_witness(c, Vect{0.0, 0.0, 0.0}), Error);
  }
}

TEST_CASE("reductions and special inputs", "[hullcore]") {
  SECTION("segment embedded in the plane") {
    HPolytope P = box(2, -2, 2);
    P.add(Vect{1.0, 1.0}, 1.0);
    P.add(Vect{-1.0, -1.0}, -1.0);
    BuildResult r = build_hull(QuadInstance(Mat{{1, 0}, {0, 1}}, Vect{0, 0}, 1.0, P));
    CHECK(r.trace[0].tag == "AffineHull");
    CHECK(r.trace[1].tag == "Univariate");
    CHECK(support(r.hull, Vect{1.0, 0.0}) == Catch::Approx(1.0).margin(1e-7));
    CHECK(support(r.hull, Vect{-1.0, 0.0}) == Catch::Approx(0.0).margin(1e-7));
  }
  SECTION("linear equation") {
    QuadInstance inst(Mat(2, 2), Vect{1, 1}, 1.0, box(2, -1, 1));
    BuildOptions agg;
    agg.aggregate_linear = true;
    BuildResult plain = build_hull(inst);
    BuildResult r = build_hull(inst, agg);
    CHECK(plain.trace[0].tag == "RecurseFacets");
    CHECK(r.trace[0].tag == "BaseLinear");
    for (const BuildResult* b : {&plain, &r}) {
      CHECK(support(b->hull, Vect{1.0, 0.0}) == Catch::Approx(1.0).margin(1e-6));
      CHECK(support(b->hull, Vect{1.0, 1.0}) == Catch::Approx(1.0).margin(1e-6));
      CHECK(support(b->hull, Vect{-1.0, 0.0}) == Catch::Approx(0.0).margin(1e-6));
    }
  }
  SECTION("empty set") {
    CHECK_THROWS_MATCHES(build_hull(QuadInstance(Mat{{1, 0}, {0, 1}}, Vect{0, 0}, -1.0, box(2, -1, 1))), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == ErrorCode::Infeasible; }));
  }
  SECTION("unbounded polytope") {
    HPolytope P(2);
    P.add(Vect{1.0, 0.0}, 1.0);
    CHECK_THROWS_MATCHES(build_hull(QuadInstance(Mat{{1, 0}, {0, 1}}, Vect{0, 0}, 1.0, P)), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == ErrorCode::Unbounded; }));
  }
  SECTION("leaf budget") {
    BuildOptions opt;
    opt.max_leaves = 3;
    CHECK_THROWS_MATCHES(build_hull(QuadInstance(diag({1, 1, -1}), Vect{0, 0, 0}, 1.0, box(3, -2, 2)), opt), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == ErrorCode::BudgetExceeded; }));
  }
  SECTION("absent variable recursion") {
    QuadInstance inst(diag({1, 0}), Vect{0, 0}, 0.25, box(2, -1, 1));
    BuildResult r = build_hull(inst);
    CHECK(r.trace[0].tag == "RecurseFacets");
    CHECK(support(r.hull, Vect{1.0, 0.0}) == Catch::Approx(0.5).margin(1e-6));
    CHECK(support(r.hull, Vect{0.0, 1.0}) == Catch::Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("random instances match the oracle", "[hullcore]") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 4; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(k % 2);
    Mat Q(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) Q(i, j) = Q(j, i) = u(rng);
    Vect a(n), x0(n);
    for (double& v : a) v = u(rng);
    for (double& v : x0) v = u(rng);
    QuadInstance inst(Q, a, 0.0, box(n, -1, 1));
    inst.g = inst.value(x0);
    BuildResult r = build_hull(inst);
    SocProgram prog = flatten(r.hull);
    const SurfaceOracle oracle(inst);
    for (const Vect& c : sphere_directions(4, n, 100 + k)) {
      const double opt = optimize(prog, c).value;
      const double brute = brute_max(oracle, c).value;
      CHECK(opt == Catch::Approx(brute).margin(1e-3));
      CHECK(opt >= brute - 1e-6);
    }
  }
}
