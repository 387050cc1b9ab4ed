#include <catch_amalgamated.hpp>

#include <random>

#include "quadhull/densela.hpp"

using namespace quadhull;

namespace {

Mat random_symmetric(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = u(rng);
  return m;
}

double reconstruction_error(const Mat& m, const SymEigen& eig) {
  Mat rebuilt = eig.basis.transpose() * Mat::diag(eig.values) * eig.basis;
  double err = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) err = std::max(err, std::abs(rebuilt(i, j) - m(i, j)));
  return err;
}

double orthogonality_error(const Mat& v) {
  Mat g = v * v.transpose();
  double err = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) err = std::max(err, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
  return err;
}

}  // namespace

TEST_CASE("sym_eigen on small analytic matrices", "[densela]") {
  auto id = sym_eigen(Mat::identity(2));
  CHECK(id.values[0] == Catch::Approx(1.0));
  CHECK(id.values[1] == Catch::Approx(1.0));
  CHECK(orthogonality_error(id.basis) <= 1e-12);

  auto e = sym_eigen(Mat{{2, 1}, {1, 2}});
  CHECK(e.values[0] == Catch::Approx(3.0).margin(1e-12));
  CHECK(e.values[1] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("sym_eigen reconstructs random symmetric matrices", "[densela][property]") {
  std::mt19937_64 rng(7);
  for (std::size_t n = 1; n <= 10; ++n) {
    for (int rep = 0; rep < 5; ++rep) {
      Mat m = random_symmetric(n, rng);
      auto eig = sym_eigen(m);
      CHECK(reconstruction_error(m, eig) <= 1e-10 * (1.0 + m.max_abs()));
      CHECK(orthogonality_error(eig.basis) <= 1e-10);
      for (std::size_t k = 1; k < n; ++k) CHECK(eig.values[k - 1] >= eig.values[k]);
    }
  }
}

TEST_CASE("sym_eigen rejects bad input", "[densela]") {
  CHECK_THROWS_AS(sym_eigen(Mat(2, 3)), Error);
  CHECK_THROWS_AS(sym_eigen(Mat{{1, 2}, {0, 1}}), Error);
}

TEST_CASE("row_reduce examples", "[densela]") {
  SECTION("single equation") {
    auto r = row_reduce(Mat{{1, 1}}, Vect{1});
    REQUIRE(r.consistent);
    REQUIRE(r.rank == 1);
    REQUIRE(r.nonbasic.size() == 1);
    // x_B = 1 - x_N whichever column was picked
    CHECK(r.C(0, 0) == Catch::Approx(-1.0));
    CHECK(r.h[0] == Catch::Approx(1.0));
  }
  SECTION("identity system") {
    auto r = row_reduce(Mat{{1, 0}, {0, 1}}, Vect{2, 3});
    REQUIRE(r.consistent);
    REQUIRE(r.rank == 2);
    Vect x(2);
    for (std::size_t i = 0; i < 2; ++i) x[r.basic[i]] = r.h[i];
    CHECK(x[0] == Catch::Approx(2.0));
    CHECK(x[1] == Catch::Approx(3.0));
  }
  SECTION("contradictory rows") {
    auto r = row_reduce(Mat{{1, 1}, {2, 2}}, Vect{1, 3});
    CHECK_FALSE(r.consistent);
    CHECK(r.rank == 1);
  }
}

TEST_CASE("row_reduce parametrization reproduces the right-hand side", "[densela][property]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t cols = 2 + rep % 6;
    const std::size_t rows = 1 + rep % cols;
    Mat m(rows, cols);
    Vect f(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      f[i] = u(rng);
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = u(rng);
    }
    auto r = row_reduce(m, f);
    REQUIRE(r.consistent);
    REQUIRE(r.rank == rows);
    Vect xn(r.nonbasic.size());
    for (double& v : xn) v = u(rng);
    Vect x(cols);
    for (std::size_t k = 0; k < xn.size(); ++k) x[r.nonbasic[k]] = xn[k];
    Vect xb = r.C * xn;
    for (std::size_t i = 0; i < r.rank; ++i) x[r.basic[i]] = xb[i] + r.h[i];
    Vect back = m * x;
    for (std::size_t i = 0; i < rows; ++i) CHECK(std::abs(back[i] - f[i]) <= 1e-10);
  }
}

TEST_CASE("LU solve and inverse", "[densela]") {
  Mat a{{4, 1, 0}, {1, 3, 1}, {0, 1, 2}};
  Vect x{1, -2, 3};
  Vect b = a * x;
  Vect sol = LU(a).solve(b);
  for (std::size_t i = 0; i < 3; ++i) CHECK(sol[i] == Catch::Approx(x[i]).margin(1e-12));
  Mat inv = inverse(a);
  Mat prod = a * inv;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(prod(i, j) == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-12));
  CHECK_THROWS_AS(LU(Mat{{1, 2}, {2, 4}}), Error);
}

TEST_CASE("orthogonal complement", "[densela]") {
  Vect u{0.6, 0.8, 0.0};
  Mat c = orthogonal_complement(u);
  REQUIRE(c.rows() == 2);
  for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(dot(c.row(i), u)) <= 1e-12);
  CHECK(orthogonality_error(c) <= 1e-12);
}
