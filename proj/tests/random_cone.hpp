#pragma once

#include <random>

#include "quadhull/conicsolve.hpp"

namespace quadhull::testing {

/// Feasible and bounded by construction: a box, cuts through a random
/// interior point, and cones with slack at that point.
inline ConeProblem random_problem(std::mt19937_64& rng, bool with_cones) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> nd(2, 30);
  const std::size_t n = nd(rng);
  ConeProblem p(n);
  Vect x0(n);
  for (double& v : x0) v = u(rng);
  for (double& v : p.c) v = u(rng);
  // box keeps everything bounded
  for (std::size_t i = 0; i < n; ++i) {
    Vect r(n, 0.0);
    r[i] = 1.0;
    p.add_inequality(r, 5.0);
    r[i] = -1.0;
    p.add_inequality(r, 5.0);
  }
  const std::size_t mi = n / 2 + 1;
  for (std::size_t k = 0; k < mi; ++k) {
    Vect r(n);
    for (double& v : r) v = u(rng);
    p.add_inequality(r, dot(r, x0) + 0.1 + 0.5 * (u(rng) + 1.0));
  }
  const std::size_t me = n / 4;
  for (std::size_t k = 0; k < me; ++k) {
    Vect r(n);
    for (double& v : r) v = u(rng);
    p.add_equality(r, dot(r, x0));
  }
  if (with_cones) {
    const std::size_t nc = 1 + n / 5;
    for (std::size_t k = 0; k < nc; ++k) {
      const std::size_t q = 1 + k % 4;
      SocConstraint s;
      s.A = Mat(q, n);
      s.b = Vect(q);
      s.c = Vect(n);
      for (std::size_t i = 0; i < q; ++i) {
        s.b[i] = u(rng);
        for (std::size_t j = 0; j < n; ++j) s.A(i, j) = u(rng);
      }
      for (double& v : s.c) v = 0.3 * u(rng);
      Vect ax = s.A * x0;
      for (std::size_t i = 0; i < q; ++i) ax[i] += s.b[i];
      s.d = norm2(ax) - dot(s.c, x0) + 0.2;
      p.socs.push_back(std::move(s));
    }
  }
  return p;
}

}  // namespace quadhull::testing
