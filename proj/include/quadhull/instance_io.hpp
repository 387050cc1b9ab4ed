/**
 * @file instance_io.hpp
 * @brief JSON instance files and the seeded random instance family.
 *
 * Layout: {"name": ..., "n": 2, "Q": [[..]], "alpha": [..], "g": 1,
 * "A": [[..]], "b": [..], "tolerances": {"eig_tol": 1e-9, ...}}.
 */
#pragma once

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "quadhull/reduction.hpp"

namespace quadhull {

namespace detail {

inline Error bad_instance(const std::string& why) { return Error(ErrorCode::InvalidInput, "instance file: " + why); }

inline Vect json_vector(const nlohmann::json& j, std::size_t len, const char* key) {
  if (!j.is_array() || j.size() != len)
    throw bad_instance(std::string(key) + " must be an array of length " + std::to_string(len));
  Vect v;
  for (const auto& x : j) {
    if (!x.is_number()) throw bad_instance(std::string(key) + " holds a non-number");
    v.push_back(x.get<double>());
  }
  return v;
}

inline Mat json_matrix(const nlohmann::json& j, std::size_t rows, std::size_t cols, const char* key) {
  if (!j.is_array() || (rows != std::size_t(-1) && j.size() != rows))
    throw bad_instance(std::string(key) + " has the wrong number of rows");
  Mat m(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    Vect r = json_vector(j[i], cols, key);
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = r[k];
  }
  return m;
}

template <class T>
void read_tol(const nlohmann::json& j, const char* key, T& out) {
  const auto& v = j.at(key);
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw bad_instance(std::string("tolerance ") + key + " must be a non-negative integer");
  } else if (!v.is_number() || v.get<double>() < 0.0) {
    throw bad_instance(std::string("tolerance ") + key + " must be a non-negative number");
  }
  out = v.get<T>();
}

}  // namespace detail

inline Tolerances parse_tolerances(const nlohmann::json& j) {
  Tolerances t;
  if (!j.is_object()) throw detail::bad_instance("tolerances must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key == "eig_tol") detail::read_tol(j, "eig_tol", t.eig_tol);
    else if (key == "lin_tol") detail::read_tol(j, "lin_tol", t.lin_tol);
    else if (key == "pivot_tol") detail::read_tol(j, "pivot_tol", t.pivot_tol);
    else if (key == "slack_tol") detail::read_tol(j, "slack_tol", t.slack_tol);
    else if (key == "g_snap") detail::read_tol(j, "g_snap", t.g_snap);
    else if (key == "solver_tol") detail::read_tol(j, "solver_tol", t.solver_tol);
    else if (key == "membership_tol") detail::read_tol(j, "membership_tol", t.membership_tol);
    else if (key == "ray_tol") detail::read_tol(j, "ray_tol", t.ray_tol);
    else if (key == "prune_tol") detail::read_tol(j, "prune_tol", t.prune_tol);
    else if (key == "surface_tol") detail::read_tol(j, "surface_tol", t.surface_tol);
    else if (key == "max_iter") detail::read_tol(j, "max_iter", t.max_iter);
    else if (key == "dim_cap") detail::read_tol(j, "dim_cap", t.dim_cap);
    else throw detail::bad_instance("unknown tolerance '" + key + "'");
  }
  return t;
}

/// Schema check only; boundedness and emptiness are left to the caller.
inline QuadInstance parse_instance(const nlohmann::json& j) {
  if (!j.is_object()) throw detail::bad_instance("top level must be an object");
  for (const auto& [key, _] : j.items())
    if (key != "name" && key != "n" && key != "Q" && key != "alpha" && key != "g" && key != "A" && key != "b" &&
        key != "tolerances")
      throw detail::bad_instance("unknown key '" + key + "'");
  for (const char* key : {"n", "Q", "alpha", "g", "A", "b"})
    if (!j.contains(key)) throw detail::bad_instance(std::string("missing key ") + key);
  if (!j["n"].is_number_integer() || j["n"].get<long long>() <= 0)
    throw detail::bad_instance("n must be a positive integer");
  const std::size_t n = j["n"].get<std::size_t>();
  if (!j["g"].is_number()) throw detail::bad_instance("g must be a number");
  Mat Q = detail::json_matrix(j["Q"], n, n, "Q");
  Vect alpha = detail::json_vector(j["alpha"], n, "alpha");
  Mat A = detail::json_matrix(j["A"], std::size_t(-1), n, "A");
  Vect b = detail::json_vector(j["b"], A.rows(), "b");
  Tolerances tol = j.contains("tolerances") ? parse_tolerances(j["tolerances"]) : Tolerances{};
  QuadInstance inst(Q, alpha, j["g"].get<double>(), HPolytope(A, b), tol);
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw detail::bad_instance("name must be a string");
    inst.name = j["name"].get<std::string>();
  }
  return inst;
}

inline QuadInstance parse_instance(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw detail::bad_instance(e.what());
  }
  return parse_instance(j);
}

inline QuadInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  QuadInstance inst = parse_instance(ss.str());
  if (inst.name.empty()) {
    const auto slash = path.find_last_of('/');
    std::string stem = path.substr(slash == std::string::npos ? 0 : slash + 1);
    if (const auto dot = stem.rfind('.'); dot != std::string::npos) stem.resize(dot);
    inst.name = stem;
  }
  return inst;
}

inline nlohmann::json to_json(const QuadInstance& inst) {
  nlohmann::json j;
  if (!inst.name.empty()) j["name"] = inst.name;
  const std::size_t n = inst.dim();
  j["n"] = n;
  auto rows = [&](const Mat& m) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
      auto r = m.row(i);
      out.push_back(Vect(r.begin(), r.end()));
    }
    return out;
  };
  j["Q"] = rows(inst.Q);
  j["alpha"] = inst.alpha;
  j["g"] = inst.g;
  j["A"] = rows(inst.P.A);
  j["b"] = inst.P.b;
  return j;
}

/// Box [-1,1]^n with up to three cuts, Q and alpha uniform in [-1,1], and g
/// chosen so that a random interior point lies on the surface.
inline QuadInstance random_instance(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat Q(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) Q(i, j) = Q(j, i) = u(rng);
  Vect alpha(n);
  for (double& v : alpha) v = u(rng);
  Vect x0(n);
  for (double& v : x0) v = u(rng);
  HPolytope P(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vect r(n, 0.0);
    r[i] = 1.0;
    P.add(r, 1.0);
    r[i] = -1.0;
    P.add(r, 1.0);
  }
  const std::size_t cuts = rng() % 4;
  std::uniform_real_distribution<double> frac(0.2, 0.8);
  for (std::size_t k = 0; k < cuts; ++k) {
    Vect r(n);
    for (double& v : r) v = u(rng);
    double l1 = 0.0;
    for (double v : r) l1 += std::abs(v);
    const double at = dot(r, x0);
    P.add(r, at + frac(rng) * (l1 - at));
  }
  QuadInstance inst(Q, alpha, 0.0, P);
  inst.g = inst.value(x0);
  return inst;
}

}  // namespace quadhull
