/**
 * @file cli.hpp
 * @brief The quadhull command line: build, optimize, verify, export, stats
 * and sample-surface over JSON instance files.
 *
 * Exit codes: 0 success, 1 bad input or usage, 2 empty set, 3 leaf budget
 * exceeded, 4 unbounded polytope, 5 verification failed, 6 numeric or
 * internal failure.
 */
#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "quadhull/hullcore.hpp"
#include "quadhull/instance_io.hpp"
#include "quadhull/oracle.hpp"
#include "quadhull/socmodel.hpp"

namespace quadhull::cli {

enum Exit : int {
  Ok = 0,
  BadInput = 1,
  EmptySet = 2,
  OverBudget = 3,
  NotBounded = 4,
  VerifyFailed = 5,
  Failure = 6,
};

inline int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidInput: return BadInput;
    case ErrorCode::Infeasible: return EmptySet;
    case ErrorCode::BudgetExceeded: return OverBudget;
    case ErrorCode::Unbounded: return NotBounded;
    default: return Failure;
  }
}

struct Settings {
  std::string instance;
  std::string out;
  std::string format = "cbf";
  std::string artifact;
  std::vector<double> c;
  bool per_leaf = false;
  bool aggregate_linear = false;
  std::size_t max_leaves = 5000;
  std::size_t threads = 0;
  std::size_t objectives = 8;
  std::size_t samples = 200;
  std::uint64_t seed = 1;
  std::size_t density = 50;
};

/// QUADHULL_THREADS, or 0 (all cores) when unset or malformed.
inline std::size_t env_threads() {
  const char* v = std::getenv("QUADHULL_THREADS");
  if (!v || !*v) return 0;
  char* end = nullptr;
  const unsigned long n = std::strtoul(v, &end, 10);
  return *end ? 0 : static_cast<std::size_t>(n);
}

namespace detail {

inline std::string num(double v, const char* fmt = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v + 0.0);
  return buf;
}

inline std::string join(std::span<const double> v, const char* fmt = "%.12g") {
  std::string s;
  for (std::size_t j = 0; j < v.size(); ++j) s += (j ? "," : "") + num(v[j], fmt);
  return s;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw Error(ErrorCode::InvalidInput, "cannot write " + path);
}

inline QuadInstance load_checked(const std::string& path) {
  if (path.empty()) throw Error(ErrorCode::InvalidInput, "an instance file is required");
  QuadInstance inst = load_instance(path);
  if (!is_bounded(inst.P, inst.tol)) throw Error(ErrorCode::Unbounded, "the polytope is unbounded");
  if (is_empty(inst.P, inst.tol)) throw Error(ErrorCode::Infeasible, "the polytope is empty");
  return inst;
}

inline BuildResult build(const QuadInstance& inst, const Settings& s) {
  BuildOptions opt;
  opt.aggregate_linear = s.aggregate_linear;
  opt.max_leaves = s.max_leaves;
  return build_hull(inst, opt);
}

inline CbfModel load_artifact(const std::string& path) {
  const std::string text = read_file(path);
  if (text.find("VER") == std::string::npos)
    throw Error(ErrorCode::InvalidInput, path + " is not a conic benchmark file; only cbf artifacts can be re-read");
  return read_cbf(text);
}

inline void set_objective(CbfModel& m, std::span<const double> c) {
  if (c.size() != m.original.size())
    throw Error(ErrorCode::InvalidInput, "objective has " + std::to_string(c.size()) + " entries, the model has " +
                                             std::to_string(m.original.size()) + " original variables");
  m.obj.clear();
  for (std::size_t j = 0; j < c.size(); ++j)
    if (c[j] != 0.0) m.obj.emplace_back(m.original[j], c[j]);
}

inline Optimum optimize_model(CbfModel m, std::span<const double> c) {
  set_objective(m, c);
  Optimum o = optimize(m);
  o.value = dot(c, o.point);
  return o;
}

inline std::string render(const SocProgram& p, const std::string& format) {
  return format == "txt" ? write_readable(p) : write_cbf(to_cbf(p));
}

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") out << text;
  else write_file(path, text);
}

}  // namespace detail

inline int cmd_build(const Settings& s, std::ostream& out) {
  const QuadInstance inst = detail::load_checked(s.instance);
  BuildResult r = detail::build(inst, s);
  for (const auto& t : r.trace) out << format_trace(t) << '\n';
  SocProgram p = flatten(r.hull);
  out << format_stats(stats(p));
  const std::string path = s.out.empty() ? inst.name + "." + s.format : s.out;
  detail::emit(path, detail::render(p, s.format), out);
  if (path != "-") out << "wrote " << path << '\n';
  return Ok;
}

inline int cmd_optimize(const Settings& s, std::ostream& out) {
  if (s.c.empty()) throw Error(ErrorCode::InvalidInput, "--c is required");
  Optimum o;
  if (!s.artifact.empty()) {
    o = detail::optimize_model(detail::load_artifact(s.artifact), s.c);
  } else {
    const QuadInstance inst = detail::load_checked(s.instance);
    if (s.c.size() != inst.dim()) throw Error(ErrorCode::InvalidInput, "--c must have one entry per variable");
    BuildResult r = detail::build(inst, s);
    o = s.per_leaf ? optimize_per_leaf(r.hull, s.c) : optimize(flatten(r.hull), s.c);
  }
  out << "value " << detail::num(o.value) << '\n' << "point " << detail::join(o.point) << '\n';
  return Ok;
}

/// Deterministic pass/fail report; every number is printed in a fixed format.
inline int cmd_verify(const Settings& s, std::ostream& out) {
  const QuadInstance inst = load_instance(s.instance);
  const double tol = inst.tol.membership_tol;
  constexpr double lower_tol = 1e-6, gap_tol = 1e-3;
  std::ostringstream rep;
  rep << "verify " << inst.name << " seed " << s.seed << '\n';

  OracleOptions oo;
  oo.threads = s.threads;
  std::optional<SurfaceOracle> oracle;
  SurfaceSample sample;
  bool p_empty = false;
  try {
    if (!is_bounded(inst.P, inst.tol)) throw Error(ErrorCode::Unbounded, "the polytope is unbounded");
    oracle.emplace(inst, oo);
    p_empty = oracle->empty();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Infeasible) throw;
    p_empty = true;
  }
  if (!p_empty && s.samples > 0) {
    for (std::size_t d = 16;; d *= 2) {
      sample = oracle->sample(d, s.seed);
      if (sample.points.size() >= s.samples || d >= 4096 || sample.lines > 2000000) break;
    }
    std::sort(sample.points.begin(), sample.points.end());
  }
  std::vector<Vect> chosen;
  if (!sample.points.empty()) {
    const std::size_t m = sample.points.size(), k = std::min(m, s.samples);
    for (std::size_t i = 0; i < k; ++i) chosen.push_back(sample.points[i * m / k]);
  }

  std::optional<CbfModel> model;
  std::string empty_reason;
  try {
    if (!s.artifact.empty()) model = detail::load_artifact(s.artifact);
    else if (p_empty) throw Error(ErrorCode::Infeasible, "the polytope is empty");
    else model = to_cbf(flatten(detail::build(inst, s).hull));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Infeasible) throw;
    empty_reason = e.what();
  }

  std::vector<std::string> failures;
  if (!model) {
    rep << "hull empty (" << empty_reason << ")\n";
    rep << "surface points found " << sample.points.size() << '\n';
    if (!sample.points.empty())
      failures.push_back("emptiness: the oracle found " + std::to_string(sample.points.size()) +
                         " surface points but the construction reports an empty set");
    else
      rep << "note: S is empty, nothing to compare\n";
  } else {
    if (model->original.size() != inst.dim())
      throw Error(ErrorCode::InvalidInput, "the hull file has " + std::to_string(model->original.size()) +
                                               " original variables, the instance has " + std::to_string(inst.dim()));
    std::size_t outside = 0, solver_failed = 0;
    double worst = 0.0;
    Vect worst_at;
    for (const Vect& x : chosen) {
      try {
        Membership mb = membership(*model, x, tol);
        if (!mb.member) ++outside;
        if (mb.violation > worst || worst_at.empty()) {
          worst = std::max(worst, mb.violation);
          worst_at = x;
        }
      } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidInput) throw;
        ++solver_failed;
      }
    }
    rep << "samples " << chosen.size() << " of " << s.samples << " requested\n";
    rep << "membership max violation " << detail::num(worst, "%.3e");
    if (!worst_at.empty()) rep << " at (" << detail::join(worst_at, "%.6f") << ")";
    rep << '\n';
    if (outside)
      failures.push_back("membership: " + std::to_string(outside) + " of " + std::to_string(chosen.size()) +
                         " surface samples lie outside the hull (max violation " + detail::num(worst, "%.3e") + ")");
    if (solver_failed)
      failures.push_back("membership: the solver failed on " + std::to_string(solver_failed) + " samples");

    std::mt19937_64 rng(s.seed);
    std::normal_distribution<double> nd;
    double max_gap = 0.0, min_diff = std::numeric_limits<double>::infinity();
    std::size_t below = 0, wide = 0, objective_failed = 0;
    for (std::size_t k = 0; k < s.objectives; ++k) {
      Vect c(inst.dim());
      for (double& v : c) v = nd(rng);
      const double len = norm2(c);
      for (double& v : c) v /= len;
      if (p_empty || !oracle) break;
      const BruteMax bm = brute_max(*oracle, c, s.seed + k);
      double opt = 0.0;
      try {
        opt = detail::optimize_model(*model, c).value;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidInput) throw;
        ++objective_failed;
        continue;
      }
      if (bm.empty) {
        ++wide;
        continue;
      }
      const double diff = opt - bm.value;
      max_gap = std::max(max_gap, std::abs(diff));
      min_diff = std::min(min_diff, diff);
      if (diff < -lower_tol) ++below;
      if (std::abs(diff) > gap_tol) ++wide;
    }
    rep << "objectives " << s.objectives << " max gap " << detail::num(max_gap, "%.3e") << '\n';
    if (below)
      failures.push_back("support-lower: in " + std::to_string(below) +
                         " directions the hull support is below the surface maximum (worst " +
                         detail::num(min_diff, "%.3e") + ")");
    if (wide)
      failures.push_back("support-gap: in " + std::to_string(wide) +
                         " directions the hull support differs from the surface maximum by more than " +
                         detail::num(gap_tol, "%.0e"));
    if (objective_failed)
      failures.push_back("optimize: the solver failed on " + std::to_string(objective_failed) + " objectives");
  }
  for (const auto& f : failures) rep << "violated " << f << '\n';
  rep << (failures.empty() ? "PASS" : "FAIL") << '\n';
  out << rep.str();
  return failures.empty() ? Ok : VerifyFailed;
}

inline int cmd_export(const Settings& s, std::ostream& out) {
  if (!s.artifact.empty()) {
    if (s.format != "cbf") throw Error(ErrorCode::InvalidInput, "artifacts can only be re-exported as cbf");
    CbfModel m = detail::load_artifact(s.artifact);
    if (!s.c.empty()) detail::set_objective(m, s.c);
    detail::emit(s.out, write_cbf(m), out);
    return Ok;
  }
  const QuadInstance inst = detail::load_checked(s.instance);
  SocProgram p = flatten(detail::build(inst, s).hull);
  if (s.format == "cbf") {
    if (!s.c.empty() && s.c.size() != inst.dim())
      throw Error(ErrorCode::InvalidInput, "--c must have one entry per variable");
    detail::emit(s.out, write_cbf(to_cbf(p, s.c)), out);
  } else {
    detail::emit(s.out, write_readable(p), out);
  }
  return Ok;
}

inline int cmd_stats(const Settings& s, std::ostream& out) {
  const QuadInstance inst = detail::load_checked(s.instance);
  BuildResult r = detail::build(inst, s);
  out << "instance " << inst.name << " dim " << inst.dim() << '\n';
  out << "trace nodes " << r.trace.size() << '\n';
  out << format_stats(stats(flatten(r.hull)));
  return Ok;
}

inline int cmd_sample_surface(const Settings& s, std::ostream& out) {
  const QuadInstance inst = detail::load_checked(s.instance);
  OracleOptions oo;
  oo.threads = s.threads;
  SurfaceSample sample = SurfaceOracle(inst, oo).sample(s.density, s.seed);
  std::sort(sample.points.begin(), sample.points.end());
  for (std::size_t k = 0; k < sample.points.size(); ++k) sample.residuals[k] = inst.residual(sample.points[k]);
  std::ostringstream csv;
  write_csv(csv, sample);
  detail::emit(s.out, csv.str(), out);
  if (!s.out.empty() && s.out != "-") out << "wrote " << sample.points.size() << " points to " << s.out << '\n';
  return Ok;
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Settings s;
  s.threads = env_threads();
  CLI::App app{"Convex hulls of a quadratic equation over a polytope as second-order cone programs", "quadhull"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  auto add_instance = [&](CLI::App* sub, bool optional) {
    auto* o = sub->add_option("instance", s.instance, "Instance JSON file");
    if (!optional) o->required();
    o->check(CLI::ExistingFile);
  };
  auto add_build = [&](CLI::App* sub) {
    sub->add_flag("--aggregate-linear", s.aggregate_linear, "Rotate the linear block into a single coordinate");
    sub->add_option("--max-leaves", s.max_leaves, "Leaf budget of the construction")->capture_default_str();
  };
  auto add_threads = [&](CLI::App* sub) {
    sub->add_option("--threads", s.threads, "Worker threads for the sampling oracle (0 = all cores, default from QUADHULL_THREADS)");
  };
  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", s.format, "Output format: cbf (conic benchmark) or txt (readable)")
        ->check(CLI::IsMember({"cbf", "txt"}))
        ->capture_default_str();
  };
  auto add_c = [&](CLI::App* sub, const char* what) {
    sub->add_option("--c", s.c, what)->delimiter(',')->expected(1, CLI::detail::expected_max_vector_size);
  };

  auto* build = app.add_subcommand("build", "Build the hull, print the case trace and statistics, write the formulation");
  add_instance(build, false);
  add_format(build);
  build->add_option("--out", s.out, "Output file (default <name>.<format>, - for stdout)");
  add_build(build);

  auto* opt = app.add_subcommand("optimize", "Maximize c'x over the hull");
  add_instance(opt, true);
  add_c(opt, "Objective, comma separated");
  opt->add_flag("--per-leaf", s.per_leaf, "Maximize leaf by leaf instead of solving the whole program");
  opt->add_option("--from-artifact", s.artifact, "Optimize over a cbf file written by build")->check(CLI::ExistingFile);
  add_build(opt);

  auto* ver = app.add_subcommand("verify", "Check the hull against the brute-force surface oracle");
  add_instance(ver, false);
  ver->add_option("--objectives", s.objectives, "Random unit directions to compare")->capture_default_str();
  ver->add_option("--samples", s.samples, "Surface samples to test for membership")->capture_default_str();
  ver->add_option("--seed", s.seed, "Seed for samples and directions")->capture_default_str();
  ver->add_option("--from-artifact", s.artifact, "Verify a cbf file instead of a fresh build")->check(CLI::ExistingFile);
  add_build(ver);
  add_threads(ver);

  auto* exp = app.add_subcommand("export", "Write the formulation as a conic benchmark or readable file");
  add_instance(exp, true);
  add_format(exp);
  exp->add_option("--out", s.out, "Output file (default stdout)");
  add_c(exp, "Objective written into the cbf file, comma separated");
  exp->add_option("--from-artifact", s.artifact, "Re-export an existing cbf file")->check(CLI::ExistingFile);
  add_build(exp);

  auto* st = app.add_subcommand("stats", "Print size statistics of the formulation");
  add_instance(st, false);
  add_build(st);

  auto* samp = app.add_subcommand("sample-surface", "Write oracle surface points as CSV");
  add_instance(samp, false);
  samp->add_option("--density", s.density, "Grid lines per axis")->capture_default_str();
  samp->add_option("--seed", s.seed, "Grid offset seed")->capture_default_str();
  samp->add_option("--out", s.out, "CSV file (default stdout)");
  add_threads(samp);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? Ok : BadInput;
  }

  try {
    if (*build) return cmd_build(s, out);
    if (*opt) {
      if (s.instance.empty() && s.artifact.empty()) throw Error(ErrorCode::InvalidInput, "an instance or --from-artifact is required");
      return cmd_optimize(s, out);
    }
    if (*ver) return cmd_verify(s, out);
    if (*exp) {
      if (s.instance.empty() && s.artifact.empty()) throw Error(ErrorCode::InvalidInput, "an instance or --from-artifact is required");
      return cmd_export(s, out);
    }
    if (*st) return cmd_stats(s, out);
    if (*samp) return cmd_sample_surface(s, out);
  } catch (const Error& e) {
    err << "quadhull: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "quadhull: " << e.what() << '\n';
    return Failure;
  }
  return BadInput;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace quadhull::cli
