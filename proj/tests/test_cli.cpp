#include <catch_amalgamated.hpp>

#include <filesystem>
#include <unistd.h>

#include "quadhull/cli.hpp"

using namespace quadhull;
namespace fs = std::filesystem;

namespace {

const std::string corpus = QUADHULL_INSTANCES_DIR;

std::string inst(const std::string& name) { return corpus + "/" + name + ".json"; }

struct Run {
  int code = 0;
  std::string out, err;
};

Run quadhull_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("quadhull_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_json(const std::string& name, const nlohmann::json& j) {
  const fs::path p = scratch() / (name + ".json");
  std::ofstream(p) << j.dump();
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double value_of(const std::string& out) {
  REQUIRE(out.rfind("value ", 0) == 0);
  return std::stod(out.substr(6));
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<Vect> read_points(const std::string& csv) {
  std::vector<Vect> pts;
  auto ls = lines(csv);
  for (std::size_t i = 1; i < ls.size(); ++i) {
    Vect p;
    std::istringstream row(ls[i]);
    for (std::string cell; std::getline(row, cell, ',');) p.push_back(std::stod(cell));
    p.pop_back();  // residual
    pts.push_back(p);
  }
  return pts;
}

std::size_t components(const std::vector<Vect>& pts, double reach) {
  std::vector<std::size_t> label(pts.size(), 0);
  std::size_t count = 0;
  for (std::size_t s = 0; s < pts.size(); ++s) {
    if (label[s]) continue;
    ++count;
    std::vector<std::size_t> stack{s};
    label[s] = count;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < pts.size(); ++j)
        if (!label[j] && norm2(pts[i] - pts[j]) <= reach) {
          label[j] = count;
          stack.push_back(j);
        }
    }
  }
  return count;
}

nlohmann::json circle_json() { return nlohmann::json::parse(slurp(inst("circle"))); }

}  // namespace

TEST_CASE("instance files", "[cli]") {
  QuadInstance c = load_instance(inst("circle"));
  CHECK(c.name == "circle");
  CHECK(c.dim() == 2);
  CHECK(c.P.rows() == 4);

  nlohmann::json j = circle_json();
  j["Q"] = {{1.0, 2.0}, {0.0, 1.0}};
  j["tolerances"] = {{"eig_tol", 1e-6}, {"max_iter", 50}};
  QuadInstance q = parse_instance(j);
  CHECK(q.Q(0, 1) == 1.0);
  CHECK(q.tol.eig_tol == 1e-6);
  CHECK(q.tol.max_iter == 50);
  CHECK(parse_instance(to_json(q)).Q(1, 0) == 1.0);

  auto rejects = [](nlohmann::json bad) { CHECK_THROWS_AS(parse_instance(bad), Error); };
  nlohmann::json bad = circle_json();
  bad["extra"] = 1;
  rejects(bad);
  bad = circle_json();
  bad["alpha"] = {0.0};
  rejects(bad);
  bad = circle_json();
  bad.erase("g");
  rejects(bad);
  bad = circle_json();
  bad["tolerances"] = {{"bogus", 1.0}};
  rejects(bad);
  bad = circle_json();
  bad["tolerances"] = {{"eig_tol", -1.0}};
  rejects(bad);
  bad = circle_json();
  bad["b"] = {1, 1, 1};
  rejects(bad);
  CHECK_THROWS_AS(parse_instance(std::string("{\"n\": 2,")), Error);
}

TEST_CASE("random instance family", "[cli]") {
  QuadInstance a = random_instance(1003, 3);
  QuadInstance b = random_instance(1003, 3);
  CHECK(a.Q(0, 1) == b.Q(0, 1));
  CHECK(a.g == b.g);
  CHECK(a.P.rows() >= 6);
  CHECK(a.P.rows() <= 9);
  QuadInstance corpus_copy = load_instance(inst("random_03"));
  CHECK(corpus_copy.g == a.g);
  CHECK(corpus_copy.P.rows() == a.P.rows());
}

TEST_CASE("build", "[cli]") {
  const std::string out = (scratch() / "circle.cbf").string();
  Run r = quadhull_cli({"build", inst("circle"), "--out", out});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("dim 2 (2,0,0,0) BaseOneSided", 0) == 0);
  CHECK(r.out.find("wrote " + out) != std::string::npos);
  CHECK(read_cbf(slurp(out)).original.size() == 2);

  Run h = quadhull_cli({"build", inst("hyperboloid1"), "--out", "-"});
  REQUIRE(h.code == 0);
  CHECK(lines(h.out)[0] == "dim 3 (2,1,0,0) RecurseFacets ruled-surface children=6");

  Run seg = quadhull_cli({"build", inst("segment"), "--out", "-"});
  REQUIRE(seg.code == 0);
  CHECK(seg.out.rfind("dim 2 (0,0,0,0) AffineHull", 0) == 0);

  Run txt = quadhull_cli({"build", inst("circle"), "--format", "txt", "--out", "-"});
  CHECK(txt.out.find("# quadhull formulation") != std::string::npos);
}

TEST_CASE("optimize", "[cli]") {
  Run r = quadhull_cli({"optimize", inst("circle"), "--c", "1,0"});
  REQUIRE(r.code == 0);
  CHECK(value_of(r.out) == Catch::Approx(1.0).margin(1e-6));
  CHECK(value_of(quadhull_cli({"optimize", inst("hyperbola"), "--c", "0,1"}).out) ==
        Catch::Approx(std::sqrt(3.0)).margin(1e-6));
  CHECK(value_of(quadhull_cli({"optimize", inst("hyperbola"), "--c", "0,1", "--per-leaf"}).out) ==
        Catch::Approx(std::sqrt(3.0)).margin(1e-6));

  nlohmann::json e = circle_json();
  e["g"] = -1.0;
  Run empty = quadhull_cli({"optimize", write_json("empty", e), "--c", "1,0"});
  CHECK(empty.code == 2);
  CHECK(empty.err.find("empty") != std::string::npos);

  CHECK(quadhull_cli({"optimize", inst("circle"), "--c", "1,0,0"}).code == 1);
  CHECK(quadhull_cli({"optimize", inst("circle")}).code == 1);
}

TEST_CASE("artifact and one-shot optimization agree", "[cli]") {
  for (const char* name : {"hyperbola", "hyperboloid1", "plane_section", "random_05"}) {
    const std::string art = (scratch() / (std::string(name) + ".cbf")).string();
    REQUIRE(quadhull_cli({"build", inst(name), "--out", art}).code == 0);
    const std::size_t n = load_instance(inst(name)).dim();
    const std::string c = n == 2 ? "0.6,-0.8" : "0.48,-0.6,0.64";
    const double one = value_of(quadhull_cli({"optimize", inst(name), "--c", c}).out);
    const double two = value_of(quadhull_cli({"optimize", "--from-artifact", art, "--c", c}).out);
    CHECK(std::abs(one - two) <= 1e-9);
  }
  const std::string txt = (scratch() / "circle.txt").string();
  REQUIRE(quadhull_cli({"build", inst("circle"), "--format", "txt", "--out", txt}).code == 0);
  CHECK(quadhull_cli({"optimize", "--from-artifact", txt, "--c", "1,0"}).code == 1);
}

TEST_CASE("linear aggregation agrees with the default path", "[cli]") {
  for (const char* c : {"1,0,0", "0.3,0.3,-0.9", "-1,2,0.5"}) {
    const double plain = value_of(quadhull_cli({"optimize", inst("degenerate"), "--c", c}).out);
    const double agg = value_of(quadhull_cli({"optimize", inst("degenerate"), "--c", c, "--aggregate-linear"}).out);
    CHECK(plain == Catch::Approx(agg).margin(1e-6));
  }
}

TEST_CASE("verify", "[cli]") {
  Run r = quadhull_cli({"verify", inst("circle"), "--objectives", "8", "--samples", "200"});
  CHECK(r.code == 0);
  CHECK(lines(r.out).back() == "PASS");
  CHECK(r.out.find("samples 200 of 200") != std::string::npos);
  const std::string gap = r.out.substr(r.out.find("max gap ") + 8);
  CHECK(std::stod(gap) <= 1e-4);

  Run again = quadhull_cli({"verify", inst("circle"), "--objectives", "8", "--samples", "200"});
  CHECK(again.out == r.out);

  SECTION("corrupted hull file") {
    const std::string good = (scratch() / "circle_good.cbf").string();
    REQUIRE(quadhull_cli({"build", inst("circle"), "--out", good}).code == 0);
    std::string text = slurp(good);
    // pull one polytope bound of the convex part inward
    const std::size_t at = text.find("\n9 -1\n");
    REQUIRE(at != std::string::npos);
    text.replace(at, 6, "\n9 -0.5\n");
    const fs::path bad = scratch() / "circle_bad.cbf";
    std::ofstream(bad) << text;
    Run f = quadhull_cli({"verify", inst("circle"), "--from-artifact", bad.string()});
    CHECK(f.code == 5);
    CHECK(lines(f.out).back() == "FAIL");
    CHECK(f.out.find("violated membership") != std::string::npos);
    Run ok = quadhull_cli({"verify", inst("circle"), "--from-artifact", good});
    CHECK(ok.code == 0);
  }
  SECTION("empty set") {
    nlohmann::json e = circle_json();
    e["g"] = -1.0;
    Run f = quadhull_cli({"verify", write_json("empty_verify", e)});
    CHECK(f.code == 0);
    CHECK(f.out.find("S is empty") != std::string::npos);
    CHECK(lines(f.out).back() == "PASS");
  }
  SECTION("hull file for another dimension") {
    const std::string art = (scratch() / "hb1.cbf").string();
    REQUIRE(quadhull_cli({"build", inst("hyperboloid1"), "--out", art}).code == 0);
    CHECK(quadhull_cli({"verify", inst("circle"), "--from-artifact", art}).code == 1);
  }
}

TEST_CASE("export", "[cli]") {
  const fs::path a = scratch() / "export_a.cbf", b = scratch() / "export_b.cbf";
  REQUIRE(quadhull_cli({"export", inst("hyperboloid2"), "--out", a.string()}).code == 0);
  REQUIRE(quadhull_cli({"export", "--from-artifact", a.string(), "--out", b.string()}).code == 0);
  CHECK(slurp(a) == slurp(b));

  Run with_obj = quadhull_cli({"export", inst("circle"), "--c", "1,0", "--out", "-"});
  CHECK(with_obj.out.find("OBJACOORD") != std::string::npos);
  Run txt = quadhull_cli({"export", inst("circle"), "--format", "txt"});
  CHECK(txt.out.find("cone") != std::string::npos);
  CHECK(quadhull_cli({"export", "--from-artifact", a.string(), "--format", "txt"}).code == 1);
}

TEST_CASE("stats", "[cli]") {
  Run r = quadhull_cli({"stats", inst("hyperboloid1")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("instance hyperboloid1 dim 3") != std::string::npos);
  CHECK(r.out.find("leaves ") != std::string::npos);
}

TEST_CASE("sample-surface", "[cli]") {
  SECTION("circle ring") {
    Run r = quadhull_cli({"sample-surface", inst("circle"), "--density", "40"});
    REQUIRE(r.code == 0);
    auto pts = read_points(r.out);
    REQUIRE(pts.size() >= 80);
    for (const Vect& p : pts) CHECK(std::abs(norm2(p) - 1.0) <= 1e-12);
    CHECK(components(pts, 0.2) == 1);
  }
  SECTION("two-sheet hyperboloid splits in two") {
    const fs::path csv = scratch() / "two.csv";
    Run r = quadhull_cli({"sample-surface", inst("hyperboloid2"), "--density", "20", "--out", csv.string()});
    REQUIRE(r.code == 0);
    auto pts = read_points(slurp(csv));
    REQUIRE_FALSE(pts.empty());
    CHECK(components(pts, 0.5) == 2);
  }
  SECTION("one-sheet hyperboloid is one band") {
    Run r = quadhull_cli({"sample-surface", inst("hyperboloid1"), "--density", "20"});
    auto pts = read_points(r.out);
    REQUIRE_FALSE(pts.empty());
    CHECK(components(pts, 0.5) == 1);
  }
  SECTION("thread count does not change the output") {
    Run one = quadhull_cli({"sample-surface", inst("hyperboloid1"), "--density", "12", "--threads", "1"});
    ::setenv("QUADHULL_THREADS", "3", 1);
    Run env = quadhull_cli({"sample-surface", inst("hyperboloid1"), "--density", "12"});
    ::unsetenv("QUADHULL_THREADS");
    CHECK(one.out == env.out);
  }
}

TEST_CASE("exit codes", "[cli]") {
  nlohmann::json u = circle_json();
  u["A"] = {{1.0, 0.0}};
  u["b"] = {1.0};
  CHECK(quadhull_cli({"build", write_json("unbounded", u)}).code == 4);

  nlohmann::json e = circle_json();
  e["A"] = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
  e["b"] = {-1.0, -1.0, 1.0, 1.0};
  CHECK(quadhull_cli({"build", write_json("empty_box", e)}).code == 2);

  const fs::path broken = scratch() / "broken.json";
  std::ofstream(broken) << "{\"n\": 2,";
  CHECK(quadhull_cli({"build", broken.string()}).code == 1);
  CHECK(quadhull_cli({"build", inst("hyperboloid1"), "--max-leaves", "5", "--out", "-"}).code == 3);
  CHECK(quadhull_cli({"frobnicate"}).code == 1);
  CHECK(quadhull_cli({"build", (scratch() / "missing.json").string()}).code == 1);
  CHECK(quadhull_cli({"--help"}).code == 0);
  CHECK(quadhull_cli({"build", inst("circle"), "--format", "xml"}).code == 1);
}
