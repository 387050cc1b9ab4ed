// Writes the seeded random instances of the bundled corpus.
#include <cstdio>
#include <fstream>
#include <iostream>

#include "quadhull/instance_io.hpp"

namespace {

// one matrix row per line
std::string pretty(const nlohmann::json& j) {
  std::string s = "{\n";
  bool first = true;
  for (const char* key : {"name", "n", "Q", "alpha", "g", "A", "b"}) {
    if (!j.contains(key)) continue;
    s += first ? "" : ",\n";
    first = false;
    s += "  \"" + std::string(key) + "\": ";
    const auto& v = j[key];
    if (v.is_array() && !v.empty() && v[0].is_array()) {
      s += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) s += "    " + v[i].dump() + (i + 1 < v.size() ? ",\n" : "\n");
      s += "  ]";
    } else {
      s += v.dump();
    }
  }
  return s + "\n}\n";
}

}  // namespace

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : "instances";
  for (std::uint64_t k = 0; k < 20; ++k) {
    quadhull::QuadInstance inst = quadhull::random_instance(1000 + k, 2 + k % 2);
    char name[32];
    std::snprintf(name, sizeof name, "random_%02llu", static_cast<unsigned long long>(k));
    inst.name = name;
    std::ofstream(dir + "/" + name + ".json") << pretty(quadhull::to_json(inst));
  }
  std::cout << "wrote 20 instances to " << dir << '\n';
}
