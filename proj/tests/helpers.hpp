#pragma once
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "binpart/isa.hpp"
#include "binpart/sim.hpp"

namespace testutil {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline binpart::ProgramImage corpus_image(const std::string& name) {
  return binpart::assemble(read_file(std::string(CORPUS_DIR) + "/" + name + ".asm"));
}

inline std::vector<uint32_t> corpus_inputs(const std::string& name) {
  std::string path = std::string(CORPUS_DIR) + "/" + name + ".inputs";
  std::ifstream in(path);
  if (!in) return {};
  return binpart::read_inputs_file(path);
}

// every decompilable corpus program
inline const std::vector<std::string>& corpus_names() {
  static const std::vector<std::string> names = {
      "straight_line", "diamond",     "loop_simple", "dot_product",
      "unrolled_sum",  "fir",         "mulchain",    "spill",
      "nested_loops",  "reduction_alias",
  };
  return names;
}

}  // namespace testutil
