#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "anbranch/mir.hpp"

namespace testing {

inline std::string corpus_text(const std::string& name) {
  std::ifstream in(std::string(ANB_CORPUS_DIR) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline anb::mir::Program corpus(const std::string& name) { return anb::mir::parse(corpus_text(name)); }

}  // namespace testing
