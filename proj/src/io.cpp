#include "asmseq/io.hpp"

#include <cstdio>

namespace asmseq {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

}  // namespace asmseq
