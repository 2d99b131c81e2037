#pragma once

#include <string>

namespace asmseq {

/// Shortest representation with 12 significant digits; used for every float
/// written to CSV, JSON or LP output.
std::string format_double(double value);

}  // namespace asmseq
