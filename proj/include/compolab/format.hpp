#pragma once

#include <cstdio>
#include <string>

namespace compolab {

/// Round-trip decimal text of a double ("%.17g"), used for every CSV cell.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace compolab
