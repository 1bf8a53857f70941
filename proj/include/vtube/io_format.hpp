#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace vtube {

/// Shortest-ish decimal text for a double; "inf", "-inf" and "nan" spelled out.
inline std::string fmt_num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

}  // namespace vtube
