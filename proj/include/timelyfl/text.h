#ifndef TIMELYFL_TEXT_H_
#define TIMELYFL_TEXT_H_

#include <cstdio>
#include <string>

namespace timelyfl {

// Shortest-safe round-trip form of a double for CSV output.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace timelyfl

#endif  // TIMELYFL_TEXT_H_
