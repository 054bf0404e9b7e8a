#include "idesign/number.hpp"

#include <cstdio>

namespace idesign {

std::string format_decimal(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string Number::str() const { return exact ? exact->str() : format_decimal(value); }

}  // namespace idesign
