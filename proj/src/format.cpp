#include "lrll/format.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

namespace lrll {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc()) return "nan";
  return std::string(buf, res.ptr);
}

}  // namespace lrll
