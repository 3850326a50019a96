#pragma once

#include <string>

namespace lrll {

/// Shortest decimal string that parses back to exactly the same double.
/// Non-finite values are written as "nan", "inf" and "-inf".
std::string format_double(double x);

}  // namespace lrll
