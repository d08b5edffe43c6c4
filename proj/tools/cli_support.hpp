#pragma once

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "tubekit/error.hpp"

namespace tubekit::cli {

// "lo:hi:step" -> {lo, lo+step, ..., hi}; the endpoint is included when it
// lies on the grid. Values are rebuilt as lo + i*step and rounded to 1e-9 so
// that "0.1:0.9:0.1" yields exactly nine thresholds.
inline std::vector<double> parse_range(const std::string& text) {
  const auto a = text.find(':');
  const auto b = a == std::string::npos ? std::string::npos : text.find(':', a + 1);
  if (a == std::string::npos || b == std::string::npos) {
    throw InvalidInput("range '" + text + "' must look like lo:hi:step");
  }
  auto number = [&](const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
      throw InvalidInput("range '" + text + "' has a malformed number '" + s + "'");
    }
    return v;
  };
  const double lo = number(text.substr(0, a));
  const double hi = number(text.substr(a + 1, b - a - 1));
  const double step = number(text.substr(b + 1));
  if (!(step > 0.0) || hi < lo) throw InvalidInput("range '" + text + "' needs step > 0 and hi >= lo");
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e9) / 1e9);
  return out;
}

}  // namespace tubekit::cli
