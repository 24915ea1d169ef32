#pragma once

#include <optional>
#include <ostream>
#include <string>

namespace pwmopt::csv {

/// Shortest round-trip decimal text for a double, always with '.' as the
/// decimal separator regardless of the global locale.
std::string number(double value);

inline std::string number(int value) { return std::to_string(value); }
inline std::string number(std::size_t value) { return std::to_string(value); }

/// Empty field when absent.
inline std::string optional_number(const std::optional<double>& value) {
  return value ? number(*value) : std::string();
}

}  // namespace pwmopt::csv
