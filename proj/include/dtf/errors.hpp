#pragma once

#include <stdexcept>
#include <string>

namespace dtf {

/// Pitch too close to ±π/2 for the ZYX Euler-rate mapping to be invertible.
struct SingularOrientation : std::domain_error {
  using std::domain_error::domain_error;
};

/// Curve parameter outside [0, 1].
struct OutOfRange : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct InvalidGait : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidModel : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DimensionMismatch : std::logic_error {
  using std::logic_error::logic_error;
};

/// Query outside the extent of a height map.
struct OutOfBounds : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// Malformed input file. `line` is 1-based, 0 when not tied to a line.
struct ParseError : std::runtime_error {
  ParseError(const std::string& source, int line, const std::string& what)
      : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string{}) +
                           ": " + what),
        line(line) {}

  int line;
};

}  // namespace dtf
