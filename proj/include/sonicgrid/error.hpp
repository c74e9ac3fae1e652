#pragma once

#include <stdexcept>
#include <string>

namespace sonicgrid {

/// Precondition failure on caller-supplied data (bad dimensions, empty input, out-of-range index).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A file or message could not be parsed or did not satisfy its schema.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sonicgrid
