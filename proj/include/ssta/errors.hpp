#pragma once

#include <stdexcept>

namespace ssta {

/// Shapes of two operands disagree, or a constructed shape is invalid.
struct shape_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A file could not be opened, read or written.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A file was readable but its contents violate the expected format.
struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A computation produced or received non-finite / degenerate values.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ssta
