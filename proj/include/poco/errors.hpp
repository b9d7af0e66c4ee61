#pragma once

#include <stdexcept>
#include <string>

namespace poco {

/// Bad argument values or mismatched shapes.
class argument_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Structurally inconsistent sequence layouts (overlapping, unordered or
/// incomplete index ranges).
class layout_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed shot prompts or config/manifest documents.
class parse_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values produced mid-computation; the message names the site.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File I/O failures; the message carries path and cause.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace poco
