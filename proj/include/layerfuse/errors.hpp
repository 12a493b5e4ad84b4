#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace layerfuse {

/// Bad input: malformed files, violated preconditions, inconsistent dimensions.
class validation_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input row; carries the 1-based line number.
class parse_error : public validation_error {
 public:
  parse_error(std::size_t line, const std::string& what)
      : validation_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace layerfuse
