#pragma once

#include <stdexcept>
#include <string>

namespace anb {

/// A functional value or parameter outside its legal range.
class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

/// A code word failed its AN-code check. This is the detection signal for
/// a corrupted value, not a programming error.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An enumeration or campaign request exceeding its configured bound.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed program text. Carries the 1-based position of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line, int column)
      : std::runtime_error("line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

/// A program that violates a structural invariant, or a transform that
/// cannot be applied to it.
class ProgramError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace anb
