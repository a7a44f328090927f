#ifndef NASOMETRY_ERROR_HPP
#define NASOMETRY_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nasometry {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unsupported input file. Carries the byte offset (binary
// formats) or 1-based line number (text formats) where it was detected;
// unused locations are zero.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t byte_offset,
              std::size_t line = 0)
      : Error(what), byte_offset_(byte_offset), line_(line) {}

  std::size_t byte_offset() const { return byte_offset_; }
  std::size_t line() const { return line_; }

 private:
  std::size_t byte_offset_;
  std::size_t line_;
};

// Precondition violation on an argument (bad config, mismatched inputs).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A quantity cannot be computed (silent frame, insufficient signal,
// rank-deficient design).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace nasometry

#endif  // NASOMETRY_ERROR_HPP
