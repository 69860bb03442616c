#pragma once

#include <stdexcept>
#include <string>

namespace bratsos {

// Error hierarchy. Every library failure derives from Error so callers can
// catch the whole family at a command boundary.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument: dims mismatch, out-of-range parameter, invalid domain value.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents (bad magic, nonsense header fields, CSV syntax).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that uses a feature this library does not implement.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure or truncated payload.
class IoError : public Error {
 public:
  using Error::Error;
};

// Metric or statistic that has no value for the given input (empty masks).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace bratsos
