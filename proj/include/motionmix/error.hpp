#pragma once

#include <stdexcept>
#include <string>

namespace motionmix {

// Base of every error raised by the library. The CLI maps the subclasses onto
// process exit codes (2 config, 3 numeric, 4 I/O).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters, shape mismatches, inconsistent configurations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or other numeric breakdown.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Unreadable/unwritable files, bad magic, truncated records.
class IoError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

}  // namespace motionmix
