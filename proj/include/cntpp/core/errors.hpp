#pragma once

#include <stdexcept>
#include <string>

namespace cntpp {

// Error taxonomy mirrored by the CLI exit codes:
//   2 config, 3 data, 4 numeric divergence, 5 format/version mismatch.
class Error : public std::runtime_error {
 public:
  Error(std::string msg, int exit_code)
      : std::runtime_error(std::move(msg)), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::string msg) : Error(std::move(msg), 2) {}
};

class DataError : public Error {
 public:
  explicit DataError(std::string msg) : Error(std::move(msg), 3) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(std::string msg) : Error(std::move(msg), 4) {}
};

class VersionError : public Error {
 public:
  explicit VersionError(std::string msg) : Error(std::move(msg), 5) {}
};

}  // namespace cntpp
