#pragma once

#include <stdexcept>
#include <string>

namespace bdem {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A bond or contact whose geometry makes the potential undefined.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class MeshError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& msg, int line = 0, std::string key = {})
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line),
        key_(std::move(key)) {}

  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_ = 0;
  std::string key_;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace bdem
