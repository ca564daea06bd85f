#pragma once

#include <stdexcept>
#include <string>

namespace detphoton {

// Argument outside the domain of a model function.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A truncated number distribution dropped more mass than the accepted tail bound.
class TruncationError : public std::runtime_error {
 public:
  TruncationError(const std::string& what, double tail)
      : std::runtime_error(what), tail_(tail) {}
  double tail() const noexcept { return tail_; }

 private:
  double tail_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Record would not fit the configured in-memory budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedStreamError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FitError : public std::runtime_error {
 public:
  enum class Kind { kNonConvergence, kDegenerate, kBadInput };
  FitError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace detphoton
