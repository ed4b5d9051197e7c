#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace lgscan {

// Invalid field values caught while constructing domain types or configs.
// The message names the offending field.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Failure of a numeric procedure on otherwise valid inputs. `name()` is a
// stable machine-readable identifier that also prefixes what().
class ComputationError : public std::runtime_error {
 public:
  ComputationError(std::string name, const std::string& what_arg)
      : std::runtime_error(name + ": " + what_arg), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class AmbiguousExtremumError : public ComputationError {
 public:
  explicit AmbiguousExtremumError(const std::string& what_arg)
      : ComputationError("ambiguous-extremum", what_arg) {}
};

class FitFailureError : public ComputationError {
 public:
  explicit FitFailureError(const std::string& what_arg)
      : ComputationError("fit-failure", what_arg) {}
};

class InconclusiveDisambiguationError : public ComputationError {
 public:
  explicit InconclusiveDisambiguationError(const std::string& what_arg)
      : ComputationError("inconclusive-disambiguation", what_arg) {}
};

class ZeroTotalError : public ComputationError {
 public:
  explicit ZeroTotalError(const std::string& what_arg)
      : ComputationError("zero-total", what_arg) {}
};

class DegenerateInputError : public ComputationError {
 public:
  explicit DegenerateInputError(const std::string& what_arg)
      : ComputationError("degenerate-input", what_arg) {}
};

}  // namespace lgscan
