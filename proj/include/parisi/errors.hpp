#pragma once

#include <stdexcept>
#include <string>

namespace parisi {

/// Bad input: violated preconditions, malformed models or measures.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation that could not produce a trustworthy number.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Named failures. Kinds match the names used in JSON error bodies.
struct DivergentConjugate : NumericalError {
  explicit DivergentConjugate(const std::string& w) : NumericalError("DivergentConjugate", w) {}
};
struct DivergenceDetected : NumericalError {
  explicit DivergenceDetected(const std::string& w) : NumericalError("DivergenceDetected", w) {}
};
struct SeparabilityViolation : NumericalError {
  explicit SeparabilityViolation(const std::string& w) : NumericalError("SeparabilityViolation", w) {}
};
struct LpFailure : NumericalError {
  explicit LpFailure(const std::string& w) : NumericalError("LpFailure", w) {}
};

struct UnsupportedDimension : ValidationError {
  explicit UnsupportedDimension(const std::string& w) : ValidationError("UnsupportedDimension: " + w) {}
};
struct DegenerateExponent : ValidationError {
  explicit DegenerateExponent(const std::string& w) : ValidationError("DegenerateExponent: " + w) {}
};
struct SizeLimit : ValidationError {
  explicit SizeLimit(const std::string& w) : ValidationError("SizeLimit: " + w) {}
};
struct UnsupportedCascade : ValidationError {
  explicit UnsupportedCascade(const std::string& w) : ValidationError("UnsupportedCascade: " + w) {}
};
struct PreconditionViolated : ValidationError {
  explicit PreconditionViolated(const std::string& w) : ValidationError("PreconditionViolated: " + w) {}
};
struct OracleDomain : ValidationError {
  explicit OracleDomain(const std::string& w) : ValidationError("OracleDomain: " + w) {}
};
struct EmptyDirections : ValidationError {
  explicit EmptyDirections(const std::string& w) : ValidationError("EmptyDirections: " + w) {}
};

}  // namespace parisi
