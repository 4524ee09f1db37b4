#pragma once

#include <stdexcept>
#include <string>

namespace qhrisk {

/// A parameter or argument lies outside the admissible range.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An improper integral (risk value, moment, tail probe) failed to converge.
class IntegrabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine (quadrature, root find) did not reach its tolerance.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double estimate, double bound)
      : std::runtime_error(what), estimate_(estimate), bound_(bound) {}
  explicit NumericError(const std::string& what)
      : NumericError(what, 0.0, 0.0) {}

  double estimate() const noexcept { return estimate_; }
  double bound() const noexcept { return bound_; }

 private:
  double estimate_;
  double bound_;
};

/// A diagnostic or config precondition failed and was not overridden.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A textual spec (risk, distribution, weight) could not be parsed.
class SpecError : public std::invalid_argument {
 public:
  SpecError(const std::string& what, std::string token)
      : std::invalid_argument(what), token_(std::move(token)) {}
  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

}  // namespace qhrisk
