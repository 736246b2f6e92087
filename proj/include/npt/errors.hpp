#pragma once

#include <stdexcept>
#include <string>

namespace npt {

// Bad or inconsistent user input (dimension mismatches, malformed files,
// violated preconditions that the caller could have checked). CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure discovered mid-computation (singular matrices, degenerate
// marginals, boundary solutions). CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// A matrix fell below the eigenvalue floor where strict positive
// definiteness is required.
class SingularityError : public NumericError {
 public:
  explicit SingularityError(const std::string& msg) : NumericError(msg) {}
};

// A marginal distribution collapsed to (numerically) a point mass.
class DegenerateError : public NumericError {
 public:
  explicit DegenerateError(const std::string& msg) : NumericError(msg) {}
};

// The bivariate correlation fit has no interior solution (A or D nonpositive).
class BoundaryError : public NumericError {
 public:
  explicit BoundaryError(const std::string& msg) : NumericError(msg) {}
};

}  // namespace npt
