#pragma once

#include <stdexcept>
#include <string>

namespace amckfac {

// Violated precondition or type invariant (caller bug).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed input file (IDX container, config, matrix text format).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Base for failures of the analog solve pipeline.
class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Effective crossbar matrix is numerically singular (condition > 1e12).
class CircuitUnstableError : public SolveError {
 public:
  using SolveError::SolveError;
};

// Residual grows instead of contracting (crossbar/matrix mismatch).
class DivergenceError : public SolveError {
 public:
  using SolveError::SolveError;
};

class SingularMatrixError : public SolveError {
 public:
  using SolveError::SolveError;
};

}  // namespace amckfac
