#pragma once

#include <stdexcept>
#include <string>

namespace cnlasso {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input (CSV, JSON, config, CLI values).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Input violates a documented precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// An iterative solver produced non-finite values.
class SolverDivergence : public Error {
 public:
  SolverDivergence(const std::string& what, int iteration, double primal_residual,
                   double dual_residual)
      : Error(what),
        iteration_(iteration),
        primal_residual_(primal_residual),
        dual_residual_(dual_residual) {}

  int iteration() const { return iteration_; }
  double primal_residual() const { return primal_residual_; }
  double dual_residual() const { return dual_residual_; }

 private:
  int iteration_;
  double primal_residual_;
  double dual_residual_;
};

}  // namespace cnlasso
