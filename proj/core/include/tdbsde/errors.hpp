#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tdbsde {

// Base of every error raised by the library. The CLI maps each subclass to a
// distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter or input violates an operation's precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// The equation only admits the trivial solution Y = Z = 0 for these
// parameters, so a non-zero portfolio cannot be constructed.
class ZeroSolutionOnly : public Error {
 public:
  using Error::Error;
};

// The equation has no solution at all for these parameters.
class NoSolution : public Error {
 public:
  using Error::Error;
};

// A construction produced a state that the theory rules out (negative
// surplus, infeasible bond path, ...). Indicates misclassification or
// numerical breakdown.
class ConstructionFailure : public Error {
 public:
  using Error::Error;
};

// Root bracketing failed: the residual does not change sign on the bracket.
class BracketError : public Error {
 public:
  BracketError(const std::string& what, double lo, double hi, double f_lo, double f_hi)
      : Error(what), lo(lo), hi(hi), f_lo(f_lo), f_hi(f_hi) {}
  double lo, hi, f_lo, f_hi;
};

// Fixed-point iteration failed to converge; carries the delta history.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, std::vector<double> deltas, double ratio)
      : Error(what), deltas(std::move(deltas)), contraction_ratio(ratio) {}
  std::vector<double> deltas;
  double contraction_ratio;
};

// A computation would exceed its configured work or memory budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace tdbsde
