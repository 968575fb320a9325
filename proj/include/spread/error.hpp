#pragma once

#include <stdexcept>
#include <string>

namespace spread {

// Base for everything thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed run/window/kernel configuration.
struct InvalidConfigError : Error {
  using Error::Error;
};

// A value violates an operation precondition (dimension mismatch, bad range).
struct InvalidArgumentError : Error {
  using Error::Error;
};

// Kernel mass check failed: integral of phi not 1 within tolerance.
struct NotNormalizedError : Error {
  explicit NotNormalizedError(double integral)
      : Error("kernel not normalized: integral phi = " + std::to_string(integral)),
        integral(integral) {}
  double integral;
};

// Statistic requested on an empty sample.
struct UndefinedStatisticError : Error {
  using Error::Error;
};

// Iteration failed to converge; carries the last iterate.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& what, double last, int iterations)
      : Error(what), last_estimate(last), iterations(iterations) {}
  double last_estimate;
  int iterations;
};

// Bisection target not bracketed; carries the endpoint statistics.
struct BracketError : Error {
  BracketError(const std::string& what, double stat_lo, double stat_hi)
      : Error(what), stat_lo(stat_lo), stat_hi(stat_hi) {}
  double stat_lo;
  double stat_hi;
};

}  // namespace spread
