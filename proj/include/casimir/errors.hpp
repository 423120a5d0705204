#ifndef CASIMIR_ERRORS_HPP
#define CASIMIR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace casimir {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user input: unreadable files, malformed CSV/JSON, inconsistent config.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Arguments outside a function's mathematical domain (z <= 0, xi <= 0, ...)
// or outside a formula's validity window (A/z >= 0.3, eta >= 1, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Not enough data to perform a fit (too few vertices, empty scan, ...).
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// Curves or scans that cannot be compared (mismatched z grids, empty overlap).
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Quadrature, series or fit failed to converge. Carries the best estimate
// and the tolerance that was actually achieved.
class NumericError : public Error {
 public:
  NumericError(const std::string& msg, double best_estimate, double achieved_tol)
      : Error(msg), best_estimate_(best_estimate), achieved_tol_(achieved_tol) {}
  explicit NumericError(const std::string& msg)
      : Error(msg), best_estimate_(0.0), achieved_tol_(0.0) {}

  double best_estimate() const { return best_estimate_; }
  double achieved_tolerance() const { return achieved_tol_; }

 private:
  double best_estimate_;
  double achieved_tol_;
};

}  // namespace casimir

#endif
