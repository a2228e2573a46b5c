#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fne {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation
/// (k out of range, dimension mismatch, all-periodic grid, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A spectrum lies outside the open cone of the operator.
class AdmissibilityError : public Error {
 public:
  AdmissibilityError(const std::string& what, std::vector<double> spectrum,
                     std::string violated)
      : Error(what), spectrum_(std::move(spectrum)), violated_(std::move(violated)) {}

  const std::vector<double>& spectrum() const noexcept { return spectrum_; }
  /// Human-readable form of the violated defining inequality, e.g. "sigma_2 > 0".
  const std::string& violated() const noexcept { return violated_; }

 private:
  std::vector<double> spectrum_;
  std::string violated_;
};

/// A requested level is not attained along a ray.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// No admissible level-set samples could be produced.
class SamplingError : public Error {
 public:
  using Error::Error;
};

/// Iterative kernel failed (e.g. Jacobi sweeps exhausted).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Krylov breakdown or non-finite iterate.
class LinearSolverError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Inconsistent caller parameters (barrier δ > 2t/N, bad tolerances, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A solve was refused because its inputs fail a required check (the
/// subsolution inequality, or psi too close to the cone-boundary value of f).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or data file.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Newton or continuation could not make progress. Carries the last good
/// iterate so that callers can dump it.
class NonconvergenceError : public Error {
 public:
  NonconvergenceError(const std::string& what, std::vector<double> snapshot,
                      double last_good_t = 0.0)
      : Error(what), snapshot_(std::move(snapshot)), last_good_t_(last_good_t) {}

  const std::vector<double>& snapshot() const noexcept { return snapshot_; }
  double last_good_t() const noexcept { return last_good_t_; }

 private:
  std::vector<double> snapshot_;
  double last_good_t_;
};

}  // namespace fne
