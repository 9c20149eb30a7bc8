#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace spqa {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Error taxonomy shared by every module. The CLI maps these onto exit codes.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, mismatched dimensions, malformed configuration.
class ConfigurationError : public Error {
 public:
  explicit ConfigurationError(const std::string& what, std::string field = {})
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A numerical contract was violated (lost Hermiticity, norm drift, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Symmetry eigenvalues could not be grouped into well separated sectors.
class AmbiguousSectorError : public Error {
 public:
  using Error::Error;
};

/// The adiabatic parameter is undefined because a same-sector gap closed.
class DegenerateTargetError : public Error {
 public:
  using Error::Error;
};

/// The sweeping rate does not point from the start towards the end value.
class OrientationError : public Error {
 public:
  using Error::Error;
};

/// The adaptive propagator could not reach its tolerance at the minimum step.
class PropagationAccuracyError : public Error {
 public:
  using Error::Error;
};

}  // namespace spqa
