#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace bsdet {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Base class for everything this library throws.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Shape mismatches, non-square inputs, invalid orders.
struct DimensionError : Error {
  using Error::Error;
};

// A spectral parameter landed on (or numerically too close to) a spectrum:
// resolvent inversions, I - K solves near an eigenvalue, Bessel zeros.
struct SingularPointError : Error {
  using Error::Error;
};

// Contour trouble: too few nodes, spectrum on the contour, a trace or
// winding value too far from an integer to round honestly.
struct ContourError : Error {
  using Error::Error;
};

// An iteration or truncation failed to reach its tolerance.
struct ConvergenceError : Error {
  using Error::Error;
};

// Bad quadrature inputs or non-finite kernel evaluations.
struct QuadratureError : Error {
  using Error::Error;
};

// Arguments outside an operation's supported domain.
struct DomainError : Error {
  using Error::Error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw DomainError(what);
}

}  // namespace bsdet
