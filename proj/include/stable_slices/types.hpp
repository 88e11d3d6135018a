#pragma once

/**
 * @file types.hpp
 * @brief Scalar aliases, tolerance bundle and the exception hierarchy shared by every module.
 */

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stable_slices {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;
using RVector = std::vector<double>;

/// Roots of a polynomial listed with repetition.
using RootMultiset = std::vector<Complex>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kEps = 2.220446049250313e-16;

inline bool is_finite(Complex c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); }

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs that violate a documented precondition (CLI exit code 2).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NonRealInput : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NotInImage : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateMap : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Numerical failures: the input was valid but the computation did not succeed (CLI exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoRootInRegion : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A library invariant failed to hold (CLI exit code 4).
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/**
 * Tolerances used by root clustering, boundary classification and slice membership.
 *
 * Unset optional values fall back to the relative defaults
 *   cluster radius  1e-6 * (1 + max|root|)
 *   boundary tol    1e-8 * (1 + max|root|)
 */
struct Tolerances {
  std::optional<double> cluster_radius;
  std::optional<double> boundary;
  double residual = 1e-10;  ///< relative factor of the root-finder reconstruction check
  double slice = 1e-9;      ///< relative factor of the linear-constraint check, scaled by 1 + |a|_inf

  double cluster_radius_for(double root_scale) const {
    return cluster_radius ? *cluster_radius : 1e-6 * (1.0 + root_scale);
  }
  double boundary_for(double root_scale) const {
    return boundary ? *boundary : 1e-8 * (1.0 + root_scale);
  }
};

inline double max_abs(const CVector& v) {
  double m = 0.0;
  for (const auto& c : v) m = std::max(m, std::abs(c));
  return m;
}

}  // namespace stable_slices
