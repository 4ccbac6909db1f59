#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qubitdyne {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kHalfPi = kPi / 2.0;
inline constexpr double kSqrt2 = 1.41421356237309504880;
/// Interaction strength of a full iSWAP.
inline constexpr double kPhiSwap = kHalfPi;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or argument; the CLI maps this to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure at run time (underflow, divergence, truncation); exit code 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class TruncationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

}  // namespace qubitdyne
