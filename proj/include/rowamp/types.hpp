#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace rowamp {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// Hermiticity is required to |M - M^H|_max <= 1e-12 * scale, positive
// semi-definiteness to lambda_min >= -1e-10 * trace/M.  Covariance-valued
// code goes through the helpers in hermitian.hpp which enforce both.
inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kPsdRelTol = 1e-10;

// dB values are clamped to +-300 so degenerate ratios stay finite.
inline constexpr double kDbClamp = 300.0;

inline double clamp_db(double db) {
  if (db > kDbClamp) return kDbClamp;
  if (db < -kDbClamp) return -kDbClamp;
  return db;
}

inline double to_db(double linear) {
  if (linear <= 0.0) return -kDbClamp;
  return clamp_db(10.0 * std::log10(linear));
}

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularMatrixError : NumericalError {
  using NumericalError::NumericalError;
};

struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a requested metric has no defined value (e.g. NMSE of an
// all-zero signal).
struct UndefinedMetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rowamp
