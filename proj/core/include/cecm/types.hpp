#ifndef CECM_TYPES_HPP
#define CECM_TYPES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace cecm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (bad files, non-finite data, bad parameters).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid geometry (non-positive Jacobians, distorted elements).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown (singular systems, rank failures).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Floating-point spacing at |x| (distance to the next representable value).
inline double ulp(double x) {
  x = std::abs(x);
  return std::nextafter(x, std::numeric_limits<double>::infinity()) - x;
}

}  // namespace cecm

#endif
