#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace adinv {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

//! Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! Inconsistent sizes or invalid lattice dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

//! A parameter outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

//! Numerical breakdown (non-finite values, singular systems).
class NumericalError : public Error {
 public:
  using Error::Error;
};

//! Malformed input files or configuration.
class FormatError : public Error {
 public:
  using Error::Error;
};

//! A point in the periodic unit square.
struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

//! Wraps a coordinate into [0, 1).
inline double wrap_unit(double v) {
  double r = v - std::floor(v);
  return r >= 1.0 ? 0.0 : r;
}

//! Shortest distance between two points on the periodic unit square.
inline double periodic_distance(Point a, Point b) {
  auto d = [](double u) {
    double w = std::abs(u - std::round(u));
    return w;
  };
  const double dx = d(a.x - b.x);
  const double dy = d(a.y - b.y);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace adinv
