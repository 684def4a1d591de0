#pragma once

#include <algorithm>
#include <limits>

#include <Eigen/SVD>

#include "adinv/core.hpp"

namespace adinv {

//! Rank threshold used throughout: max(rows, cols) * eps * sigma_max.
inline double rank_threshold(Eigen::Index rows, Eigen::Index cols, double sigma_max) {
  return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() *
         sigma_max;
}

template <typename Derived>
Vec singular_values(const Eigen::MatrixBase<Derived>& A) {
  if (A.rows() == 0 || A.cols() == 0) return Vec();
  Eigen::BDCSVD<typename Derived::PlainObject> svd(A.eval());
  return svd.singularValues();
}

template <typename Derived>
int numerical_rank(const Eigen::MatrixBase<Derived>& A) {
  const Vec s = singular_values(A);
  if (s.size() == 0) return 0;
  const double thr = rank_threshold(A.rows(), A.cols(), s[0]);
  return static_cast<int>((s.array() > thr).count());
}

/// sigma_max / sigma_min over min(rows, cols) singular values; +inf when the
/// smallest one falls below the rank threshold.
template <typename Derived>
double condition_number(const Eigen::MatrixBase<Derived>& A) {
  const Vec s = singular_values(A);
  if (s.size() == 0) return std::numeric_limits<double>::infinity();
  const double smin = s[s.size() - 1];
  if (s[0] == 0.0 || smin <= rank_threshold(A.rows(), A.cols(), s[0])) {
    return std::numeric_limits<double>::infinity();
  }
  return s[0] / smin;
}

//! Real embedding [[Re A, -Im A], [Im A, Re A]] of a complex matrix.
inline Mat embed(const CMat& A) {
  const Eigen::Index r = A.rows();
  const Eigen::Index c = A.cols();
  Mat E(2 * r, 2 * c);
  E.topLeftCorner(r, c) = A.real();
  E.topRightCorner(r, c) = -A.imag();
  E.bottomLeftCorner(r, c) = A.imag();
  E.bottomRightCorner(r, c) = A.real();
  return E;
}

//! [Re z; Im z]
inline Vec embed(const CVec& z) {
  Vec out(2 * z.size());
  out.head(z.size()) = z.real();
  out.tail(z.size()) = z.imag();
  return out;
}

inline CVec unembed(const Vec& x) {
  if (x.size() % 2 != 0) throw DimensionError("embedded vector must have even length");
  const Eigen::Index n = x.size() / 2;
  CVec z(n);
  z.real() = x.head(n);
  z.imag() = x.tail(n);
  return z;
}

}  // namespace adinv
