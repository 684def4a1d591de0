#pragma once

// Independent reference computations used by the tests: an explicit
// finite-difference integrator for the PDE, dense normal-equation solves,
// SVD rank, and a dual projected-gradient QP solver. None of these share
// code paths with the production solver.

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "adinv/core.hpp"
#include "adinv/spectral.hpp"

namespace adinv {

/// Upwind advection, central diffusion, periodic boundary. dt <= 0 selects
/// half the stability limit; a dt above the limit is shrunk to it.
struct FdConfig {
  int nx = 160;
  int ny = 160;
  double dt = 0.0;
};

struct FdRun {
  Grid field;
  double dt = 0.0;
  long steps = 0;
};

namespace detail {

// PDE coefficients in domain units: the spectral convention
// gamma = -k'Dk - zeta - i v'k with basis exp(i 2 pi s'k) corresponds to
// velocity v / (2 pi) and diffusion D / (2 pi)^2.
struct FdCoefficients {
  double vx, vy, dxx, dxy, dyy;
};

inline FdCoefficients fd_coefficients(const PhysicsParams& p) {
  const double s = 1.0 / kTwoPi;
  return {p.v[0] * s, p.v[1] * s, p.D(0, 0) * s * s, p.D(0, 1) * s * s, p.D(1, 1) * s * s};
}

inline double fd_stable_dt(const FdCoefficients& c, double hx, double hy) {
  double limit = std::numeric_limits<double>::infinity();
  const double adv = std::abs(c.vx) / hx + std::abs(c.vy) / hy;
  if (adv > 0.0) limit = std::min(limit, 0.9 / adv);
  const double dmax = std::max(std::abs(c.dxx) + std::abs(c.dxy), std::abs(c.dyy) + std::abs(c.dxy));
  const double h = std::min(hx, hy);
  if (dmax > 0.0) limit = std::min(limit, 0.45 * h * h / (4.0 * dmax));
  return limit;
}

}  // namespace detail

inline FdRun fd_integrate(const Grid& field0, const PhysicsParams& params, double T,
                          const FdConfig& cfg = {}) {
  params.validate();
  if (!(T >= 0.0)) throw ParameterError("integration time must be non-negative");
  const int nx = field0.nx;
  const int ny = field0.ny;
  if (nx < 3 || ny < 3) throw DimensionError("finite-difference grid needs at least 3x3 cells");
  const double hx = 1.0 / nx;
  const double hy = 1.0 / ny;
  const auto c = detail::fd_coefficients(params);
  const double limit = detail::fd_stable_dt(c, hx, hy);
  double dt = cfg.dt > 0.0 ? std::min(cfg.dt, limit) : 0.5 * limit;
  FdRun run;
  run.field = field0;
  if (T == 0.0) return run;
  if (!std::isfinite(dt)) dt = T;
  run.steps = static_cast<long>(std::ceil(T / dt));
  run.dt = T / static_cast<double>(run.steps);
  dt = run.dt;
  const double decay = std::exp(-params.zeta * dt);

  Mat cur = field0.values;
  Mat next(nx, ny);
  auto ip = [nx](int i) { return i + 1 == nx ? 0 : i + 1; };
  auto im = [nx](int i) { return i == 0 ? nx - 1 : i - 1; };
  auto jp = [ny](int j) { return j + 1 == ny ? 0 : j + 1; };
  auto jm = [ny](int j) { return j == 0 ? ny - 1 : j - 1; };
  for (long step = 0; step < run.steps; ++step) {
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        const double u = cur(i, j);
        const double dudx = c.vx >= 0.0 ? (u - cur(im(i), j)) / hx : (cur(ip(i), j) - u) / hx;
        const double dudy = c.vy >= 0.0 ? (u - cur(i, jm(j))) / hy : (cur(i, jp(j)) - u) / hy;
        const double uxx = (cur(ip(i), j) - 2.0 * u + cur(im(i), j)) / (hx * hx);
        const double uyy = (cur(i, jp(j)) - 2.0 * u + cur(i, jm(j))) / (hy * hy);
        const double uxy = (cur(ip(i), jp(j)) - cur(ip(i), jm(j)) - cur(im(i), jp(j)) +
                            cur(im(i), jm(j))) /
                           (4.0 * hx * hy);
        const double rhs =
            -c.vx * dudx - c.vy * dudy + c.dxx * uxx + 2.0 * c.dxy * uxy + c.dyy * uyy;
        next(i, j) = (u + dt * rhs) * decay;
      }
    }
    cur.swap(next);
    if (!cur.allFinite()) throw NumericalError("finite-difference integration became unstable");
  }
  run.field.values = cur;
  return run;
}

//! Relative L2 distance ||a - b|| / ||b||.
inline double relative_l2(const Mat& a, const Mat& b) {
  const double nb = b.norm();
  return nb > 0.0 ? (a - b).norm() / nb : (a - b).norm();
}

/// Solves (X' W X + 2 lambda2 J'J) eta = X' W y by a dense rank-revealing QR.
inline Vec dense_gls(const Mat& xcal, const Vec& sigma_inv, const Vec& ycal, double lambda2,
                     const Mat& J) {
  if (xcal.rows() != ycal.size() || sigma_inv.size() != ycal.size()) {
    throw DimensionError("dense_gls: inconsistent data dimensions");
  }
  if (J.size() > 0 && J.cols() != xcal.cols()) throw DimensionError("dense_gls: J has wrong width");
  Mat A = xcal.transpose() * sigma_inv.asDiagonal() * xcal;
  if (J.size() > 0) A += 2.0 * lambda2 * J.transpose() * J;
  const Vec b = xcal.transpose() * (sigma_inv.array() * ycal.array()).matrix();
  Eigen::ColPivHouseholderQR<Mat> qr(A);
  if (qr.rank() < A.cols()) throw NumericalError("dense_gls: normal matrix is singular");
  return qr.solve(b);
}

/// Numerical rank from a two-sided Jacobi SVD. tol <= 0 uses
/// max(rows, cols) * eps * sigma_max.
template <typename Derived>
int brute_rank(const Eigen::MatrixBase<Derived>& A, double tol = 0.0) {
  if (A.rows() == 0 || A.cols() == 0) return 0;
  using Plain = typename Derived::PlainObject;
  Eigen::JacobiSVD<Plain> svd(A.eval());
  const auto& s = svd.singularValues();
  const double thr = tol > 0.0 ? tol
                               : static_cast<double>(std::max(A.rows(), A.cols())) *
                                     std::numeric_limits<double>::epsilon() * s[0];
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) r += s[i] > thr ? 1 : 0;
  return r;
}

/// min 1/2 x'Hx - b'x subject to R x >= 0, H positive definite, by projected
/// gradient ascent (accelerated) on the dual variable mu >= 0 (x = H^{-1}(b + R' mu)).
inline Vec nonneg_qp_oracle(const Mat& H, const Vec& b, const Mat& R, int iterations = 200000,
                            double tol = 1e-12) {
  Eigen::LLT<Mat> llt(H);
  if (llt.info() != Eigen::Success) throw NumericalError("QP oracle needs a positive definite H");
  const Mat HiRt = llt.solve(R.transpose());
  const Vec x0 = llt.solve(b);
  const Mat Q = R * HiRt;  // dual Hessian
  Eigen::SelfAdjointEigenSolver<Mat> es(Q, Eigen::EigenvaluesOnly);
  const double step = 1.0 / std::max(es.eigenvalues().maxCoeff(), 1e-300);
  Vec mu = Vec::Zero(R.rows());
  Vec z = mu;
  double t = 1.0;
  const Vec Rx0 = R * x0;
  for (int it = 0; it < iterations; ++it) {
    // gradient of the dual objective is -(R x(z)); accelerated with restart
    const Vec next = (z - step * Vec(Rx0 + Q * z)).cwiseMax(0.0);
    const double change = (next - mu).norm();
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const bool restart = (z - next).dot(next - mu) > 0.0;
    z = restart ? next : Vec(next + ((t - 1.0) / t_next) * (next - mu));
    t = restart ? 1.0 : t_next;
    mu = next;
    if (change <= tol * (1.0 + mu.norm())) break;
  }
  return x0 + HiRt * mu;
}

}  // namespace adinv
