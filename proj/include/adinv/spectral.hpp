#pragma once

// Fourier-mode bookkeeping and the spectral forward model of a constant
// coefficient advection-diffusion-decay process on the periodic unit square.

#include <cstdint>
#include <span>
#include <vector>

#include "adinv/core.hpp"

namespace adinv {

//! Integer wavenumber k = (k1, k2).
struct Wavenumber {
  int k1 = 0;
  int k2 = 0;
  friend bool operator==(const Wavenumber&, const Wavenumber&) = default;
};

/// The canonical mode set K = {-N1/2+1..N1/2} x {-N2/2+1..N2/2}, ordered
/// row-major with k1 outer and k2 inner. Every matrix indexed by modes in
/// this library (F, G, J, the design matrices) uses this ordering.
class WavenumberSet {
 public:
  WavenumberSet(int n1, int n2) : n1_(n1), n2_(n2) {
    if (n1 < 2 || n2 < 2 || n1 % 2 != 0 || n2 % 2 != 0) {
      throw DimensionError("wavenumber set dimensions must be even and >= 2, got " +
                           std::to_string(n1) + "x" + std::to_string(n2));
    }
    modes_.reserve(static_cast<std::size_t>(n1) * n2);
    for (int a = 0; a < n1; ++a) {
      for (int b = 0; b < n2; ++b) {
        modes_.push_back({k1_min() + a, k2_min() + b});
      }
    }
  }

  int n1() const { return n1_; }
  int n2() const { return n2_; }
  int size() const { return n1_ * n2_; }
  int k1_min() const { return -n1_ / 2 + 1; }
  int k1_max() const { return n1_ / 2; }
  int k2_min() const { return -n2_ / 2 + 1; }
  int k2_max() const { return n2_ / 2; }

  const std::vector<Wavenumber>& modes() const { return modes_; }
  const Wavenumber& operator[](int j) const { return modes_[static_cast<std::size_t>(j)]; }

  bool contains(Wavenumber k) const {
    return k.k1 >= k1_min() && k.k1 <= k1_max() && k.k2 >= k2_min() && k.k2 <= k2_max();
  }

  int index(Wavenumber k) const {
    if (!contains(k)) {
      throw DimensionError("wavenumber (" + std::to_string(k.k1) + "," + std::to_string(k.k2) +
                           ") is outside K");
    }
    return (k.k1 - k1_min()) * n2_ + (k.k2 - k2_min());
  }

  /// Lattice mirror of k: -k wrapped back into K. Only the four modes with
  /// k1 in {0, N1/2} and k2 in {0, N2/2} are their own mirror.
  Wavenumber mirror(Wavenumber k) const {
    auto wrap = [](int v, int lo, int n) {
      int r = (v - lo) % n;
      if (r < 0) r += n;
      return r + lo;
    };
    return {wrap(-k.k1, k1_min(), n1_), wrap(-k.k2, k2_min(), n2_)};
  }

  bool is_nyquist(Wavenumber k) const { return k.k1 == k1_max() || k.k2 == k2_max(); }

  friend bool operator==(const WavenumberSet& a, const WavenumberSet& b) {
    return a.n1_ == b.n1_ && a.n2_ == b.n2_;
  }

 private:
  int n1_;
  int n2_;
  std::vector<Wavenumber> modes_;
};

inline WavenumberSet build_wavenumber_set(int n1, int n2) { return WavenumberSet(n1, n2); }

/// Physical parameters of the advection-diffusion operator.
struct PhysicsParams {
  Eigen::Vector2d v = Eigen::Vector2d::Zero();  ///< velocity
  Eigen::Matrix2d D = Eigen::Matrix2d::Zero();  ///< diffusion tensor, symmetric PSD
  double zeta = 0.0;                            ///< decay rate
  double delta = 1.0;                           ///< time between samples

  void validate() const {
    if (!(delta > 0.0) || !std::isfinite(delta)) {
      throw ParameterError("time step must be positive");
    }
    if (!(zeta >= 0.0)) throw ParameterError("decay rate must be non-negative");
    if (std::abs(D(0, 1) - D(1, 0)) > 1e-12 * (1.0 + D.cwiseAbs().maxCoeff())) {
      throw ParameterError("diffusion tensor must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(D);
    if (es.eigenvalues().minCoeff() < -1e-12 * (1.0 + D.cwiseAbs().maxCoeff())) {
      throw ParameterError("diffusion tensor must be positive semidefinite");
    }
    if (!v.allFinite()) throw ParameterError("velocity must be finite");
  }
};

//! Per-mode rate: -k'Dk - zeta - i v'k (no 2*pi factors).
inline cplx gamma(const PhysicsParams& p, Wavenumber k) {
  const Eigen::Vector2d kv(k.k1, k.k2);
  return {-kv.dot(p.D * kv) - p.zeta, -p.v.dot(kv)};
}

/// Coefficient vector over K plus a flag recording that it is meant to be
/// conjugate-symmetric (a real field).
struct SpectralField {
  int n1 = 0;
  int n2 = 0;
  CVec coeffs;
  bool hermitian = false;

  SpectralField() = default;
  SpectralField(const WavenumberSet& K, CVec c, bool herm = false)
      : n1(K.n1()), n2(K.n2()), coeffs(std::move(c)), hermitian(herm) {
    if (coeffs.size() != K.size()) {
      throw DimensionError("coefficient vector has length " + std::to_string(coeffs.size()) +
                           ", expected " + std::to_string(K.size()));
    }
  }

  WavenumberSet wavenumbers() const { return WavenumberSet(n1, n2); }
};

/// Largest deviation from conjugate symmetry over the lattice-mirror pairs,
/// including the imaginary part of self-mirrored modes.
inline double hermitian_defect(const WavenumberSet& K, const CVec& c) {
  double worst = 0.0;
  for (int j = 0; j < K.size(); ++j) {
    const int m = K.index(K.mirror(K[j]));
    worst = std::max(worst, std::abs(c[j] - std::conj(c[m])));
  }
  return worst;
}

inline bool is_hermitian(const WavenumberSet& K, const CVec& c, double tol = 1e-12) {
  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  return hermitian_defect(K, c) <= tol * scale;
}

//! Symmetrizes eta(k) <- (eta(k) + conj(eta(mirror k))) / 2. Idempotent.
inline SpectralField hermitian_project(const SpectralField& eta) {
  const WavenumberSet K = eta.wavenumbers();
  CVec out(eta.coeffs.size());
  for (int j = 0; j < K.size(); ++j) {
    const int m = K.index(K.mirror(K[j]));
    out[j] = 0.5 * (eta.coeffs[j] + std::conj(eta.coeffs[m]));
  }
  for (int j = 0; j < K.size(); ++j) {
    if (K.index(K.mirror(K[j])) == j) out[j] = out[j].real();
  }
  return SpectralField(K, std::move(out), true);
}

/// Zeroes the Nyquist row and column (k1 = N1/2 or k2 = N2/2). Those modes
/// have no partner -k in K, so propagation breaks their conjugate symmetry;
/// without them a Hermitian field stays real at every time and location.
inline SpectralField strip_nyquist(const SpectralField& eta) {
  const WavenumberSet K = eta.wavenumbers();
  SpectralField out = eta;
  for (int j = 0; j < K.size(); ++j) {
    if (K.is_nyquist(K[j])) out.coeffs[j] = 0.0;
  }
  return out;
}

/// Temporal propagator: gamma per mode and G(j, l) = exp(gamma_j * l * delta)
/// for l = 0..L-1 (column l corresponds to observation time l+1).
struct TemporalPropagator {
  CVec gammas;
  CMat G;

  int num_modes() const { return static_cast<int>(gammas.size()); }
  int num_times() const { return static_cast<int>(G.cols()); }
};

inline TemporalPropagator build_propagator(const PhysicsParams& p, const WavenumberSet& K,
                                           int L) {
  if (L < 1) throw ParameterError("number of time samples must be >= 1");
  p.validate();
  TemporalPropagator prop;
  prop.gammas.resize(K.size());
  prop.G.resize(K.size(), L);
  for (int j = 0; j < K.size(); ++j) {
    const cplx g = gamma(p, K[j]);
    prop.gammas[j] = g;
    for (int l = 0; l < L; ++l) prop.G(j, l) = std::exp(g * (static_cast<double>(l) * p.delta));
  }
  return prop;
}

//! alpha(k, l) = eta(k) * exp(gamma_k * l * delta), l = 0..L-1.
inline CMat propagate(const SpectralField& eta, const PhysicsParams& p, int L) {
  const WavenumberSet K = eta.wavenumbers();
  const TemporalPropagator prop = build_propagator(p, K, L);
  return prop.G.array().colwise() * eta.coeffs.array();
}

//! Coefficients after an arbitrary elapsed time t.
inline CVec propagate_to(const SpectralField& eta, const PhysicsParams& p, double t) {
  const WavenumberSet K = eta.wavenumbers();
  CVec out(K.size());
  for (int j = 0; j < K.size(); ++j) out[j] = eta.coeffs[j] * std::exp(gamma(p, K[j]) * t);
  return out;
}

namespace detail {

// exp(i 2 pi x) with x reduced modulo 1 first.
inline cplx unit_phase(double x) {
  const double r = x - std::floor(x);
  return std::polar(1.0, kTwoPi * r);
}

// exp(i 2 pi a b / n) computed from the exact integer residue.
inline cplx lattice_phase(long a, long b, long n) {
  long r = (a * b) % n;
  if (r < 0) r += n;
  return std::polar(1.0, kTwoPi * static_cast<double>(r) / static_cast<double>(n));
}

// E(i, a) = exp(i 2 pi i k(a) / n) for lattice index i and mode index a.
inline CMat lattice_basis(int n, int modes, int k_min) {
  CMat E(n, modes);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < modes; ++a) E(i, a) = lattice_phase(i, k_min + a, n);
  }
  return E;
}

inline Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
as_mode_matrix(const CVec& c, const WavenumberSet& K) {
  return {c.data(), K.n1(), K.n2()};
}

}  // namespace detail

/// Field value sum_k c(k) exp(i 2 pi s'k) at each point (wrapped into [0,1)^2).
inline CVec evaluate_field(const CVec& coeffs, const WavenumberSet& K,
                           std::span<const Point> points) {
  if (coeffs.size() != K.size()) throw DimensionError("coefficients do not match K");
  const auto C = detail::as_mode_matrix(coeffs, K);
  CVec out(static_cast<Eigen::Index>(points.size()));
  CVec e1(K.n1());
  CVec e2(K.n2());
  for (std::size_t p = 0; p < points.size(); ++p) {
    const double x = wrap_unit(points[p].x);
    const double y = wrap_unit(points[p].y);
    for (int a = 0; a < K.n1(); ++a) e1[a] = detail::unit_phase(x * (K.k1_min() + a));
    for (int b = 0; b < K.n2(); ++b) e2[b] = detail::unit_phase(y * (K.k2_min() + b));
    out[static_cast<Eigen::Index>(p)] = e1.transpose() * (C * e2);
  }
  return out;
}

/// A real field sampled on the nx x ny lattice s = (i/nx, j/ny); values(i, j).
struct Grid {
  int nx = 0;
  int ny = 0;
  Mat values;

  Grid() = default;
  Grid(int nx_, int ny_) : nx(nx_), ny(ny_), values(Mat::Zero(nx_, ny_)) {}
  Grid(int nx_, int ny_, Mat v) : nx(nx_), ny(ny_), values(std::move(v)) {
    if (values.rows() != nx || values.cols() != ny) throw DimensionError("grid shape mismatch");
  }

  Point position(int i, int j) const {
    return {static_cast<double>(i) / nx, static_cast<double>(j) / ny};
  }
};

//! Complex field values on an nx x ny lattice via two separable passes.
inline CMat evaluate_lattice(const CVec& coeffs, const WavenumberSet& K, int nx, int ny) {
  if (coeffs.size() != K.size()) throw DimensionError("coefficients do not match K");
  if (nx < 1 || ny < 1) throw DimensionError("lattice must be non-empty");
  const CMat E1 = detail::lattice_basis(nx, K.n1(), K.k1_min());
  const CMat E2 = detail::lattice_basis(ny, K.n2(), K.k2_min());
  const CMat C = detail::as_mode_matrix(coeffs, K);
  return E1 * C * E2.transpose();
}

//! Real part of the field on a lattice, as a Grid.
inline Grid evaluate_grid(const CVec& coeffs, const WavenumberSet& K, int nx, int ny) {
  return Grid(nx, ny, evaluate_lattice(coeffs, K, nx, ny).real());
}

/// Discrete Fourier analysis of a real N1 x N2 lattice field. The result
/// reproduces the samples exactly under evaluate_lattice and is conjugate
/// symmetric under the lattice mirror.
inline SpectralField project_source(const Grid& samples, const WavenumberSet& K) {
  if (samples.nx != K.n1() || samples.ny != K.n2()) {
    throw DimensionError("lattice " + std::to_string(samples.nx) + "x" +
                         std::to_string(samples.ny) + " does not match K " +
                         std::to_string(K.n1()) + "x" + std::to_string(K.n2()));
  }
  const CMat E1 = detail::lattice_basis(K.n1(), K.n1(), K.k1_min());
  const CMat E2 = detail::lattice_basis(K.n2(), K.n2(), K.k2_min());
  const CMat C = E1.adjoint() * samples.values.cast<cplx>() * E2.conjugate() /
                 static_cast<double>(K.size());
  CVec coeffs(K.size());
  for (int a = 0; a < K.n1(); ++a) {
    for (int b = 0; b < K.n2(); ++b) coeffs[a * K.n2() + b] = C(a, b);
  }
  return hermitian_project(SpectralField(K, std::move(coeffs), true));
}

/// Sum of periodic exponential bumps amp * exp(-|s - c| / width) on a lattice.
inline Grid gaussian_sources(std::span<const Point> centers, double amplitude, double width,
                             int nx, int ny) {
  if (!(width > 0.0)) throw ParameterError("source width must be positive");
  Grid g(nx, ny);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const Point s = g.position(i, j);
      double acc = 0.0;
      for (const Point& c : centers) acc += amplitude * std::exp(-periodic_distance(s, c) / width);
      g.values(i, j) = acc;
    }
  }
  return g;
}

}  // namespace adinv
