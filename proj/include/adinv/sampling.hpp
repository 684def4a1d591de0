#pragma once

// Sensor layouts, the Fourier design matrix F and synthetic observations
// Y(l) = Re(F diag(eta) g(l)) + noise.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "adinv/rng.hpp"
#include "adinv/spectral.hpp"

namespace adinv {

//! Arbitrary sensor positions in [0,1)^2.
struct IrregularLayout {
  std::vector<Point> points;
};

/// Sub-grid of an Mt1 x Mt2 candidate mesh; sensor (a, b) sits at
/// (sel1[a] / Mt1, sel2[b] / Mt2).
struct NonUniformGridLayout {
  int mt1 = 0;
  int mt2 = 0;
  std::vector<int> sel1;
  std::vector<int> sel2;

  int m1() const { return static_cast<int>(sel1.size()); }
  int m2() const { return static_cast<int>(sel2.size()); }
};

/// Two nested M1 x M2 uniform grids; the second is the first shifted by delta.
struct ShiftedUniformLayout {
  int m1 = 0;
  int m2 = 0;
  Eigen::Vector2d delta = Eigen::Vector2d::Zero();
};

using SensorLayout = std::variant<IrregularLayout, NonUniformGridLayout, ShiftedUniformLayout>;

inline const char* layout_type_name(const SensorLayout& layout) {
  switch (layout.index()) {
    case 0: return "irregular";
    case 1: return "nonuniform";
    default: return "shifted";
  }
}

namespace detail {

inline void check_selection(const std::vector<int>& sel, int mt, const char* which) {
  if (sel.empty()) throw ParameterError(std::string(which) + " selection is empty");
  for (std::size_t i = 0; i < sel.size(); ++i) {
    if (sel[i] < 0 || sel[i] >= mt) {
      throw ParameterError(std::string(which) + " selection index out of range");
    }
    if (i > 0 && sel[i] <= sel[i - 1]) {
      throw ParameterError(std::string(which) + " selection must be strictly increasing");
    }
  }
}

}  // namespace detail

inline void validate_layout(const SensorLayout& layout) {
  if (const auto* irr = std::get_if<IrregularLayout>(&layout)) {
    if (irr->points.empty()) throw ParameterError("irregular layout has no sensors");
    for (const Point& p : irr->points) {
      if (!(p.x >= 0.0 && p.x < 1.0 && p.y >= 0.0 && p.y < 1.0)) {
        throw ParameterError("sensor position outside [0,1)^2");
      }
    }
    std::vector<Point> sorted = irr->points;
    std::sort(sorted.begin(), sorted.end(),
              [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ParameterError("irregular layout contains duplicate positions");
    }
  } else if (const auto* nu = std::get_if<NonUniformGridLayout>(&layout)) {
    if (nu->mt1 < 1 || nu->mt2 < 1) throw ParameterError("candidate mesh must be non-empty");
    detail::check_selection(nu->sel1, nu->mt1, "first-axis");
    detail::check_selection(nu->sel2, nu->mt2, "second-axis");
  } else {
    const auto& sh = std::get<ShiftedUniformLayout>(layout);
    if (sh.m1 < 1 || sh.m2 < 1) throw ParameterError("shifted grids must be non-empty");
    if (!(sh.delta[0] > 0.0 && sh.delta[0] < 1.0 / sh.m1 && sh.delta[1] > 0.0 &&
          sh.delta[1] < 1.0 / sh.m2)) {
      throw ParameterError("shift must satisfy 0 < delta_i < 1/M_i");
    }
  }
}

//! Positions of one uniform M1 x M2 grid offset by (dx, dy), row-major.
inline std::vector<Point> uniform_grid_positions(int m1, int m2, double dx = 0.0,
                                                 double dy = 0.0) {
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(m1) * m2);
  for (int a = 0; a < m1; ++a) {
    for (int b = 0; b < m2; ++b) {
      pts.push_back({static_cast<double>(a) / m1 + dx, static_cast<double>(b) / m2 + dy});
    }
  }
  return pts;
}

/// Sensor positions in their canonical order: irregular as given, grids
/// row-major (first index outer), shifted layouts first grid then second.
inline std::vector<Point> sensor_positions(const SensorLayout& layout) {
  if (const auto* irr = std::get_if<IrregularLayout>(&layout)) return irr->points;
  if (const auto* nu = std::get_if<NonUniformGridLayout>(&layout)) {
    std::vector<Point> pts;
    pts.reserve(nu->sel1.size() * nu->sel2.size());
    for (int a : nu->sel1) {
      for (int b : nu->sel2) {
        pts.push_back({static_cast<double>(a) / nu->mt1, static_cast<double>(b) / nu->mt2});
      }
    }
    return pts;
  }
  const auto& sh = std::get<ShiftedUniformLayout>(layout);
  std::vector<Point> pts = uniform_grid_positions(sh.m1, sh.m2);
  const std::vector<Point> second = uniform_grid_positions(sh.m1, sh.m2, sh.delta[0], sh.delta[1]);
  pts.insert(pts.end(), second.begin(), second.end());
  return pts;
}

//! F(m, j) = exp(i 2 pi s_m' k_j).
inline CMat build_F(std::span<const Point> positions, const WavenumberSet& K) {
  CMat F(static_cast<Eigen::Index>(positions.size()), K.size());
  for (std::size_t m = 0; m < positions.size(); ++m) {
    const Point s = positions[m];
    for (int j = 0; j < K.size(); ++j) {
      F(static_cast<Eigen::Index>(m), j) = detail::unit_phase(s.x * K[j].k1 + s.y * K[j].k2);
    }
  }
  return F;
}

inline CMat build_F(const SensorLayout& layout, const WavenumberSet& K) {
  const std::vector<Point> pts = sensor_positions(layout);
  return build_F(std::span<const Point>(pts), K);
}

/// Sensor data: Y is M x L, column l holds time l+1.
struct ObservationSet {
  Mat Y;
  SensorLayout layout;
  double delta = 1.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  /// Largest |Im| discarded from the noiseless model; near zero for
  /// conjugate-symmetric coefficients.
  double max_discarded_imag = 0.0;

  int num_sensors() const { return static_cast<int>(Y.rows()); }
  int num_times() const { return static_cast<int>(Y.cols()); }
};

//! Noiseless complex model F diag(eta) G at the layout's sensors (M x L).
inline CMat model_observations(const SpectralField& eta, const PhysicsParams& params,
                               const SensorLayout& layout, int L) {
  const WavenumberSet K = eta.wavenumbers();
  const CMat F = build_F(layout, K);
  return F * propagate(eta, params, L);
}

/// Synthesizes observations with i.i.d. N(0, sigma^2) noise, or a per-sensor
/// standard deviation when `sensor_sd` is given (diagonal covariance).
inline ObservationSet synthesize_observations(const SpectralField& eta, const PhysicsParams& params,
                                              const SensorLayout& layout, int L, double sigma,
                                              std::uint64_t seed,
                                              std::optional<Vec> sensor_sd = std::nullopt) {
  if (!(sigma >= 0.0)) throw ParameterError("noise standard deviation must be non-negative");
  validate_layout(layout);
  const CMat model = model_observations(eta, params, layout, L);
  ObservationSet obs;
  obs.layout = layout;
  obs.delta = params.delta;
  obs.sigma = sigma;
  obs.seed = seed;
  obs.Y = model.real();
  obs.max_discarded_imag = model.size() > 0 ? model.imag().cwiseAbs().maxCoeff() : 0.0;
  if (sensor_sd && sensor_sd->size() != obs.Y.rows()) {
    throw DimensionError("per-sensor noise vector does not match the number of sensors");
  }
  const bool noisy = sigma > 0.0 || (sensor_sd && sensor_sd->maxCoeff() > 0.0);
  if (noisy) {
    CounterRng rng(derive_seed(seed, "noise"));
    for (Eigen::Index l = 0; l < obs.Y.cols(); ++l) {
      for (Eigen::Index m = 0; m < obs.Y.rows(); ++m) {
        const double sd = sensor_sd ? (*sensor_sd)[m] : sigma;
        obs.Y(m, l) += sd * rng.normal();
      }
    }
  }
  return obs;
}

}  // namespace adinv
