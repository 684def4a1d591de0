#pragma once

// Peak and level-set summaries of a reconstructed field.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "adinv/spectral.hpp"

namespace adinv {

struct Peak {
  int i = 0;
  int j = 0;
  Point position;
  double value = 0.0;
};

inline constexpr std::array<double, 5> kLevelPercentiles{50.0, 60.0, 75.0, 85.0, 95.0};

/// Strict local maxima over the 8 periodic neighbours, by descending value.
/// Ties keep row-major order.
inline std::vector<Peak> find_peaks(const Grid& g) {
  std::vector<Peak> peaks;
  if (g.nx < 3 || g.ny < 3) throw DimensionError("peak detection needs at least a 3x3 grid");
  for (int i = 0; i < g.nx; ++i) {
    for (int j = 0; j < g.ny; ++j) {
      const double v = g.values(i, j);
      bool strict = true;
      for (int di = -1; di <= 1 && strict; ++di) {
        for (int dj = -1; dj <= 1 && strict; ++dj) {
          if (di == 0 && dj == 0) continue;
          const int a = (i + di + g.nx) % g.nx;
          const int b = (j + dj + g.ny) % g.ny;
          strict = v > g.values(a, b);
        }
      }
      if (strict) peaks.push_back({i, j, g.position(i, j), v});
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.value > b.value; });
  return peaks;
}

//! Percentile with linear interpolation between order statistics.
inline double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw DimensionError("percentile of an empty set");
  if (!(p >= 0.0 && p <= 100.0)) throw ParameterError("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

inline std::array<double, 5> level_values(const Grid& g) {
  const std::vector<double> v(g.values.data(), g.values.data() + g.values.size());
  std::array<double, 5> out{};
  for (std::size_t i = 0; i < kLevelPercentiles.size(); ++i) out[i] = percentile(v, kLevelPercentiles[i]);
  return out;
}

struct DetectionResult {
  Grid field;
  std::vector<Peak> peaks;
  std::array<double, 5> levels{};
  std::vector<double> source_distance;  ///< per true source, nearest significant peak
  std::vector<int> source_peak;         ///< index into peaks, -1 when none qualifies
};

/// The k highest peaks, k = number of true sources, are matched one-to-one
/// to the sources so that the worst periodic distance is smallest. Sources
/// left without a peak get +inf.
inline DetectionResult detect(const Grid& field, std::span<const Point> truth = {}) {
  DetectionResult r;
  r.field = field;
  r.peaks = find_peaks(field);
  r.levels = level_values(field);
  const std::size_t k = truth.size();
  const std::size_t c = std::min(k, r.peaks.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  r.source_distance.assign(k, inf);
  r.source_peak.assign(k, -1);
  if (c == 0) return r;
  auto dist = [&](std::size_t s, std::size_t p) { return periodic_distance(r.peaks[p].position, truth[s]); };
  if (k > 8) {
    // greedy fallback, the exhaustive search below is k!
    std::vector<char> used(c, 0);
    for (std::size_t s = 0; s < k; ++s) {
      for (std::size_t p = 0; p < c; ++p) {
        if (!used[p] && dist(s, p) < r.source_distance[s]) {
          if (r.source_peak[s] >= 0) used[static_cast<std::size_t>(r.source_peak[s])] = 0;
          r.source_distance[s] = dist(s, p);
          r.source_peak[s] = static_cast<int>(p);
          used[p] = 1;
        }
      }
    }
    return r;
  }
  std::vector<std::size_t> perm(k);
  for (std::size_t i = 0; i < k; ++i) perm[i] = i;  // entries >= c mean "no peak"
  double best_worst = inf, best_sum = inf;
  do {
    double worst = 0.0, sum = 0.0;
    for (std::size_t s = 0; s < k; ++s) {
      if (perm[s] >= c) continue;
      const double d = dist(s, perm[s]);
      worst = std::max(worst, d);
      sum += d;
    }
    if (worst < best_worst || (worst == best_worst && sum < best_sum)) {
      best_worst = worst;
      best_sum = sum;
      for (std::size_t s = 0; s < k; ++s) {
        r.source_peak[s] = perm[s] < c ? static_cast<int>(perm[s]) : -1;
        r.source_distance[s] = perm[s] < c ? dist(s, perm[s]) : inf;
      }
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return r;
}

//! Worst per-source distance; 0 without sources.
inline double worst_distance(const DetectionResult& r) {
  double w = 0.0;
  for (double d : r.source_distance) w = std::max(w, d);
  return w;
}

}  // namespace adinv
