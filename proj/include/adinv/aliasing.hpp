#pragma once

// Spectral aliasing under grid sampling: the NUDFT of type II, the partition
// of K into confounded classes K_q, and the block-diagonal spectral systems
// built from them.

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "adinv/linalg.hpp"
#include "adinv/sampling.hpp"

namespace adinv {

/// Partition of K into classes K_q = {q + (i M1, j M2)} for q in Q. Q is
/// ordered row-major like K. Its ranges are {-(M-1)/2 .. M/2} per axis
/// (integer division), which is {-M/2+1 .. M/2} for even M.
class AliasPartition {
 public:
  AliasPartition(int n1, int n2, int m1, int m2) : K_(n1, n2), m1_(m1), m2_(m2) {
    if (m1 < 1 || m2 < 1) throw DimensionError("sampling grid dimensions must be positive");
    if (m1 > n1 || m2 > n2) {
      throw DimensionError("sampling grid " + std::to_string(m1) + "x" + std::to_string(m2) +
                           " exceeds the mode lattice " + std::to_string(n1) + "x" +
                           std::to_string(n2));
    }
    for (int q1 = q1_min(); q1 <= m1 / 2; ++q1) {
      for (int q2 = q2_min(); q2 <= m2 / 2; ++q2) {
        std::vector<Wavenumber> block;
        for (int i = floor_div(K_.k1_min() - q1 + m1 - 1, m1); q1 + i * m1 <= K_.k1_max(); ++i) {
          for (int j = floor_div(K_.k2_min() - q2 + m2 - 1, m2); q2 + j * m2 <= K_.k2_max();
               ++j) {
            block.push_back({q1 + i * m1, q2 + j * m2});
          }
        }
        Q_.push_back({q1, q2});
        blocks_.push_back(std::move(block));
      }
    }
  }

  const WavenumberSet& wavenumbers() const { return K_; }
  int m1() const { return m1_; }
  int m2() const { return m2_; }
  int q1_min() const { return -((m1_ - 1) / 2); }
  int q2_min() const { return -((m2_ - 1) / 2); }

  int size() const { return static_cast<int>(Q_.size()); }
  const std::vector<Wavenumber>& Q() const { return Q_; }
  const Wavenumber& q(int b) const { return Q_[static_cast<std::size_t>(b)]; }
  const std::vector<Wavenumber>& block(int b) const { return blocks_[static_cast<std::size_t>(b)]; }
  int d(int b) const { return static_cast<int>(block(b).size()); }

  int q_index(Wavenumber q) const {
    const int a = q.k1 - q1_min();
    const int b = q.k2 - q2_min();
    if (a < 0 || a >= m1_ || b < 0 || b >= m2_) throw DimensionError("q outside Q");
    return a * m2_ + b;
  }

  //! Upper bound floor((N1-1)/M1 + 1) * floor((N2-1)/M2 + 1) on every d_q.
  int max_block_size() const {
    return ((K_.n1() - 1) / m1_ + 1) * ((K_.n2() - 1) / m2_ + 1);
  }

 private:
  static int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

  WavenumberSet K_;
  int m1_;
  int m2_;
  std::vector<Wavenumber> Q_;
  std::vector<std::vector<Wavenumber>> blocks_;
};

inline AliasPartition alias_partition(int n1, int n2, int m1, int m2) {
  return AliasPartition(n1, n2, m1, m2);
}

/// beta(q) = (1/|M|) sum_m y(m) exp(-i 2 pi m'q) for every q of the partition,
/// using the supplied (unshifted) grid coordinates m.
/// Accepts real observations or a complex model.
template <typename Derived>
CVec nudft2(const Eigen::MatrixBase<Derived>& y, std::span<const Point> grid,
            const AliasPartition& part) {
  if (static_cast<std::size_t>(y.size()) != grid.size()) {
    throw DimensionError("observation vector does not match the grid size");
  }
  CVec beta(part.size());
  const double inv = 1.0 / static_cast<double>(grid.size());
  for (int b = 0; b < part.size(); ++b) {
    const Wavenumber q = part.q(b);
    cplx acc = 0.0;
    for (std::size_t m = 0; m < grid.size(); ++m) {
      acc += cplx(y(static_cast<Eigen::Index>(m))) *
             std::conj(detail::unit_phase(grid[m].x * q.k1 + grid[m].y * q.k2));
    }
    beta[b] = acc * inv;
  }
  return beta;
}

/// NUDFT coefficients of a time series (|Q| x L). For shifted layouts beta2
/// holds the second grid's coefficients.
struct SpectralObservation {
  CMat beta;
  std::optional<CMat> beta2;

  int num_times() const { return static_cast<int>(beta.cols()); }
};

//! Partition matching a grid layout: (|sel1|, |sel2|) or (M1, M2).
inline AliasPartition partition_for(const SensorLayout& layout, int n1, int n2) {
  if (const auto* nu = std::get_if<NonUniformGridLayout>(&layout)) {
    return AliasPartition(n1, n2, nu->m1(), nu->m2());
  }
  if (const auto* sh = std::get_if<ShiftedUniformLayout>(&layout)) {
    return AliasPartition(n1, n2, sh->m1, sh->m2);
  }
  throw ParameterError("irregular layouts have no alias partition; use the space-time problem");
}

inline SpectralObservation spectral_observation(const Mat& Y, const SensorLayout& layout,
                                                const AliasPartition& part) {
  SpectralObservation out;
  if (std::holds_alternative<IrregularLayout>(layout)) {
    throw ParameterError("NUDFT requires a grid layout");
  }
  const std::vector<Point> pts = sensor_positions(layout);
  if (static_cast<std::size_t>(Y.rows()) != pts.size()) {
    throw DimensionError("observation rows do not match the layout");
  }
  const Eigen::Index L = Y.cols();
  if (std::holds_alternative<NonUniformGridLayout>(layout)) {
    out.beta.resize(part.size(), L);
    for (Eigen::Index l = 0; l < L; ++l) out.beta.col(l) = nudft2(Y.col(l), pts, part);
    return out;
  }
  const auto& sh = std::get<ShiftedUniformLayout>(layout);
  const std::size_t half = static_cast<std::size_t>(sh.m1) * sh.m2;
  const std::span<const Point> base(pts.data(), half);
  out.beta.resize(part.size(), L);
  out.beta2 = CMat(part.size(), L);
  for (Eigen::Index l = 0; l < L; ++l) {
    const Vec col = Y.col(l);
    out.beta.col(l) = nudft2(col.head(static_cast<Eigen::Index>(half)), base, part);
    out.beta2->col(l) = nudft2(col.tail(static_cast<Eigen::Index>(half)), base, part);
  }
  return out;
}

inline SpectralObservation spectral_observation(const ObservationSet& obs,
                                                const AliasPartition& part) {
  return spectral_observation(obs.Y, obs.layout, part);
}

/// One aliasing class: y ~ A eta_q with row weights (inverse noise variances).
struct SpectralBlock {
  Wavenumber q;
  std::vector<int> columns;  ///< canonical indices into eta, one per column of A
  CMat A;
  CVec y;
  Vec weights;
};

enum class ProblemKind { SpaceTime, NonUniform, Shifted };

inline const char* problem_name(ProblemKind k) {
  switch (k) {
    case ProblemKind::SpaceTime: return "P-I";
    case ProblemKind::NonUniform: return "P-II";
    default: return "P-III";
  }
}

/// Block-diagonal spectral system. Blocks follow Q order; `pinned` lists eta
/// indices removed by truncation (fixed at zero in any solution).
struct BlockSystem {
  ProblemKind kind = ProblemKind::NonUniform;
  int n1 = 0;
  int n2 = 0;
  int L = 0;
  double sigma = 0.0;
  std::vector<SpectralBlock> blocks;
  std::vector<int> pinned;

  int num_modes() const { return n1 * n2; }

  int num_rows() const {
    int r = 0;
    for (const auto& b : blocks) r += static_cast<int>(b.A.rows());
    return r;
  }

  //! Dense equivalent of the block-diagonal design (rows stacked in Q order).
  CMat dense_design() const {
    CMat X = CMat::Zero(num_rows(), num_modes());
    int row = 0;
    for (const auto& b : blocks) {
      for (std::size_t c = 0; c < b.columns.size(); ++c) {
        X.block(row, b.columns[c], b.A.rows(), 1) = b.A.col(static_cast<Eigen::Index>(c));
      }
      row += static_cast<int>(b.A.rows());
    }
    return X;
  }

  CVec stacked_observations() const {
    CVec y(num_rows());
    int row = 0;
    for (const auto& b : blocks) {
      y.segment(row, b.y.size()) = b.y;
      row += static_cast<int>(b.y.size());
    }
    return y;
  }

  Vec stacked_weights() const {
    Vec w(num_rows());
    int row = 0;
    for (const auto& b : blocks) {
      w.segment(row, b.weights.size()) = b.weights;
      row += static_cast<int>(b.weights.size());
    }
    return w;
  }
};

namespace detail {

// Noise scale used for weighting; zero-noise data falls back to unit scale.
inline double weighting_sigma(double sigma) { return sigma > 0.0 ? sigma : 1.0; }

inline void check_horizon(const CMat& beta, int L, const AliasPartition& part) {
  if (L < 1) throw ParameterError("number of time samples must be >= 1");
  if (beta.rows() != part.size()) throw DimensionError("beta rows do not match |Q|");
  if (beta.cols() < L) throw DimensionError("beta has fewer time samples than requested");
}

}  // namespace detail

/// Problem P-II blocks: row l of block q is (g_k(l))_{k in K_q}, the data are
/// beta(l, q) and every row has variance sigma^2 d_q.
inline BlockSystem assemble_PII(const SpectralObservation& obs, const AliasPartition& part,
                                const PhysicsParams& params, int L, double sigma) {
  detail::check_horizon(obs.beta, L, part);
  const WavenumberSet& K = part.wavenumbers();
  const TemporalPropagator prop = build_propagator(params, K, L);
  const double s = detail::weighting_sigma(sigma);
  BlockSystem sys;
  sys.kind = ProblemKind::NonUniform;
  sys.n1 = K.n1();
  sys.n2 = K.n2();
  sys.L = L;
  sys.sigma = sigma;
  sys.blocks.reserve(static_cast<std::size_t>(part.size()));
  for (int b = 0; b < part.size(); ++b) {
    SpectralBlock blk;
    blk.q = part.q(b);
    const int d = part.d(b);
    blk.A.resize(L, d);
    for (int c = 0; c < d; ++c) {
      const int j = K.index(part.block(b)[static_cast<std::size_t>(c)]);
      blk.columns.push_back(j);
      blk.A.col(c) = prop.G.row(j).transpose();
    }
    blk.y = obs.beta.row(b).head(L).transpose();
    blk.weights = Vec::Constant(L, 1.0 / (s * s * d));
    sys.blocks.push_back(std::move(blk));
  }
  return sys;
}

//! b_{delta,q}: exp(i 2 pi delta'k) for k in K_q.
inline CVec shift_phases(const AliasPartition& part, int b, const Eigen::Vector2d& delta) {
  const auto& ks = part.block(b);
  CVec out(static_cast<Eigen::Index>(ks.size()));
  for (std::size_t c = 0; c < ks.size(); ++c) {
    out[static_cast<Eigen::Index>(c)] =
        detail::unit_phase(delta[0] * ks[c].k1 + delta[1] * ks[c].k2);
  }
  return out;
}

/// Problem P-III blocks: rows alternate 1'diag(g_q(l)) and b'diag(g_q(l)),
/// with data interleaving beta1(l, q) and beta2(l, q). Row variances are
/// sigma^2 d_q and sigma^2 ||b||^2 (= d_q).
inline BlockSystem assemble_PIII(const SpectralObservation& obs, const AliasPartition& part,
                                 const Eigen::Vector2d& delta, const PhysicsParams& params, int L,
                                 double sigma, bool check_shift = true) {
  detail::check_horizon(obs.beta, L, part);
  if (!obs.beta2) throw DimensionError("shifted problem needs coefficients from both grids");
  if (obs.beta2->rows() != obs.beta.rows() || obs.beta2->cols() < L) {
    throw DimensionError("second-grid coefficients have the wrong shape");
  }
  if (check_shift && !(delta[0] > 0.0 && delta[0] < 1.0 / part.m1() && delta[1] > 0.0 &&
                       delta[1] < 1.0 / part.m2())) {
    throw ParameterError("shift must satisfy 0 < delta_i < 1/M_i");
  }
  const WavenumberSet& K = part.wavenumbers();
  const TemporalPropagator prop = build_propagator(params, K, L);
  const double s = detail::weighting_sigma(sigma);
  BlockSystem sys;
  sys.kind = ProblemKind::Shifted;
  sys.n1 = K.n1();
  sys.n2 = K.n2();
  sys.L = L;
  sys.sigma = sigma;
  sys.blocks.reserve(static_cast<std::size_t>(part.size()));
  for (int b = 0; b < part.size(); ++b) {
    SpectralBlock blk;
    blk.q = part.q(b);
    const int d = part.d(b);
    const CVec phases = shift_phases(part, b, delta);
    blk.A.resize(2 * L, d);
    for (int c = 0; c < d; ++c) {
      const int j = K.index(part.block(b)[static_cast<std::size_t>(c)]);
      blk.columns.push_back(j);
      for (int l = 0; l < L; ++l) {
        blk.A(2 * l, c) = prop.G(j, l);
        blk.A(2 * l + 1, c) = phases[c] * prop.G(j, l);
      }
    }
    blk.y.resize(2 * L);
    for (int l = 0; l < L; ++l) {
      blk.y[2 * l] = obs.beta(b, l);
      blk.y[2 * l + 1] = (*obs.beta2)(b, l);
    }
    const double bnorm2 = phases.squaredNorm();
    blk.weights.resize(2 * L);
    for (int l = 0; l < L; ++l) {
      blk.weights[2 * l] = 1.0 / (s * s * d);
      blk.weights[2 * l + 1] = 1.0 / (s * s * bnorm2);
    }
    sys.blocks.push_back(std::move(blk));
  }
  return sys;
}

/// Drops blocks with max(|q1|, |q2|) > cutoff and pins their modes to zero.
inline BlockSystem block_truncate(const BlockSystem& sys, int cutoff) {
  if (cutoff < 0) throw ParameterError("truncation cutoff must be non-negative");
  BlockSystem out = sys;
  out.blocks.clear();
  for (const auto& b : sys.blocks) {
    if (std::max(std::abs(b.q.k1), std::abs(b.q.k2)) <= cutoff) {
      out.blocks.push_back(b);
    } else {
      out.pinned.insert(out.pinned.end(), b.columns.begin(), b.columns.end());
    }
  }
  if (out.blocks.empty()) throw ParameterError("truncation removed every block");
  std::sort(out.pinned.begin(), out.pinned.end());
  return out;
}

//! Plain-text report of block dimensions and conditioning.
inline std::string block_report(const BlockSystem& sys) {
  std::ostringstream os;
  os << "problem = " << problem_name(sys.kind) << "\n";
  os << "modes = " << sys.n1 << "x" << sys.n2 << "\n";
  os << "time_samples = " << sys.L << "\n";
  os << "blocks = " << sys.blocks.size() << "\n";
  os << "rows = " << sys.num_rows() << "\n";
  os << "pinned = " << sys.pinned.size() << "\n";
  os << "# q1 q2 rows d_q condition\n";
  for (const auto& b : sys.blocks) {
    os << b.q.k1 << " " << b.q.k2 << " " << b.A.rows() << " " << b.A.cols() << " "
       << condition_number(b.A) << "\n";
  }
  return os.str();
}

}  // namespace adinv
