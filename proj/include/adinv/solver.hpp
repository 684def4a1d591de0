#pragma once

// Regularized inverse problems
//
//   min_eta  1/2 (y - X eta)^H W (y - X eta) + lambda1 ||eta||_1 + lambda2 ||J eta||^2
//
// for the space-time design (P-I) and the block-diagonal spectral designs
// (P-II, P-III), solved with a two-level ADMM: the outer loop splits the data
// term from the regularizer, the inner loop splits the smoothness penalty
// from the L1 penalty. Complex unknowns are handled through the real
// embedding eta -> [Re eta; Im eta], on which ||.||_1 is separable.

#include <algorithm>
#include <chrono>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "adinv/aliasing.hpp"
#include "adinv/linalg.hpp"
#include "adinv/sampling.hpp"
#include "adinv/spectral.hpp"

namespace adinv {

using SpMat = Eigen::SparseMatrix<double>;

/// First differences between lattice-adjacent modes: horizontal pairs
/// (k1, k2) -> (k1+1, k2) first, then vertical pairs (k1, k2) -> (k1, k2+1),
/// each block enumerated in canonical mode order.
struct DifferenceOperator {
  int n1 = 0;
  int n2 = 0;
  SpMat J;

  int rows() const { return static_cast<int>(J.rows()); }
  int horizontal_rows() const { return n2 * (n1 - 1); }
};

inline DifferenceOperator build_J(int n1, int n2) {
  if (n1 < 2 || n2 < 2) throw DimensionError("difference operator needs at least 2x2 modes");
  const WavenumberSet K(n1, n2);
  std::vector<Eigen::Triplet<double>> trip;
  int row = 0;
  for (int j = 0; j < K.size(); ++j) {
    const Wavenumber k = K[j];
    if (k.k1 < K.k1_max()) {
      trip.emplace_back(row, K.index({k.k1 + 1, k.k2}), 1.0);
      trip.emplace_back(row, j, -1.0);
      ++row;
    }
  }
  for (int j = 0; j < K.size(); ++j) {
    const Wavenumber k = K[j];
    if (k.k2 < K.k2_max()) {
      trip.emplace_back(row, K.index({k.k1, k.k2 + 1}), 1.0);
      trip.emplace_back(row, j, -1.0);
      ++row;
    }
  }
  DifferenceOperator op{n1, n2, SpMat(row, K.size())};
  op.J.setFromTriplets(trip.begin(), trip.end());
  return op;
}

struct RegularizationParams {
  double lambda1 = 0.0;  ///< L1 weight on [Re eta; Im eta]
  double lambda2 = 0.0;  ///< weight of ||J eta||^2 (applied to Re and Im alike)

  void validate() const {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) {
      throw ParameterError("regularization weights must be non-negative");
    }
  }
};

//! Componentwise S_t(x): x - t above t, x + t below -t, zero in between.
inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

inline Vec soft_threshold(const Vec& x, double t) {
  if (!(t >= 0.0)) throw ParameterError("threshold must be non-negative");
  return x.unaryExpr([t](double v) { return soft_threshold(v, t); });
}

//! Dense design (space-time problem) with its precomputed Gram matrix.
struct DenseDesign {
  CMat X;
  CMat gram;  ///< X^H W X
};

//! Block-diagonal design; block columns index the active unknowns.
struct BlockDesign {
  std::vector<SpectralBlock> blocks;
  std::vector<int> row_offsets;
};

/// Assembled inverse problem. Unknowns are the `active` modes (all of K
/// unless blocks were truncated); the other modes are fixed at zero.
struct InverseProblemInstance {
  ProblemKind kind = ProblemKind::SpaceTime;
  int n1 = 0;
  int n2 = 0;
  std::vector<int> active;
  std::variant<DenseDesign, BlockDesign> design;
  CVec y;       ///< complex observations, one per design row
  Vec weights;  ///< inverse noise variance per row
  SpMat J;      ///< difference operator restricted to the active columns
  RegularizationParams reg;

  int num_unknowns() const { return static_cast<int>(active.size()); }
  int embedded_dim() const { return 2 * num_unknowns(); }
  int num_rows() const { return static_cast<int>(y.size()); }
  int num_modes() const { return n1 * n2; }

  bool is_block() const { return std::holds_alternative<BlockDesign>(design); }

  //! X z for active coefficients z.
  CVec apply(const CVec& z) const {
    if (const auto* d = std::get_if<DenseDesign>(&design)) return d->X * z;
    const auto& bd = std::get<BlockDesign>(design);
    CVec out(num_rows());
    for (std::size_t b = 0; b < bd.blocks.size(); ++b) {
      const auto& blk = bd.blocks[b];
      CVec zq(static_cast<Eigen::Index>(blk.columns.size()));
      for (std::size_t c = 0; c < blk.columns.size(); ++c) {
        zq[static_cast<Eigen::Index>(c)] = z[blk.columns[c]];
      }
      out.segment(bd.row_offsets[b], blk.A.rows()) = blk.A * zq;
    }
    return out;
  }

  //! X^H r
  CVec apply_adjoint(const CVec& r) const {
    if (const auto* d = std::get_if<DenseDesign>(&design)) return d->X.adjoint() * r;
    const auto& bd = std::get<BlockDesign>(design);
    CVec out = CVec::Zero(num_unknowns());
    for (std::size_t b = 0; b < bd.blocks.size(); ++b) {
      const auto& blk = bd.blocks[b];
      const CVec zq = blk.A.adjoint() * r.segment(bd.row_offsets[b], blk.A.rows());
      for (std::size_t c = 0; c < blk.columns.size(); ++c) {
        out[blk.columns[c]] += zq[static_cast<Eigen::Index>(c)];
      }
    }
    return out;
  }

  //! Dense complex design over the active unknowns.
  CMat dense_design() const {
    if (const auto* d = std::get_if<DenseDesign>(&design)) return d->X;
    const auto& bd = std::get<BlockDesign>(design);
    CMat X = CMat::Zero(num_rows(), num_unknowns());
    for (std::size_t b = 0; b < bd.blocks.size(); ++b) {
      const auto& blk = bd.blocks[b];
      for (std::size_t c = 0; c < blk.columns.size(); ++c) {
        X.block(bd.row_offsets[b], blk.columns[c], blk.A.rows(), 1) =
            blk.A.col(static_cast<Eigen::Index>(c));
      }
    }
    return X;
  }

  // Real-embedded views.
  Vec ycal() const { return embed(y); }
  Mat xcal() const { return embed(dense_design()); }
  Vec sigma_inv() const {
    Vec w(2 * weights.size());
    w << weights, weights;
    return w;
  }
  SpMat J_embedded() const {
    const Eigen::Index r = J.rows();
    const Eigen::Index c = J.cols();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(2 * J.nonZeros()));
    for (int k = 0; k < J.outerSize(); ++k) {
      for (SpMat::InnerIterator it(J, k); it; ++it) {
        trip.emplace_back(it.row(), it.col(), it.value());
        trip.emplace_back(it.row() + r, it.col() + c, it.value());
      }
    }
    SpMat out(2 * r, 2 * c);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
  }

  //! Embedded active vector -> complex coefficients over all of K.
  CVec to_full(const Vec& x) const {
    if (x.size() != embedded_dim()) throw DimensionError("embedded vector has the wrong length");
    CVec full = CVec::Zero(num_modes());
    const Eigen::Index n = num_unknowns();
    for (Eigen::Index a = 0; a < n; ++a) full[active[static_cast<std::size_t>(a)]] = {x[a], x[a + n]};
    return full;
  }

  //! Complex coefficients over K -> embedded active vector.
  Vec to_embedded(const CVec& full) const {
    if (full.size() != num_modes()) throw DimensionError("coefficient vector does not match K");
    const Eigen::Index n = num_unknowns();
    Vec x(2 * n);
    for (Eigen::Index a = 0; a < n; ++a) {
      const cplx v = full[active[static_cast<std::size_t>(a)]];
      x[a] = v.real();
      x[a + n] = v.imag();
    }
    return x;
  }
};

namespace detail {

inline SpMat select_columns(const SpMat& J, const std::vector<int>& active, int n) {
  std::vector<int> pos(static_cast<std::size_t>(n), -1);
  for (std::size_t a = 0; a < active.size(); ++a) pos[static_cast<std::size_t>(active[a])] = static_cast<int>(a);
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < J.outerSize(); ++k) {
    for (SpMat::InnerIterator it(J, k); it; ++it) {
      const int p = pos[static_cast<std::size_t>(it.col())];
      if (p >= 0) trip.emplace_back(it.row(), p, it.value());
    }
  }
  SpMat out(J.rows(), static_cast<Eigen::Index>(active.size()));
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

}  // namespace detail

/// Stacked space-time design: rows l*M + m hold F(m, :) diag(g(l)).
inline CMat build_design_PI(const CMat& F, const TemporalPropagator& prop) {
  if (F.cols() != prop.num_modes()) throw DimensionError("F and the propagator disagree on N");
  const Eigen::Index M = F.rows();
  const int L = prop.num_times();
  CMat X(M * L, F.cols());
  for (int l = 0; l < L; ++l) {
    X.middleRows(l * M, M) = F * prop.G.col(l).asDiagonal();
  }
  return X;
}

/// Gram matrix of the stacked space-time design under uniform weight w:
/// (F^H F) o (sum_l conj(g(l)) g(l)^T) * w, without forming the design.
inline CMat space_time_gram(const CMat& F, const TemporalPropagator& prop, double w) {
  const CMat FF = F.adjoint() * F;
  const CMat GG = prop.G.conjugate() * prop.G.transpose();
  return (FF.array() * GG.array()).matrix() * w;
}

/// Problem P-I from observations Y (M x L, uses the first L columns),
/// Sigma = sigma^2 I (unit weights when sigma = 0).
inline InverseProblemInstance make_space_time_instance(const CMat& F, const PhysicsParams& params,
                                                       const WavenumberSet& K, const Mat& Y, int L,
                                                       double sigma,
                                                       const RegularizationParams& reg) {
  if (F.rows() != Y.rows()) throw DimensionError("observation rows do not match F");
  if (L < 1 || Y.cols() < L) throw DimensionError("not enough time samples in the observations");
  if (F.cols() != K.size()) throw DimensionError("F does not match K");
  reg.validate();
  const TemporalPropagator prop = build_propagator(params, K, L);
  const double s = detail::weighting_sigma(sigma);
  const double w = 1.0 / (s * s);
  InverseProblemInstance inst;
  inst.kind = ProblemKind::SpaceTime;
  inst.n1 = K.n1();
  inst.n2 = K.n2();
  inst.active.resize(static_cast<std::size_t>(K.size()));
  std::iota(inst.active.begin(), inst.active.end(), 0);
  DenseDesign dd;
  dd.X = build_design_PI(F, prop);
  dd.gram = space_time_gram(F, prop, w);
  inst.design = std::move(dd);
  const Eigen::Index M = F.rows();
  inst.y.resize(M * L);
  for (int l = 0; l < L; ++l) inst.y.segment(l * M, M) = Y.col(l).cast<cplx>();
  inst.weights = Vec::Constant(M * L, w);
  inst.J = build_J(K.n1(), K.n2()).J;
  inst.reg = reg;
  return inst;
}

/// Problem P-II / P-III from an assembled (possibly truncated) block system.
inline InverseProblemInstance make_block_instance(const BlockSystem& sys,
                                                  const RegularizationParams& reg) {
  reg.validate();
  InverseProblemInstance inst;
  inst.kind = sys.kind;
  inst.n1 = sys.n1;
  inst.n2 = sys.n2;
  const int n = sys.num_modes();
  std::vector<char> is_pinned(static_cast<std::size_t>(n), 0);
  for (int p : sys.pinned) is_pinned[static_cast<std::size_t>(p)] = 1;
  std::vector<int> pos(static_cast<std::size_t>(n), -1);
  for (int j = 0; j < n; ++j) {
    if (!is_pinned[static_cast<std::size_t>(j)]) {
      pos[static_cast<std::size_t>(j)] = static_cast<int>(inst.active.size());
      inst.active.push_back(j);
    }
  }
  BlockDesign bd;
  int row = 0;
  for (const auto& b : sys.blocks) {
    SpectralBlock blk = b;
    for (int& c : blk.columns) {
      c = pos[static_cast<std::size_t>(c)];
      if (c < 0) throw DimensionError("block references a pinned mode");
    }
    bd.row_offsets.push_back(row);
    row += static_cast<int>(blk.A.rows());
    bd.blocks.push_back(std::move(blk));
  }
  inst.y = sys.stacked_observations();
  inst.weights = sys.stacked_weights();
  inst.design = std::move(bd);
  inst.J = detail::select_columns(build_J(sys.n1, sys.n2).J, inst.active, n);
  inst.reg = reg;
  return inst;
}

//! Same problem with the block design replaced by its dense equivalent.
inline InverseProblemInstance densified(const InverseProblemInstance& inst) {
  InverseProblemInstance out = inst;
  DenseDesign dd;
  dd.X = inst.dense_design();
  dd.gram = dd.X.adjoint() * inst.weights.asDiagonal() * dd.X;
  out.design = std::move(dd);
  return out;
}

//! Smooth part 1/2 sum_r w_r |y_r - (X z)_r|^2 at an embedded point.
inline double data_misfit(const InverseProblemInstance& inst, const Vec& x) {
  const CVec r = inst.y - inst.apply(unembed(x));
  return 0.5 * (inst.weights.array() * r.array().abs2()).sum();
}

inline double penalty_value(const InverseProblemInstance& inst, const Vec& x) {
  const Eigen::Index n = inst.num_unknowns();
  const double l1 = x.lpNorm<1>();
  const double smooth = (inst.J * x.head(n)).squaredNorm() + (inst.J * x.tail(n)).squaredNorm();
  return inst.reg.lambda1 * l1 + inst.reg.lambda2 * smooth;
}

/// Full objective at an embedded point x = [Re eta; Im eta] over the active
/// unknowns; ||eta||_1 counts real and imaginary parts separately.
inline double objective_value(const InverseProblemInstance& inst, const Vec& x) {
  if (x.size() != inst.embedded_dim()) throw DimensionError("embedded vector has the wrong length");
  return data_misfit(inst, x) + penalty_value(inst, x);
}

//! Gradient of the smooth part (data misfit plus lambda2 ||J eta||^2).
inline Vec smooth_gradient(const InverseProblemInstance& inst, const Vec& x) {
  const Eigen::Index n = inst.num_unknowns();
  const CVec z = unembed(x);
  const CVec r = inst.apply(z) - inst.y;
  const CVec wr = (inst.weights.array() * r.array()).matrix();
  Vec g = embed(CVec(inst.apply_adjoint(wr)));
  const SpMat JtJ = SpMat(inst.J.transpose()) * inst.J;
  g.head(n) += 2.0 * inst.reg.lambda2 * (JtJ * x.head(n));
  g.tail(n) += 2.0 * inst.reg.lambda2 * (JtJ * x.tail(n));
  return g;
}

struct AdmmConfig {
  double rho = 1.0;
  double omega = 1.0;
  double eps_abs = 1e-8;
  double eps_rel = 1e-6;
  int max_outer = 2000;
  int max_inner = 200;
  bool hermitian_projection = true;
  bool nonneg = false;

  void validate() const {
    if (!(rho > 0.0) || !(omega > 0.0)) throw ParameterError("rho and omega must be positive");
    if (!(eps_abs > 0.0) || !(eps_rel > 0.0)) throw ParameterError("tolerances must be positive");
    if (max_outer < 1 || max_inner < 1) throw ParameterError("iteration caps must be positive");
  }
};

/// Iterates of the two-level ADMM, all real-embedded over the active unknowns.
struct AdmmState {
  Vec eta;    ///< data-term iterate
  Vec psi;    ///< regularizer iterate (exactly sparse)
  Vec u;      ///< scaled outer dual
  Vec theta;  ///< inner L1 copy
  Vec v;      ///< scaled inner dual

  static AdmmState zeros(Eigen::Index dim) {
    return {Vec::Zero(dim), Vec::Zero(dim), Vec::Zero(dim), Vec::Zero(dim), Vec::Zero(dim)};
  }
};

struct IterationRecord {
  double primal = 0.0;
  double dual = 0.0;
  double objective = 0.0;
  int inner_iterations = 0;
};

struct AdmmDiagnostics {
  bool converged = false;
  int iterations = 0;
  long inner_iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;
  double wall_seconds = 0.0;
  std::vector<IterationRecord> history;
};

struct AdmmResult {
  SpectralField eta_hat;
  Vec solution;  ///< embedded active solution before any symmetrization
  AdmmState state;
  AdmmDiagnostics diagnostics;
};

namespace detail {

// Factor of X^H W X + rho I, dense or block by block.
class EtaSolver {
 public:
  EtaSolver(const InverseProblemInstance& inst, double rho) : inst_(&inst) {
    const Eigen::Index n = inst.num_unknowns();
    if (const auto* d = std::get_if<DenseDesign>(&inst.design)) {
      CMat H = d->gram;
      H.diagonal().array() += rho;
      dense_.compute(H);
      if (dense_.info() != Eigen::Success) throw NumericalError("eta-step factorization failed");
    } else {
      const auto& bd = std::get<BlockDesign>(inst.design);
      blocks_.reserve(bd.blocks.size());
      covered_.assign(static_cast<std::size_t>(n), 0);
      for (const auto& blk : bd.blocks) {
        CMat H = blk.A.adjoint() * blk.weights.asDiagonal() * blk.A;
        H.diagonal().array() += rho;
        blocks_.emplace_back(H);
        if (blocks_.back().info() != Eigen::Success) {
          throw NumericalError("eta-step block factorization failed");
        }
        for (int c : blk.columns) covered_[static_cast<std::size_t>(c)] = 1;
      }
    }
    rho_ = rho;
  }

  // Solves (X^H W X + rho I) z = rhs.
  CVec solve(const CVec& rhs) const {
    if (std::holds_alternative<DenseDesign>(inst_->design)) return dense_.solve(rhs);
    const auto& bd = std::get<BlockDesign>(inst_->design);
    CVec z(rhs.size());
    for (Eigen::Index a = 0; a < rhs.size(); ++a) {
      if (!covered_[static_cast<std::size_t>(a)]) z[a] = rhs[a] / rho_;
    }
    for (std::size_t b = 0; b < bd.blocks.size(); ++b) {
      const auto& cols = bd.blocks[b].columns;
      CVec r(static_cast<Eigen::Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) r[static_cast<Eigen::Index>(c)] = rhs[cols[c]];
      const CVec s = blocks_[b].solve(r);
      for (std::size_t c = 0; c < cols.size(); ++c) z[cols[c]] = s[static_cast<Eigen::Index>(c)];
    }
    return z;
  }

 private:
  const InverseProblemInstance* inst_;
  double rho_ = 1.0;
  Eigen::LLT<CMat> dense_;
  std::vector<Eigen::LLT<CMat>> blocks_;
  std::vector<char> covered_;
};

// Solver for the smooth part of the psi-step on embedded vectors.
using PsiSolve = std::function<Vec(const Vec&)>;

// 2 lambda2 J^T J + (rho + omega) I, applied to the Re and Im halves.
inline PsiSolve sparse_psi_solver(const InverseProblemInstance& inst, double rho, double omega) {
  const Eigen::Index n = inst.num_unknowns();
  SpMat P = 2.0 * inst.reg.lambda2 * (SpMat(inst.J.transpose()) * inst.J);
  SpMat I(n, n);
  I.setIdentity();
  P += (rho + omega) * I;
  auto chol = std::make_shared<Eigen::SimplicialLLT<SpMat>>(P);
  if (chol->info() != Eigen::Success) throw NumericalError("psi-step factorization failed");
  return [chol, n](const Vec& rhs) {
    Vec out(rhs.size());
    Eigen::Map<const Mat> R(rhs.data(), n, 2);
    Eigen::Map<Mat> O(out.data(), n, 2);
    O = chol->solve(R);
    return out;
  };
}

inline double norm_or_zero(const Vec& x) { return x.size() ? x.norm() : 0.0; }

// The two-level iteration. `psi_extra` is a fixed vector added to the
// right-hand side of every psi-tilde solve (zero for the plain problem).
class TwoLevelAdmm {
 public:
  TwoLevelAdmm(const InverseProblemInstance& inst, const AdmmConfig& cfg, const EtaSolver& eta,
               PsiSolve psi)
      : inst_(inst), cfg_(cfg), eta_(eta), psi_(std::move(psi)) {
    data_rhs_ = embed(CVec(inst.apply_adjoint(
        CVec((inst.weights.array() * inst.y.array()).matrix()))));
  }

  // Inner iteration for min_psi R(psi) + 1/2 psi'(rho+...)psi - target'psi;
  // leaves the result in st.theta and returns the number of sweeps.
  int prox(AdmmState& st, const Vec& target) const {
    const double omega = cfg_.omega;
    const double thr = inst_.reg.lambda1 / omega;
    const double sqrt_dim = std::sqrt(static_cast<double>(st.eta.size()));
    int inner = 1;
    for (; inner <= cfg_.max_inner; ++inner) {
      const Vec psit = psi_(Vec(target + omega * (st.theta - st.v)));
      const Vec theta_old = st.theta;
      st.theta = soft_threshold(Vec(psit + st.v), thr);
      st.v += psit - st.theta;
      const double r_in = (psit - st.theta).norm();
      const double s_in = omega * (st.theta - theta_old).norm();
      const double e_pri =
          sqrt_dim * cfg_.eps_abs + cfg_.eps_rel * std::max(psit.norm(), st.theta.norm());
      const double e_dual = sqrt_dim * cfg_.eps_abs + cfg_.eps_rel * omega * st.v.norm();
      if (r_in <= e_pri && s_in <= e_dual) break;
    }
    return std::min(inner, cfg_.max_inner);
  }

  AdmmDiagnostics run(AdmmState& st, const Vec& psi_extra,
                      const std::function<double(const Vec&)>& objective) const {
    const double rho = cfg_.rho;
    const double sqrt_dim = std::sqrt(static_cast<double>(st.eta.size()));
    AdmmDiagnostics diag;
    for (int it = 1; it <= cfg_.max_outer; ++it) {
      st.eta = embed(eta_.solve(unembed(Vec(data_rhs_ + rho * (st.psi - st.u)))));
      const Vec target = rho * (st.eta + st.u) + psi_extra;
      const int inner = prox(st, target);
      const Vec psi_old = st.psi;
      st.psi = st.theta;
      st.u += st.eta - st.psi;
      IterationRecord rec;
      rec.primal = (st.eta - st.psi).norm();
      rec.dual = rho * (st.psi - psi_old).norm();
      rec.objective = objective(st.psi);
      rec.inner_iterations = inner;
      diag.history.push_back(rec);
      diag.iterations = it;
      diag.inner_iterations += inner;
      diag.primal_residual = rec.primal;
      diag.dual_residual = rec.dual;
      diag.objective = rec.objective;
      const double e_pri =
          sqrt_dim * cfg_.eps_abs + cfg_.eps_rel * std::max(st.eta.norm(), st.psi.norm());
      const double e_dual = sqrt_dim * cfg_.eps_abs + cfg_.eps_rel * rho * st.u.norm();
      if (rec.primal <= e_pri && rec.dual <= e_dual) {
        diag.converged = true;
        break;
      }
    }
    return diag;
  }

 private:
  const InverseProblemInstance& inst_;
  const AdmmConfig& cfg_;
  const EtaSolver& eta_;
  PsiSolve psi_;
  Vec data_rhs_;
};

inline SpectralField finish(const InverseProblemInstance& inst, const Vec& x, bool project) {
  const WavenumberSet K(inst.n1, inst.n2);
  SpectralField f(K, inst.to_full(x), false);
  return project ? hermitian_project(f) : f;
}

}  // namespace detail

/// Two-level ADMM for the unconstrained problem. The eta-update solves
/// (X^H W X + rho I) eta = X^H W y + rho (psi - u); the inner loop solves
/// (2 lambda2 J^T J + (rho + omega) I) psi~ = rho (eta + u) + omega (theta - v),
/// theta = S_{lambda1/omega}(psi~ + v), v += psi~ - theta. The returned
/// coefficients are psi (exact zeros where the L1 penalty is active).
inline AdmmResult admm_solve(const InverseProblemInstance& inst, const AdmmConfig& cfg,
                             std::optional<AdmmState> warm = std::nullopt) {
  cfg.validate();
  inst.reg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const detail::EtaSolver eta(inst, cfg.rho);
  const detail::TwoLevelAdmm engine(inst, cfg, eta,
                                    detail::sparse_psi_solver(inst, cfg.rho, cfg.omega));
  AdmmResult res;
  res.state = warm ? *warm : AdmmState::zeros(inst.embedded_dim());
  const Vec zero = Vec::Zero(inst.embedded_dim());
  res.diagnostics =
      engine.run(res.state, zero, [&inst](const Vec& x) { return objective_value(inst, x); });
  res.solution = res.state.psi;
  res.eta_hat = detail::finish(inst, res.solution, cfg.hermitian_projection);
  res.diagnostics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

//! Rows of the embedded design that produce Re(X eta).
inline Mat real_part_design(const InverseProblemInstance& inst) {
  const CMat X = inst.dense_design();
  Mat R(X.rows(), 2 * X.cols());
  R << X.real(), -X.imag();
  return R;
}

/// ADMM with the constraint Re(X eta) >= 0. Splits eta = psi and
/// R eta = s with s >= 0; given eta the psi- and s-updates decouple, so the
/// pair is one ADMM block. The eta-step solves the dense embedded system
/// (X'WX + rho I + rho R'R) eta = X'Wy + rho (psi - u) + rho R'(s - d).
/// The penalty is cfg.rho times the mean diagonal of X'WX so that it is
/// measured in units of the data curvature.
inline AdmmResult admm_solve_nonneg(const InverseProblemInstance& inst, const AdmmConfig& cfg) {
  cfg.validate();
  inst.reg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Mat R = real_part_design(inst);
  const Mat Xc = inst.xcal();
  const Vec w = inst.sigma_inv();
  const Eigen::Index dim = inst.embedded_dim();
  const Eigen::Index m = R.rows();
  const Mat H = Xc.transpose() * w.asDiagonal() * Xc;
  const Mat RtR = R.transpose() * R;
  const Vec data_rhs = Xc.transpose() * (w.array() * inst.ycal().array()).matrix();

  AdmmConfig work = cfg;
  work.rho = cfg.rho * std::max(H.trace() / static_cast<double>(dim), 1e-12);
  Eigen::LLT<Mat> chol;
  std::optional<detail::EtaSolver> eta_unused;
  std::optional<detail::TwoLevelAdmm> engine;
  auto factor = [&] {
    Mat A = H + work.rho * RtR;
    A.diagonal().array() += work.rho;
    chol.compute(A);
    if (chol.info() != Eigen::Success) {
      throw NumericalError("constrained eta-step factorization failed");
    }
    engine.reset();
    eta_unused.emplace(inst, work.rho);
    engine.emplace(inst, work, *eta_unused,
                   detail::sparse_psi_solver(inst, work.rho, work.omega));
  };
  factor();

  AdmmResult res;
  AdmmState& st = res.state;
  st = AdmmState::zeros(dim);
  Vec slack = Vec::Zero(m);
  Vec d = Vec::Zero(m);
  const double sqrt_pri = std::sqrt(static_cast<double>(dim + m));
  const double sqrt_dual = std::sqrt(static_cast<double>(dim));
  AdmmDiagnostics& diag = res.diagnostics;
  for (int it = 1; it <= cfg.max_outer; ++it) {
    const double rho = work.rho;
    st.eta = chol.solve(Vec(data_rhs + rho * (st.psi - st.u) + rho * (R.transpose() * (slack - d))));
    const Vec pred = R * st.eta;
    const int inner = engine->prox(st, Vec(rho * (st.eta + st.u)));
    const Vec psi_old = st.psi;
    const Vec slack_old = slack;
    st.psi = st.theta;
    slack = (pred + d).cwiseMax(0.0);
    st.u += st.eta - st.psi;
    d += pred - slack;

    IterationRecord rec;
    rec.primal = std::sqrt((st.eta - st.psi).squaredNorm() + (pred - slack).squaredNorm());
    rec.dual = rho * Vec((st.psi - psi_old) + R.transpose() * (slack - slack_old)).norm();
    rec.objective = objective_value(inst, st.psi);
    rec.inner_iterations = inner;
    diag.history.push_back(rec);
    diag.iterations = it;
    diag.inner_iterations += inner;
    diag.primal_residual = rec.primal;
    diag.dual_residual = rec.dual;
    diag.objective = rec.objective;
    const double lhs = std::sqrt(st.eta.squaredNorm() + pred.squaredNorm());
    const double rhs = std::sqrt(st.psi.squaredNorm() + slack.squaredNorm());
    const double e_pri = sqrt_pri * cfg.eps_abs + cfg.eps_rel * std::max(lhs, rhs);
    const double e_dual =
        sqrt_dual * cfg.eps_abs + cfg.eps_rel * rho * Vec(st.u + R.transpose() * d).norm();
    if (rec.primal <= e_pri && rec.dual <= e_dual) {
      diag.converged = true;
      break;
    }
  }
  res.solution = st.psi;
  res.eta_hat = detail::finish(inst, res.solution, cfg.hermitian_projection);
  diag.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

//! Dispatches on cfg.nonneg.
inline AdmmResult solve(const InverseProblemInstance& inst, const AdmmConfig& cfg) {
  return cfg.nonneg ? admm_solve_nonneg(inst, cfg) : admm_solve(inst, cfg);
}

}  // namespace adinv
