#pragma once

// Seeded random problem generators shared by the unit and acceptance tests.

#include <algorithm>
#include <vector>

#include "adinv/aliasing.hpp"
#include "adinv/identifiability.hpp"
#include "adinv/oracle.hpp"
#include "adinv/rng.hpp"
#include "adinv/sampling.hpp"
#include "adinv/solver.hpp"

namespace adinv::testing {

inline SpectralField random_field(const WavenumberSet& K, CounterRng& rng, bool herm = true) {
  CVec c(K.size());
  for (int j = 0; j < K.size(); ++j) c[j] = {rng.normal(), rng.normal()};
  SpectralField f(K, c);
  return herm ? hermitian_project(f) : f;
}

inline std::vector<Point> random_points(int m, CounterRng& rng) {
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) pts.push_back({rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)});
  return pts;
}

inline PhysicsParams random_params(CounterRng& rng) {
  PhysicsParams p;
  p.v = {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
  const double a = rng.uniform(0.005, 0.05);
  const double b = rng.uniform(0.005, 0.05);
  const double c = rng.uniform(-0.5, 0.5) * std::sqrt(a * b);
  p.D << a, c, c, b;
  p.zeta = rng.uniform(0.0, 0.05);
  p.delta = 1.0;
  return p;
}

struct RandomProblem {
  WavenumberSet K{2, 2};
  PhysicsParams params;
  SpectralField truth;
  std::vector<Point> sensors;
  int L = 1;
  double sigma = 0.1;
  ObservationSet obs;
};

/// Space-time instance with N <= 64 modes and M*L <= 512 rows.
inline RandomProblem random_space_time(std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, "random-problem"));
  static const int dims[] = {2, 4, 6, 8};
  RandomProblem rp;
  const int n1 = dims[rng.next_u64() % 4];
  const int n2 = dims[rng.next_u64() % 4];
  rp.K = WavenumberSet(std::max(n1, 4), n2);
  const int N = rp.K.size();
  rp.L = 2 + static_cast<int>(rng.next_u64() % 7);
  const int max_m = 512 / rp.L;
  const int min_m = std::min(max_m, std::max(4, (3 * N) / (2 * rp.L) + 1));
  rp.sensors = random_points(min_m + static_cast<int>(rng.next_u64() % (max_m - min_m + 1)), rng);
  rp.params = random_params(rng);
  rp.truth = random_field(rp.K, rng);
  rp.sigma = 1.0;
  rp.obs = synthesize_observations(rp.truth, rp.params, IrregularLayout{rp.sensors}, rp.L,
                                   rp.sigma, derive_seed(seed, "noise"));
  return rp;
}

inline InverseProblemInstance instance_of(const RandomProblem& rp, RegularizationParams reg) {
  const CMat F = build_F(std::span<const Point>(rp.sensors), rp.K);
  return make_space_time_instance(F, rp.params, rp.K, rp.obs.Y, rp.L, rp.sigma, reg);
}

inline Mat dense_J(const InverseProblemInstance& inst) { return Mat(inst.J_embedded()); }

//! ||X^H W y||_inf over the embedded coordinates: the smallest lambda1 with a zero solution.
inline double lambda1_max(const InverseProblemInstance& inst) {
  return smooth_gradient(inst, Vec::Zero(inst.embedded_dim())).cwiseAbs().maxCoeff();
}

//! Largest violation of the L1 subgradient optimality conditions.
inline double subgradient_violation(const InverseProblemInstance& inst, const Vec& x) {
  const Vec g = smooth_gradient(inst, x);
  const double l1 = inst.reg.lambda1;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) {
      worst = std::max(worst, std::abs(g[i] + l1 * (x[i] > 0.0 ? 1.0 : -1.0)));
    } else {
      worst = std::max(worst, std::abs(g[i]) - l1);
    }
  }
  return worst;
}

//! Parameters drawn from generic and symmetric families so that equal-gamma
//! groups of several sizes occur.
inline PhysicsParams ident_params(CounterRng& rng) {
  PhysicsParams p;
  const double zeta = rng.uniform(0.0, 0.1);
  const double a = rng.uniform(0.02, 0.1);
  const double b = rng.uniform(0.02, 0.1);
  switch (rng.next_u64() % 4) {
    case 0:  // generic
      p.v = {rng.uniform(0.05, 0.5), -rng.uniform(0.05, 0.5)};
      p.D << a, 0.3 * std::sqrt(a * b), 0.3 * std::sqrt(a * b), b;
      break;
    case 1:  // isotropic, no drift: gamma depends on |k|^2
      p.v = {0.0, 0.0};
      p.D << a, 0.0, 0.0, a;
      break;
    case 2:  // axis drift, diagonal D: k2 -> -k2 symmetry
      p.v = {rng.uniform(0.05, 0.5), 0.0};
      p.D << a, 0.0, 0.0, b;
      break;
    default:  // pure decay: a single group
      p.v = {0.0, 0.0};
      p.D.setZero();
      break;
  }
  p.zeta = zeta;
  p.delta = 1.0;
  return p;
}

struct SpaceTimeCase {
  WavenumberSet K{2, 2};
  PhysicsParams params;
  int L = 1;
  std::vector<Point> sensors;
};

/// N <= 16, L <= 8 and L above the number of gamma groups.
inline SpaceTimeCase random_prop2_case(std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, "prop2-case"));
  SpaceTimeCase c;
  for (;;) {
    c.K = WavenumberSet(rng.next_u64() % 2 ? 4 : 2, rng.next_u64() % 2 ? 4 : 2);
    c.params = ident_params(rng);
    const int groups = static_cast<int>(gamma_groups(c.params, c.K, 1e-9).size());
    if (groups >= 8) continue;
    c.L = groups + 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(8 - groups));
    break;
  }
  const int m = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(c.K.size()));
  c.sensors = random_points(m, rng);
  if (m >= 2 && rng.next_u64() % 3 == 0) c.sensors[1] = c.sensors[0];
  return c;
}

struct BlockCase {
  PhysicsParams params;
  int n1 = 2, n2 = 2, m1 = 1, m2 = 1;
  int L = 1;
};

/// N <= 16, L <= 8, d_q <= 4.
inline BlockCase random_prop3_case(std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, "prop3-case"));
  BlockCase c;
  c.n1 = rng.next_u64() % 2 ? 4 : 2;
  c.n2 = rng.next_u64() % 2 ? 4 : 2;
  c.m1 = rng.next_u64() % 2 ? c.n1 : c.n1 / 2;
  c.m2 = rng.next_u64() % 2 ? c.n2 : c.n2 / 2;
  c.params = ident_params(rng);
  c.L = 1 + static_cast<int>(rng.next_u64() % 8);
  return c;
}

//! rank(X) == N for the stacked space-time design.
inline bool prop2_brute(const SpaceTimeCase& c) {
  const CMat F = build_F(std::span<const Point>(c.sensors), c.K);
  const CMat X = build_design_PI(F, build_propagator(c.params, c.K, c.L));
  return brute_rank(X) == c.K.size();
}

//! Every assembled P-II block has full column rank.
inline bool prop3_brute(const BlockCase& c) {
  const AliasPartition part(c.n1, c.n2, c.m1, c.m2);
  SpectralObservation obs;
  obs.beta = CMat::Zero(part.size(), c.L);
  const BlockSystem sys = assemble_PII(obs, part, c.params, c.L, 1.0);
  for (const auto& blk : sys.blocks) {
    if (brute_rank(blk.A) != static_cast<int>(blk.A.cols())) return false;
  }
  return true;
}

}  // namespace adinv::testing
