#include <gtest/gtest.h>

#include "adinv/aliasing.hpp"
#include "test_support.hpp"

using namespace adinv;
using namespace adinv::testing;

namespace {

double rel_err(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

AdmmConfig precise() {
  AdmmConfig c;
  c.eps_abs = 1e-10;
  c.eps_rel = 1e-8;
  c.hermitian_projection = false;
  return c;
}

AdmmConfig tight() {
  AdmmConfig c;
  c.eps_abs = 1e-10;
  c.eps_rel = 1e-9;
  c.max_outer = 20000;
  c.hermitian_projection = false;
  return c;
}

std::vector<int> stride(int count, int step) {
  std::vector<int> s;
  for (int i = 0; i < count; ++i) s.push_back(i * step);
  return s;
}

}  // namespace

TEST(DifferenceOperator, TwoByTwo) {
  const auto op = build_J(2, 2);
  EXPECT_EQ(op.rows(), 4);
  EXPECT_EQ(op.horizontal_rows(), 2);
  const Mat J(op.J);
  // canonical order (0,0),(0,1),(1,0),(1,1); horizontal rows first
  Mat expect(4, 4);
  expect << -1, 0, 1, 0,
             0, -1, 0, 1,
            -1, 1, 0, 0,
             0, 0, -1, 1;
  EXPECT_EQ(J, expect);
}

TEST(DifferenceOperator, Invariants) {
  const auto op = build_J(6, 4);
  const Mat J(op.J);
  EXPECT_EQ(op.rows(), 4 * 5 + 6 * 3);
  for (Eigen::Index r = 0; r < J.rows(); ++r) {
    EXPECT_EQ((J.row(r).array() == 1.0).count(), 1);
    EXPECT_EQ((J.row(r).array() == -1.0).count(), 1);
    EXPECT_EQ((J.row(r).array() != 0.0).count(), 2);
  }
  EXPECT_EQ((J * Vec::Ones(24)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(build_J(1, 4), DimensionError);
}

TEST(DifferenceOperator, IndicatorNormIsLatticeDegree) {
  const WavenumberSet K(6, 6);
  const auto op = build_J(6, 6);
  for (int j = 0; j < K.size(); ++j) {
    Vec e = Vec::Zero(K.size());
    e[j] = 1.0;
    const Wavenumber k = K[j];
    int degree = 0;
    degree += k.k1 > K.k1_min();
    degree += k.k1 < K.k1_max();
    degree += k.k2 > K.k2_min();
    degree += k.k2 < K.k2_max();
    EXPECT_EQ((op.J * e).squaredNorm(), degree);
  }
}

TEST(SoftThreshold, Exact) {
  EXPECT_EQ(soft_threshold(1.2, 0.5), 1.2 - 0.5);
  EXPECT_EQ(soft_threshold(-0.3, 0.5), 0.0);
  EXPECT_EQ(soft_threshold(-2.0, 0.5), -1.5);
  EXPECT_EQ(soft_threshold(0.5, 0.5), 0.0);
  Vec x(3);
  x << 1.2, -0.3, -2.0;
  const Vec y = soft_threshold(x, 0.5);
  EXPECT_EQ(y[0], 1.2 - 0.5);
  EXPECT_EQ(y[1], 0.0);
  EXPECT_EQ(y[2], -1.5);
  EXPECT_THROW(soft_threshold(x, -1.0), ParameterError);
}

TEST(DesignPI, SingleTimeIsF) {
  CounterRng rng(1);
  const WavenumberSet K(4, 4);
  const auto pts = random_points(10, rng);
  const CMat F = build_F(std::span<const Point>(pts), K);
  const auto prop = build_propagator(random_params(rng), K, 1);
  EXPECT_EQ(build_design_PI(F, prop), F);
}

TEST(DesignPI, BlockStructureAndGram) {
  CounterRng rng(2);
  const WavenumberSet K(6, 4);
  const auto pts = random_points(7, rng);
  const PhysicsParams p = random_params(rng);
  const CMat F = build_F(std::span<const Point>(pts), K);
  const auto prop = build_propagator(p, K, 5);
  const CMat X = build_design_PI(F, prop);
  EXPECT_EQ(X.rows(), 35);
  EXPECT_EQ(X.cols(), 24);
  for (int l = 0; l < 5; ++l)
    for (int m = 0; m < 7; ++m)
      for (int j = 0; j < 24; ++j)
        EXPECT_LT(std::abs(X(l * 7 + m, j) - F(m, j) * std::exp(gamma(p, K[j]) * double(l))), 1e-13);
  const CMat gram = space_time_gram(F, prop, 0.25);
  EXPECT_LT((gram - 0.25 * X.adjoint() * X).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Instance, EmbeddingRoundTrip) {
  const auto rp = random_space_time(3);
  const auto inst = instance_of(rp, {0.1, 0.2});
  EXPECT_EQ(inst.xcal().rows(), 2 * rp.L * static_cast<int>(rp.sensors.size()));
  EXPECT_EQ(inst.xcal().cols(), 2 * rp.K.size());
  const Vec x = inst.to_embedded(rp.truth.coeffs);
  EXPECT_EQ(inst.to_full(x), rp.truth.coeffs);
  // embedded product equals the complex product
  const Vec lhs = inst.xcal() * x;
  const Vec rhs = embed(CVec(inst.apply(rp.truth.coeffs)));
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Objective, SpecExamples) {
  const auto rp = random_space_time(4);
  auto inst = instance_of(rp, {0.7, 0.3});
  const Vec zero = Vec::Zero(inst.embedded_dim());
  const Vec y = inst.ycal();
  EXPECT_NEAR(objective_value(inst, zero), 0.5 * (inst.sigma_inv().array() * y.array().square()).sum(),
              1e-9);

  // exact fit on noiseless data, no regularization
  RandomProblem clean = rp;
  clean.truth = strip_nyquist(rp.truth);
  clean.obs =
      synthesize_observations(clean.truth, rp.params, IrregularLayout{rp.sensors}, rp.L, 0.0, 1);
  const auto exact = instance_of(clean, {0.0, 0.0});
  EXPECT_LT(objective_value(exact, exact.to_embedded(clean.truth.coeffs)), 1e-18);

  const Vec x = inst.to_embedded(rp.truth.coeffs);
  const double base = objective_value(inst, x);
  inst.reg.lambda1 *= 2.0;
  EXPECT_NEAR(objective_value(inst, x) - base, 0.7 * x.lpNorm<1>(), 1e-9 * base);
}

TEST(Admm, ZeroDataGivesZero) {
  auto rp = random_space_time(5);
  rp.obs.Y.setZero();
  const auto inst = instance_of(rp, {1.0, 0.5});
  const auto res = admm_solve(inst, AdmmConfig{});
  EXPECT_TRUE(res.diagnostics.converged);
  EXPECT_EQ(res.solution.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Admm, UnregularizedMatchesDenseGls) {
  for (std::uint64_t seed = 10; seed < 16; ++seed) {
    const auto rp = random_space_time(seed);
    const auto inst = instance_of(rp, {0.0, 0.0});
    const auto res = admm_solve(inst, precise());
    ASSERT_TRUE(res.diagnostics.converged) << "seed " << seed;
    const Vec ref = dense_gls(inst.xcal(), inst.sigma_inv(), inst.ycal(), 0.0, dense_J(inst));
    EXPECT_LT(rel_err(res.solution, ref), 1e-6) << "seed " << seed;
  }
}

TEST(Admm, SmoothnessOnlySatisfiesNormalEquations) {
  for (std::uint64_t seed = 20; seed < 24; ++seed) {
    const auto rp = random_space_time(seed);
    const auto inst = instance_of(rp, {0.0, 3.0});
    const auto res = admm_solve(inst, precise());
    ASSERT_TRUE(res.diagnostics.converged);
    const Mat X = inst.xcal();
    const Mat J = dense_J(inst);
    const Vec W = inst.sigma_inv();
    const Vec rhs = X.transpose() * (W.array() * inst.ycal().array()).matrix();
    const Vec lhs = X.transpose() * (W.asDiagonal() * (X * res.solution)) +
                    2.0 * 3.0 * J.transpose() * (J * res.solution);
    EXPECT_LT((lhs - rhs).norm(), 1e-6 * rhs.norm()) << "seed " << seed;
    const Vec ref = dense_gls(X, W, inst.ycal(), 3.0, J);
    EXPECT_LT(rel_err(res.solution, ref), 1e-6);
  }
}

TEST(Admm, SubgradientOptimality) {
  for (std::uint64_t seed = 30; seed < 34; ++seed) {
    const auto rp = random_space_time(seed);
    auto inst = instance_of(rp, {0.0, 0.5});
    inst.reg.lambda1 = 0.2 * lambda1_max(inst);
    const auto res = admm_solve(inst, tight());
    ASSERT_TRUE(res.diagnostics.converged);
    EXPECT_LT(subgradient_violation(inst, res.solution), 1e-4) << "seed " << seed;
    EXPECT_GT((res.solution.array() == 0.0).count(), 0);
  }
}

TEST(Admm, ConvergedResidualsAndHistory) {
  const auto rp = random_space_time(40);
  const auto inst = instance_of(rp, {5.0, 1.0});
  AdmmConfig cfg;
  const auto res = admm_solve(inst, cfg);
  ASSERT_TRUE(res.diagnostics.converged);
  const auto& h = res.diagnostics.history;
  ASSERT_EQ(static_cast<int>(h.size()), res.diagnostics.iterations);
  const double dim = std::sqrt(static_cast<double>(inst.embedded_dim()));
  const auto& st = res.state;
  EXPECT_LE((st.eta - st.psi).norm(),
            cfg.eps_abs * dim + cfg.eps_rel * std::max(st.eta.norm(), st.psi.norm()));
  // objective settles: after the first tenth of the run it never rises by
  // more than a relative 1e-6
  const std::size_t burn = h.size() / 10 + 1;
  for (std::size_t i = burn + 1; i < h.size(); ++i) {
    EXPECT_LE(h[i].objective, h[i - 1].objective * (1.0 + 1e-6) + 1e-9) << "iteration " << i;
  }
}

TEST(Admm, NonConvergenceIsFlagged) {
  const auto rp = random_space_time(41);
  const auto inst = instance_of(rp, {5.0, 1.0});
  AdmmConfig cfg;
  cfg.max_outer = 2;
  const auto res = admm_solve(inst, cfg);
  EXPECT_FALSE(res.diagnostics.converged);
  EXPECT_EQ(res.diagnostics.iterations, 2);
}

TEST(Admm, ConfigValidation) {
  AdmmConfig cfg;
  cfg.rho = 0.0;
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg = AdmmConfig{};
  cfg.eps_abs = 0.0;
  EXPECT_THROW(cfg.validate(), ParameterError);
  EXPECT_THROW((RegularizationParams{-1.0, 0.0}.validate()), ParameterError);
}

TEST(Admm, FullGridRecoversProjectedTruth) {
  const WavenumberSet K(8, 8);
  CounterRng rng(50);
  const SpectralField truth = random_field(K, rng);
  const NonUniformGridLayout layout{8, 8, stride(8, 1), stride(8, 1)};
  PhysicsParams p = random_params(rng);
  const auto obs = synthesize_observations(truth, p, layout, 1, 0.0, 1);
  const CMat F = build_F(layout, K);
  const auto inst = make_space_time_instance(F, p, K, obs.Y, 1, 0.0, {0.0, 0.0});
  const auto res = admm_solve(inst, AdmmConfig{});
  ASSERT_TRUE(res.diagnostics.converged);
  EXPECT_LT((res.eta_hat.coeffs - truth.coeffs).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Admm, BlockPathMatchesDensePath) {
  const WavenumberSet K(20, 20);
  CounterRng rng(60);
  const SpectralField truth = random_field(K, rng);
  const NonUniformGridLayout layout{40, 40, stride(10, 4), stride(10, 4)};
  PhysicsParams p;
  p.v = {0.005, 0.005};
  p.D = Eigen::Matrix2d::Identity() * 2.5e-4;
  const auto obs = synthesize_observations(truth, p, layout, 6, 0.5, 3);
  const auto part = partition_for(layout, 20, 20);
  const auto sys = assemble_PII(spectral_observation(obs, part), part, p, 6, 0.5);
  const auto blocks = make_block_instance(sys, {0.5, 0.2});
  const auto dense = densified(blocks);
  const AdmmConfig cfg = tight();
  const auto a = admm_solve(blocks, cfg);
  const auto b = admm_solve(dense, cfg);
  EXPECT_EQ(a.diagnostics.iterations, b.diagnostics.iterations);
  EXPECT_LT((a.solution - b.solution).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Admm, TruncationKeepsRetainedSolution) {
  // Truth confined to the retained classes; full and truncated solves agree
  // on the retained entries when no coupling penalty is used.
  const WavenumberSet K(8, 8);
  const auto part = alias_partition(8, 8, 4, 4);
  CounterRng rng(70);
  CVec c = CVec::Zero(K.size());
  for (int b = 0; b < part.size(); ++b) {
    const Wavenumber q = part.q(b);
    if (std::max(std::abs(q.k1), std::abs(q.k2)) > 1) continue;
    for (const auto& k : part.block(b)) c[K.index(k)] = {rng.normal(), rng.normal()};
  }
  const SpectralField truth(K, c);
  PhysicsParams p = random_params(rng);
  const NonUniformGridLayout layout{4, 4, stride(4, 1), stride(4, 1)};
  const auto obs = synthesize_observations(truth, p, layout, 6, 0.0, 1);
  SpectralObservation so;
  so.beta.resize(part.size(), 6);
  const CMat model = model_observations(truth, p, layout, 6);
  const auto pts = sensor_positions(layout);
  for (int l = 0; l < 6; ++l) so.beta.col(l) = nudft2(CVec(model.col(l)), pts, part);
  const auto sys = assemble_PII(so, part, p, 6, 0.0);
  const auto full = admm_solve(make_block_instance(sys, {0.01, 0.0}), tight());
  const auto cut = admm_solve(make_block_instance(block_truncate(sys, 1), {0.01, 0.0}), tight());
  const auto trunc = block_truncate(sys, 1);
  for (const auto& blk : trunc.blocks) {
    for (int j : blk.columns) {
      EXPECT_LT(std::abs(full.eta_hat.coeffs[j] - cut.eta_hat.coeffs[j]), 1e-6);
    }
  }
  for (int j : trunc.pinned) EXPECT_EQ(cut.eta_hat.coeffs[j], cplx(0.0, 0.0));
}

TEST(Nonneg, MatchesUnconstrainedWhenFeasible) {
  // A positive field observed without noise: the unconstrained solution
  // already predicts non-negative data.
  const WavenumberSet K(4, 4);
  CVec c = CVec::Zero(K.size());
  c[K.index({0, 0})] = 5.0;
  c[K.index({1, 0})] = 0.5;
  c[K.index({-1, 0})] = 0.5;
  const SpectralField truth(K, c);
  CounterRng rng(80);
  const auto pts = random_points(12, rng);
  PhysicsParams p = random_params(rng);
  const auto obs = synthesize_observations(truth, p, IrregularLayout{pts}, 4, 0.0, 1);
  const CMat F = build_F(std::span<const Point>(pts), K);
  const auto inst = make_space_time_instance(F, p, K, obs.Y, 4, 0.0, {0.01, 0.1});
  const auto free = admm_solve(inst, tight());
  ASSERT_GE((real_part_design(inst) * free.solution).minCoeff(), 0.0);
  AdmmConfig cfg = tight();
  cfg.nonneg = true;
  const auto con = solve(inst, cfg);
  EXPECT_TRUE(con.diagnostics.converged);
  EXPECT_LT((con.solution - free.solution).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Nonneg, ActiveConstraintMatchesQpOracle) {
  const auto rp = random_space_time(90);
  auto inst = instance_of(rp, {0.0, 1.0});
  // shift the data down so that the constraint binds
  inst.y.array() -= 0.3 * inst.y.real().cwiseAbs().maxCoeff();
  AdmmConfig cfg = tight();
  const auto res = admm_solve_nonneg(inst, cfg);
  ASSERT_TRUE(res.diagnostics.converged);
  const Mat X = inst.xcal();
  const Vec W = inst.sigma_inv();
  const Mat J = dense_J(inst);
  const Mat H = X.transpose() * W.asDiagonal() * X + 2.0 * J.transpose() * J;
  const Vec b = X.transpose() * (W.array() * inst.ycal().array()).matrix();
  const Vec ref = nonneg_qp_oracle(H, b, real_part_design(inst));
  const Mat R = real_part_design(inst);
  EXPECT_LT((R * ref).minCoeff(), 1e-6);
  EXPECT_LT(rel_err(res.solution, ref), 1e-4);
  const double scale = inst.y.real().cwiseAbs().maxCoeff();
  EXPECT_GE((R * res.solution).minCoeff(), -1e-6 * scale);
}

TEST(Nonneg, AllNegativeDataGivesZero) {
  auto rp = random_space_time(91);
  rp.obs.Y = -rp.obs.Y.cwiseAbs() - Mat::Ones(rp.obs.Y.rows(), rp.obs.Y.cols());
  const auto inst = instance_of(rp, {1.0, 0.1});
  AdmmConfig cfg = tight();
  cfg.nonneg = true;
  const auto res = solve(inst, cfg);
  const Mat R = real_part_design(inst);
  const double scale = rp.obs.Y.cwiseAbs().maxCoeff();
  EXPECT_GE((R * res.solution).minCoeff(), -1e-6 * scale);
  EXPECT_LT((R * res.solution).cwiseAbs().maxCoeff(), 1e-4 * scale);
}
