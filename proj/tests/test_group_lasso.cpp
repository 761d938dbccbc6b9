#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hetnet/group_lasso.hpp"
#include "oracles.hpp"

using namespace hetnet;
using hetnet::testing::fista_reference;
using hetnet::testing::random_cvec;
using hetnet::testing::random_psd;

namespace {

QcGroupLassoInstance scalar_instance(double J, std::complex<double> d, double lambda,
                                     double power) {
  QcGroupLassoInstance inst;
  inst.J = Eigen::MatrixXcd::Constant(1, 1, J);
  inst.d = {Eigen::VectorXcd::Constant(1, d)};
  inst.lambda = lambda;
  inst.power = {power};
  return inst;
}

QcGroupLassoInstance random_instance(std::mt19937_64& rng, int Q, int I, int M,
                                     double lambda, double power) {
  QcGroupLassoInstance inst;
  inst.num_bs = Q;
  inst.num_users = I;
  inst.antennas = M;
  inst.J = random_psd(rng, M * Q, M * Q);
  for (int i = 0; i < I; ++i) inst.d.push_back(random_cvec(rng, M * Q));
  inst.lambda = lambda;
  inst.power.assign(static_cast<std::size_t>(Q), power);
  return inst;
}

CellBeamformers zeros(const QcGroupLassoInstance& inst) {
  return CellBeamformers(static_cast<std::size_t>(inst.num_users),
                         Eigen::VectorXcd::Zero(inst.antennas * inst.num_bs));
}

const BisectionTolerances kTight{1e-13, 1e-13, 400};

}  // namespace

TEST(BuildInstance, ScalarNet) {
  ChannelSet ch(NetworkDims{1, 1, 1, 1, 1});
  ch.toward(0, 0)(0, 0) = 1.0;
  ReceiverSet u{Eigen::VectorXcd::Constant(1, 0.4)};
  const auto inst = build_instance(ch, u, {5.0}, 0, 0.0, 1.0);
  EXPECT_NEAR(inst.J(0, 0).real(), 0.8, 1e-15);
  EXPECT_NEAR(inst.d[0](0).real(), 2.0, 1e-15);

  u[0].setZero();
  const auto zero = build_instance(ch, u, {5.0}, 0, 0.0, 1.0);
  EXPECT_EQ(zero.J.norm(), 0.0);
  EXPECT_EQ(zero.d[0].norm(), 0.0);
  EXPECT_THROW(build_instance(ch, u, {0.0}, 0, 0.0, 1.0), std::invalid_argument);
}

TEST(BuildInstance, JIsHermitianPsdAndSumsOverAllUsers) {
  std::mt19937_64 rng(11);
  const NetworkDims d{2, 3, 2, 2, 2};
  const ChannelSet ch = hetnet::testing::random_channels(rng, d);
  ReceiverSet u;
  WeightSet w;
  for (int k = 0; k < d.num_users(); ++k) {
    u.push_back(random_cvec(rng, d.N));
    w.push_back(0.5 + k);
  }
  const auto inst = build_instance(ch, u, w, 1, 0.3, 2.0);
  EXPECT_LT((inst.J - inst.J.adjoint()).norm(), 1e-12);
  Eigen::MatrixXcd expect = Eigen::MatrixXcd::Zero(6, 6);
  for (int k = 0; k < d.num_users(); ++k) {
    const Eigen::VectorXcd g = ch.toward(k, 1).adjoint() * u[static_cast<std::size_t>(k)];
    expect += w[static_cast<std::size_t>(k)] * g * g.adjoint();
  }
  EXPECT_LT((inst.J - expect).norm(), 1e-12 * expect.norm());
  for (int i = 0; i < d.I; ++i) {
    const int k = d.user_index(1, i);
    const Eigen::VectorXcd dk =
        w[static_cast<std::size_t>(k)] * ch.toward(k, 1).adjoint() * u[static_cast<std::size_t>(k)];
    EXPECT_LT((inst.d[static_cast<std::size_t>(i)] - dk).norm(), 1e-12);
  }
}

TEST(Residual, EmptySumAndZeroBlocks) {
  const auto inst = scalar_instance(0.8, 2.0, 2.0, 1.0);
  CellBeamformers v{Eigen::VectorXcd::Constant(1, 7.0)};
  EXPECT_EQ(residual_c(inst, v, 0, 0), inst.d[0]);

  std::mt19937_64 rng(5);
  const auto big = random_instance(rng, 3, 2, 2, 0.1, 1.0);
  const CellBeamformers z = zeros(big);
  EXPECT_EQ(residual_c(big, z, 1, 1), big.d_block(1, 1));
}

TEST(Shrink, BoundaryIsInclusive) {
  EXPECT_TRUE(shrink_test(Eigen::VectorXcd::Constant(1, 0.9), 2.0));
  EXPECT_TRUE(shrink_test(Eigen::VectorXcd::Constant(1, 1.0), 2.0));
  EXPECT_FALSE(shrink_test(Eigen::VectorXcd::Constant(1, 1.1), 2.0));
}

TEST(SolveDelta, ScalarRoots) {
  const Eigen::MatrixXcd one = Eigen::MatrixXcd::Constant(1, 1, 1.0);
  const Eigen::MatrixXcd pt8 = Eigen::MatrixXcd::Constant(1, 1, 0.8);
  const Eigen::VectorXcd c = Eigen::VectorXcd::Constant(1, 2.0);
  EXPECT_NEAR(solve_delta(one, c, 2.0, 0.0, 1e-13), 1.0, 1e-10);
  const double delta = solve_delta(pt8, c, 2.0, 0.0, 1e-13);
  EXPECT_NEAR(delta, 0.8, 1e-10);
  EXPECT_NEAR(2.0 / (0.8 + delta), 1.25, 1e-10);
}

TEST(SolveDelta, RejectsShrunkResidual) {
  const Eigen::MatrixXcd j = Eigen::MatrixXcd::Identity(1, 1);
  EXPECT_THROW(solve_delta(j, Eigen::VectorXcd::Constant(1, 1.0), 2.0, 0.0, 1e-8),
               std::invalid_argument);
  EXPECT_THROW(solve_delta(j, Eigen::VectorXcd::Constant(1, 1.0), 0.0, 0.0, 1e-8),
               std::invalid_argument);
}

TEST(BlockUpdate, UnconstrainedBranch) {
  const auto inst = scalar_instance(0.8, 2.0, 2.0, 1.5625);
  CellBeamformers v = zeros(inst);
  const BlockSolveState s = block_update(inst, v, 0, kTight);
  EXPECT_NEAR(v[0](0).real(), 1.25, 1e-9);
  EXPECT_NEAR(v[0](0).imag(), 0.0, 1e-12);
  EXPECT_EQ(s.mu, 0.0);
}

TEST(BlockUpdate, PowerLimitedBranch) {
  const auto inst = scalar_instance(0.8, 2.0, 2.0, 1.0);
  CellBeamformers v = zeros(inst);
  const BlockSolveState s = block_update(inst, v, 0, kTight);
  EXPECT_NEAR(v[0](0).real(), 1.0, 1e-9);
  EXPECT_NEAR(s.mu, 0.2, 1e-9);
  EXPECT_NEAR(s.delta[0], 1.0, 1e-9);
  EXPECT_LE(std::norm(v[0](0)), 1.0 + 1e-12);
}

TEST(BlockUpdate, LargeLambdaKeepsZero) {
  std::mt19937_64 rng(7);
  auto inst = random_instance(rng, 3, 3, 2, 0.0, 1.0);
  double maxd = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int q = 0; q < 3; ++q) maxd = std::max(maxd, inst.d_block(i, q).norm());
  }
  inst.lambda = 2.0 * maxd * 1.0001;
  const P3Result r = solve_p3(inst, zeros(inst));
  EXPECT_EQ(r.passes, 1);
  for (const auto& vi : r.v) EXPECT_EQ(vi.norm(), 0.0);
}

TEST(BlockUpdate, MaskedBlocksStayZero) {
  std::mt19937_64 rng(8);
  auto inst = random_instance(rng, 2, 2, 2, 0.05, 1.0);
  inst.allowed = {{true, false}, {false, true}};
  const P3Result r = solve_p3(inst, zeros(inst));
  EXPECT_EQ(r.v[0].segment(2, 2).norm(), 0.0);
  EXPECT_EQ(r.v[1].segment(0, 2).norm(), 0.0);
  EXPECT_GT(r.v[0].segment(0, 2).norm(), 0.0);
}

TEST(ScalarClosedForm, ThreeBranches) {
  EXPECT_EQ(scalar_block_update(0.8, 0.5, 2.0, 1.0), std::complex<double>(0.0));
  EXPECT_NEAR(std::abs(scalar_block_update(0.8, 2.0, 2.0, 4.0) - 1.25), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(scalar_block_update(0.8, 2.0, 2.0, 0.25) - 0.5), 0.0, 1e-15);
  // Zero curvature saturates the budget along c.
  const auto z = scalar_block_update(0.0, std::complex<double>(0.0, 3.0), 2.0, 4.0);
  EXPECT_NEAR(std::abs(z - std::complex<double>(0.0, 2.0)), 0.0, 1e-15);
}

TEST(ScalarClosedForm, AgreesWithGeneralPath) {
  const auto inst = scalar_instance(0.8, 2.0, 2.0, 0.25);
  CellBeamformers v = zeros(inst);
  block_update(inst, v, 0, kTight);
  EXPECT_NEAR(std::abs(v[0](0) - scalar_block_update(0.8, 2.0, 2.0, 0.25)), 0.0, 1e-9);
}

TEST(SolveP3, SingleBsIsOnePass) {
  std::mt19937_64 rng(9);
  const auto inst = random_instance(rng, 1, 3, 3, 0.2, 0.5);
  CellBeamformers v = zeros(inst);
  block_update(inst, v, 0);
  CellBeamformers again = v;
  block_update(inst, again, 0);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_LT((again[i] - v[i]).norm(), 1e-10);
}

TEST(SolveP3, MatchesProximalGradientReference) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = random_instance(rng, 3, 2, 2, 0.5, 0.5);
    P3Options opt;
    opt.inner_tol = 1e-11;
    opt.max_passes = 5000;
    opt.bisection = kTight;
    const P3Result r = solve_p3(inst, zeros(inst), opt);
    const auto ref = fista_reference(inst, zeros(inst), -1, 20000);
    const double a = p3_objective(inst, r.v);
    const double b = p3_objective(inst, ref);
    EXPECT_LE(a, b + 1e-6 * std::max(1.0, std::abs(b))) << "trial " << trial;
    for (int q = 0; q < inst.num_bs; ++q) {
      double p = 0.0;
      for (const auto& vi : r.v) p += vi.segment(q * 2, 2).squaredNorm();
      EXPECT_LE(p, inst.power[static_cast<std::size_t>(q)] * (1.0 + 1e-9));
    }
  }
}

TEST(Bounds, Formulas) {
  EXPECT_DOUBLE_EQ(delta_upper_bound(3.0, 2.0, 2.0, 1.0), 8.0);
  EXPECT_DOUBLE_EQ(mu_upper_bound(4.0, 4, 1.5), 3.0);
}

TEST(Spectrum, ShiftedSolveMatchesDense) {
  std::mt19937_64 rng(12);
  const Eigen::MatrixXcd J = random_psd(rng, 4, 2);
  const Eigen::VectorXcd c = random_cvec(rng, 4);
  const HermitianSpectrum s(J);
  const Eigen::VectorXcd c_hat = s.rotate(c);
  for (double eta : {0.1, 1.0, 10.0}) {
    const Eigen::VectorXcd dense =
        (J + eta * Eigen::MatrixXcd::Identity(4, 4)).partialPivLu().solve(c);
    EXPECT_LT((s.shifted_solve(c_hat, eta) - dense).norm(), 1e-10 * dense.norm());
    EXPECT_NEAR(s.shifted_solve_norm(c_hat, eta), dense.norm(), 1e-10 * dense.norm());
  }
  EXPECT_TRUE(std::isinf(s.shifted_solve_norm(c_hat, 0.0)));
}
