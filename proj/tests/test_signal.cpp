#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hetnet/errors.hpp"
#include "hetnet/signal.hpp"
#include "hetnet/swmmse.hpp"
#include "oracles.hpp"

using namespace hetnet;
using hetnet::testing::covariance_bruteforce;
using hetnet::testing::random_beamformers;
using hetnet::testing::random_channels;

namespace {

// K = Q = I = M = N = 1 with H = 1.
ChannelSet scalar_net() {
  ChannelSet ch(NetworkDims{1, 1, 1, 1, 1});
  ch.toward(0, 0)(0, 0) = 1.0;
  return ch;
}

BeamformerSet scalar_v(std::complex<double> value) {
  BeamformerSet v(NetworkDims{1, 1, 1, 1, 1});
  v.user(0)(0) = value;
  return v;
}

}  // namespace

TEST(Covariance, ZeroBeamformersGiveNoiseOnly) {
  std::mt19937_64 rng(1);
  const NetworkDims d{2, 2, 2, 2, 3};
  const ChannelSet ch = random_channels(rng, d);
  const BeamformerSet v(d);
  const Eigen::MatrixXcd c = received_covariance(ch, v, 1.5, 3);
  EXPECT_TRUE(c.isApprox(1.5 * Eigen::MatrixXcd::Identity(3, 3)));
}

TEST(Covariance, ScalarNet) {
  EXPECT_NEAR(received_covariance(scalar_net(), scalar_v(2.0), 1.0, 0)(0, 0).real(), 5.0, 1e-15);
}

TEST(Covariance, MatchesTermByTermSum) {
  std::mt19937_64 rng(2);
  const NetworkDims d{3, 2, 2, 2, 2};
  const ChannelSet ch = random_channels(rng, d);
  const BeamformerSet v = random_beamformers(rng, d, 1.0);
  for (int u = 0; u < d.num_users(); ++u) {
    const Eigen::MatrixXcd a = received_covariance(ch, v, 0.7, u);
    const Eigen::MatrixXcd b = covariance_bruteforce(ch, v, 0.7, u);
    EXPECT_LT((a - b).norm(), 1e-12 * b.norm());
  }
}

TEST(Receiver, ZeroAndScalar) {
  Eigen::MatrixXcd c(1, 1);
  c(0, 0) = 5.0;
  Eigen::MatrixXcd h(1, 1);
  h(0, 0) = 1.0;
  Eigen::VectorXcd v(1);
  v(0) = 2.0;
  EXPECT_NEAR(mmse_receiver(c, h, v)(0).real(), 0.4, 1e-15);
  EXPECT_EQ(mmse_receiver(c, h, Eigen::VectorXcd::Zero(1)).norm(), 0.0);
}

TEST(Receiver, SingularCovarianceIsNumericalError) {
  const Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(2, 2);
  const Eigen::MatrixXcd h = Eigen::MatrixXcd::Identity(2, 2);
  EXPECT_THROW(mmse_receiver(c, h, Eigen::VectorXcd::Ones(2)), NumericalError);
}

TEST(Mse, ScalarExamples) {
  const ChannelSet ch = scalar_net();
  Eigen::VectorXcd u(1);
  u(0) = 0.0;
  EXPECT_DOUBLE_EQ(mse(ch, scalar_v(2.0), u, 1.0, 0), 1.0);
  u(0) = 1.0;
  EXPECT_NEAR(mse(ch, scalar_v(1.0), u, 1.0, 0), 1.0, 1e-15);
  u(0) = 0.4;
  EXPECT_NEAR(mse(ch, scalar_v(2.0), u, 1.0, 0), 0.2, 1e-15);
  EXPECT_NEAR(mmse_value(ch, scalar_v(2.0), 1.0, 0), 0.2, 1e-15);
  EXPECT_DOUBLE_EQ(mmse_value(ch, scalar_v(0.0), 1.0, 0), 1.0);
}

TEST(Mse, MmseReceiverAttainsMmseValue) {
  std::mt19937_64 rng(3);
  const NetworkDims d{2, 3, 2, 2, 2};
  const ChannelSet ch = random_channels(rng, d);
  const BeamformerSet v = random_beamformers(rng, d, 2.0);
  const ReceiverSet u = update_receivers(ch, v, 1.0);
  for (int k = 0; k < d.num_users(); ++k) {
    const double e = mse(ch, v, u[static_cast<std::size_t>(k)], 1.0, k);
    EXPECT_NEAR(e, mmse_value(ch, v, 1.0, k), 1e-12);
    // Any perturbation of the receiver can only raise the MSE.
    Eigen::VectorXcd other = u[static_cast<std::size_t>(k)];
    other(0) += std::complex<double>(0.01, -0.02);
    EXPECT_GT(mse(ch, v, other, 1.0, k), e);
  }
}

TEST(Rate, ScalarAndZero) {
  EXPECT_NEAR(user_rate(scalar_net(), scalar_v(2.0), 1.0, 0), std::log(5.0), 1e-14);
  EXPECT_EQ(user_rate(scalar_net(), scalar_v(0.0), 1.0, 0), 0.0);
}

TEST(Rate, EqualsMinusLogMmse) {
  std::mt19937_64 rng(4);
  const NetworkDims d{2, 2, 3, 2, 2};
  const ChannelSet ch = random_channels(rng, d);
  const BeamformerSet v = random_beamformers(rng, d, 1.0);
  for (int k = 0; k < d.num_users(); ++k) {
    EXPECT_NEAR(user_rate(ch, v, 1.0, k), -std::log(mmse_value(ch, v, 1.0, k)), 1e-10);
    const LinkStats s = link_stats(ch, v, 1.0, k);
    EXPECT_NEAR(s.rate, user_rate(ch, v, 1.0, k), 1e-12);
    EXPECT_NEAR(s.mse, mmse_value(ch, v, 1.0, k), 1e-12);
  }
}

TEST(Objective, P1Examples) {
  const ChannelSet ch = scalar_net();
  EXPECT_EQ(objective_p1(ch, scalar_v(0.0), UtilityModel::sum_rate(), {3.0}, 1.0).value, 0.0);
  EXPECT_NEAR(objective_p1(ch, scalar_v(2.0), UtilityModel::sum_rate(), {0.0}, 1.0).value,
              std::log(5.0), 1e-14);
  const P1Value p = objective_p1(ch, scalar_v(2.0), UtilityModel::sum_rate(), {1.0}, 1.0);
  EXPECT_NEAR(p.value, std::log(5.0) - 2.0, 1e-14);
  EXPECT_NEAR(p.penalty, 2.0, 1e-15);
}

TEST(Objective, ProportionalFairFloorsZeroRate) {
  const P1Value p = objective_p1(scalar_net(), scalar_v(0.0),
                                 UtilityModel::proportional_fair(1e-12), {0.0}, 1.0);
  EXPECT_TRUE(p.rate_floored);
  EXPECT_NEAR(p.utility, std::log(1e-12), 1e-9);
}

TEST(Objective, P2Examples) {
  const ChannelSet ch = scalar_net();
  Eigen::VectorXcd u(1);
  u(0) = 0.0;
  EXPECT_DOUBLE_EQ(objective_p2_sumrate(ch, scalar_v(2.0), {u}, {1.0}, {0.0}, 1.0), 1.0);
  u(0) = 0.4;
  const double p2 = objective_p2_sumrate(ch, scalar_v(2.0), {u}, {5.0}, {0.0}, 1.0);
  EXPECT_NEAR(p2, 1.0 - std::log(5.0), 1e-14);
  const double p1 = objective_p1(ch, scalar_v(2.0), UtilityModel::sum_rate(), {0.0}, 1.0).value;
  EXPECT_NEAR(p2 + p1, 1.0, 1e-14);
  EXPECT_THROW(objective_p2_sumrate(ch, scalar_v(2.0), {u}, {0.0}, {0.0}, 1.0),
               std::invalid_argument);
}

TEST(Beamformers, PowerAndFeasibility) {
  const NetworkDims d{1, 2, 2, 2, 1};
  BeamformerSet v(d);
  v.block(0, 0) << 1.0, 0.0;
  v.block(1, 0) << 0.0, std::complex<double>(0.0, 1.0);
  v.block(1, 1) << 0.5, 0.5;
  EXPECT_DOUBLE_EQ(v.bs_power(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(v.bs_power(0, 1), 0.5);
  EXPECT_TRUE(v.feasible(2.0));
  EXPECT_FALSE(v.feasible(1.99));
  EXPECT_TRUE(v.all_finite());
  EXPECT_DOUBLE_EQ(group_penalty(v, {2.0}), 2.0 * (1.0 + 1.0 + std::sqrt(0.5)));
}

TEST(Utility, Derivatives) {
  const auto wsr = UtilityModel::weighted_sum_rate({3.0, 0.5});
  EXPECT_DOUBLE_EQ(wsr.derivative(0, 7.0), 3.0);
  EXPECT_DOUBLE_EQ(wsr.value(1, 4.0), 2.0);
  const auto pf = UtilityModel::proportional_fair();
  EXPECT_DOUBLE_EQ(pf.derivative(0, 2.0), 0.5);
  bool floored = false;
  pf.derivative(0, 0.0, &floored);
  EXPECT_TRUE(floored);
}
