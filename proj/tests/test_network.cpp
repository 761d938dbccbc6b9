#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "hetnet/network.hpp"
#include "hetnet/rng.hpp"

using namespace hetnet;

namespace {

NetworkConfig small_config(int K, int Q, int I, std::uint64_t seed) {
  NetworkConfig c;
  c.dims = {K, Q, I, 2, 2};
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Topology, SingleCellStaysInsideItsDisk) {
  const Topology t = generate_topology(small_config(1, 6, 8, 3));
  ASSERT_EQ(t.cell_centers.size(), 1u);
  EXPECT_EQ(t.cell_centers[0].norm(), 0.0);
  for (const auto& p : t.bs_positions) EXPECT_LE(p.norm(), 1000.0);
  for (const auto& p : t.user_positions) EXPECT_LE(p.norm(), 1000.0);
}

TEST(Topology, TwoCellsAreOneSpacingApart) {
  const Topology t = generate_topology(small_config(2, 2, 2, 1));
  EXPECT_EQ((t.cell_centers[0] - t.cell_centers[1]).norm(), 2000.0);
}

TEST(Topology, CentersFormHexRings) {
  const Topology t = generate_topology(small_config(7, 1, 1, 1));
  for (int k = 1; k < 7; ++k) EXPECT_NEAR(t.cell_centers[static_cast<std::size_t>(k)].norm(), 2000.0, 1e-9);
  for (int a = 0; a < 7; ++a) {
    for (int b = a + 1; b < 7; ++b) {
      EXPECT_GE((t.cell_centers[static_cast<std::size_t>(a)] - t.cell_centers[static_cast<std::size_t>(b)]).norm(),
                2000.0 - 1e-9);
    }
  }
}

TEST(Topology, Deterministic) {
  const auto c = small_config(3, 4, 5, 42);
  const Topology a = generate_topology(c);
  const Topology b = generate_topology(c);
  ASSERT_EQ(a.user_positions.size(), b.user_positions.size());
  for (std::size_t i = 0; i < a.user_positions.size(); ++i) {
    EXPECT_EQ(a.user_positions[i], b.user_positions[i]);
  }
  for (std::size_t i = 0; i < a.bs_positions.size(); ++i) EXPECT_EQ(a.bs_positions[i], b.bs_positions[i]);
}

TEST(Channels, PathlossFormula) {
  EXPECT_DOUBLE_EQ(pathloss_variance(200.0, 35.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(pathloss_variance(400.0, 35.0, 1.0), 0.125);
  EXPECT_DOUBLE_EQ(pathloss_variance(10.0, 35.0, 1.0), pathloss_variance(35.0, 35.0, 1.0));
  EXPECT_DOUBLE_EQ(pathloss_variance(200.0, 35.0, 2.5), 2.5);
}

TEST(Channels, SampleVarianceMatchesModel) {
  // One link of 100 x 1000 entries at 200 m without shadowing.
  NetworkConfig c;
  c.dims = {1, 1, 1, 100, 1000};
  c.shadowing_sigma_db = 0.0;
  c.seed = 9;
  Topology t;
  t.cell_centers = {Eigen::Vector2d(0, 0)};
  t.bs_positions = {Eigen::Vector2d(0, 0)};
  t.user_positions = {Eigen::Vector2d(200, 0)};
  const ChannelSet ch = generate_channels(t, c);
  const auto& h = ch.toward(0, 0);
  const double n = static_cast<double>(h.size());
  double mean = 0.0;
  double sq = 0.0;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    const double a = std::norm(h.data()[i]);
    mean += a;
    sq += a * a;
  }
  mean /= n;
  const double var = sq / n - mean * mean;
  const double se = std::sqrt(var / n);
  EXPECT_NEAR(mean, 2.0, 3.0 * se);
}

TEST(Channels, DeterministicAndHashed) {
  const auto c = small_config(2, 3, 2, 5);
  const Topology t = generate_topology(c);
  const ChannelSet a = generate_channels(t, c);
  const ChannelSet b = generate_channels(t, c);
  EXPECT_TRUE(a.all_finite());
  EXPECT_EQ(a.hash(), b.hash());
  auto c2 = c;
  c2.seed = 6;
  EXPECT_NE(a.hash(), generate_channels(generate_topology(c2), c2).hash());
}

TEST(Channels, LinkIsColumnBlockOfCellMatrix) {
  const auto c = small_config(2, 3, 2, 5);
  const ChannelSet ch = generate_channels(generate_topology(c), c);
  for (int q = 0; q < 3; ++q) {
    EXPECT_EQ(Eigen::MatrixXcd(ch.link(1, 1, q)), ch.toward(1, 1).middleCols(q * 2, 2));
  }
}

TEST(Channels, CsvDumpHasOneRowPerEntry) {
  const auto c = small_config(1, 2, 1, 5);
  const ChannelSet ch = generate_channels(generate_topology(c), c);
  std::ostringstream os;
  write_channels_csv(os, ch);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "k,i,l,q,row,col,re,im");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 1 * 1 * 2 * 2 * 2);
}

TEST(Config, SnrIsPowerTimesQ) {
  NetworkConfig c;
  c.dims.Q = 20;
  c.power = 1.0;
  EXPECT_DOUBLE_EQ(snr_of(c), 20.0);
  c.power = 5.0;
  EXPECT_DOUBLE_EQ(snr_of(c), 100.0);
  c.dims.Q = 4;
  c.power = 0.5;
  EXPECT_DOUBLE_EQ(snr_of(c), 2.0);
}

TEST(Config, ValidateRejectsBadFields) {
  NetworkConfig c;
  EXPECT_NO_THROW(c.validate());
  c.dims.K = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.power = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.noise_power = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Rng, SubstreamsAreIndependentOfCallOrder) {
  const auto a = substream_seed(1, "fading", {2, 3});
  const auto b = substream_seed(1, "fading", {3, 2});
  const auto c = substream_seed(1, "shadowing", {2, 3});
  EXPECT_NE(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(a, substream_seed(1, "fading", {2, 3}));
}
