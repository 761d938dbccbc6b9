#include "hetnet/network.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "hetnet/csv.hpp"
#include "hetnet/rng.hpp"

namespace hetnet {

void NetworkConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("invalid network config: " + what);
  };
  if (dims.K < 1) fail("K must be >= 1");
  if (dims.Q < 1) fail("Q must be >= 1");
  if (dims.I < 1) fail("I must be >= 1");
  if (dims.M < 1) fail("M must be >= 1");
  if (dims.N < 1) fail("N must be >= 1");
  if (!(power > 0.0)) fail("power must be > 0");
  if (!(noise_power > 0.0)) fail("noise_power must be > 0");
  if (!(cell_spacing_m > 0.0)) fail("cell_spacing_m must be > 0");
  if (!(min_link_distance_m > 0.0)) fail("min_link_distance_m must be > 0");
  if (!(shadowing_sigma_db >= 0.0)) fail("shadowing_sigma_db must be >= 0");
}

double snr_of(const NetworkConfig& config) {
  return config.power * static_cast<double>(config.dims.Q);
}

namespace {

// Hexagonal lattice points, ring by ring outward from the origin. Ring r has
// 6r points; the first point of ring 1 is (spacing, 0).
std::vector<Eigen::Vector2d> hex_centers(int count, double spacing) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(static_cast<std::size_t>(count));
  out.emplace_back(0.0, 0.0);
  for (int ring = 1; static_cast<int>(out.size()) < count; ++ring) {
    std::vector<Eigen::Vector2d> corners;
    for (int c = 0; c < 6; ++c) {
      const double angle = c * std::numbers::pi / 3.0;
      corners.emplace_back(ring * spacing * (c == 0 ? 1.0 : std::cos(angle)),
                           ring * spacing * (c == 0 ? 0.0 : std::sin(angle)));
    }
    for (int c = 0; c < 6 && static_cast<int>(out.size()) < count; ++c) {
      const Eigen::Vector2d& a = corners[static_cast<std::size_t>(c)];
      const Eigen::Vector2d& b = corners[static_cast<std::size_t>((c + 1) % 6)];
      for (int j = 0; j < ring && static_cast<int>(out.size()) < count; ++j) {
        out.push_back(a + (b - a) * (static_cast<double>(j) / ring));
      }
    }
  }
  return out;
}

Eigen::Vector2d uniform_in_disk(std::mt19937_64& rng, const Eigen::Vector2d& center,
                                double radius) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = radius * std::sqrt(unit(rng));
  const double theta = 2.0 * std::numbers::pi * unit(rng);
  return center + Eigen::Vector2d(r * std::cos(theta), r * std::sin(theta));
}

}  // namespace

Topology generate_topology(const NetworkConfig& config) {
  config.validate();
  const NetworkDims& d = config.dims;
  Topology topo;
  topo.cell_centers = hex_centers(d.K, config.cell_spacing_m);
  const double radius = 0.5 * config.cell_spacing_m;
  topo.bs_positions.resize(static_cast<std::size_t>(d.num_bs()));
  topo.user_positions.resize(static_cast<std::size_t>(d.num_users()));
  for (int k = 0; k < d.K; ++k) {
    const auto& center = topo.cell_centers[static_cast<std::size_t>(k)];
    for (int q = 0; q < d.Q; ++q) {
      auto rng = substream(config.seed, "bs-position", {k, q});
      topo.bs_positions[static_cast<std::size_t>(d.bs_index(k, q))] =
          uniform_in_disk(rng, center, radius);
    }
    for (int i = 0; i < d.I; ++i) {
      auto rng = substream(config.seed, "user-position", {k, i});
      topo.user_positions[static_cast<std::size_t>(d.user_index(k, i))] =
          uniform_in_disk(rng, center, radius);
    }
  }
  return topo;
}

ChannelSet::ChannelSet(const NetworkDims& dims) : dims_(dims) {
  h_.assign(static_cast<std::size_t>(dims.num_users() * dims.K),
            Eigen::MatrixXcd::Zero(dims.N, dims.M * dims.Q));
}

bool ChannelSet::all_finite() const {
  for (const auto& m : h_) {
    if (!m.allFinite()) return false;
  }
  return true;
}

std::uint64_t ChannelSet::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double x) {
    auto bits = std::bit_cast<std::uint64_t>(x);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& m : h_) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        mix(m(i, j).real());
        mix(m(i, j).imag());
      }
    }
  }
  return h;
}

double pathloss_variance(double distance, double min_distance,
                         double shadowing_linear) {
  const double d = std::max(distance, min_distance);
  const double ratio = 200.0 / d;
  return ratio * ratio * ratio * shadowing_linear;
}

ChannelSet generate_channels(const Topology& topology,
                             const NetworkConfig& config) {
  config.validate();
  const NetworkDims& d = config.dims;
  if (topology.bs_positions.size() != static_cast<std::size_t>(d.num_bs()) ||
      topology.user_positions.size() != static_cast<std::size_t>(d.num_users())) {
    throw std::invalid_argument("generate_channels: topology does not match config");
  }
  ChannelSet channels(d);
  for (int user = 0; user < d.num_users(); ++user) {
    const auto& up = topology.user_positions[static_cast<std::size_t>(user)];
    for (int l = 0; l < d.K; ++l) {
      for (int q = 0; q < d.Q; ++q) {
        const auto& bp = topology.bs_positions[static_cast<std::size_t>(d.bs_index(l, q))];
        double shadow = 1.0;
        if (config.shadowing_sigma_db > 0.0) {
          auto srng = substream(config.seed, "shadowing", {user, l, q});
          std::normal_distribution<double> db(0.0, config.shadowing_sigma_db);
          shadow = std::pow(10.0, db(srng) / 10.0);
        }
        const double var =
            pathloss_variance((up - bp).norm(), config.min_link_distance_m, shadow);
        std::normal_distribution<double> gauss(0.0, std::sqrt(var));
        auto rng = substream(config.seed, "fading", {user, l, q});
        auto block = channels.link(user, l, q);
        for (Eigen::Index c = 0; c < block.cols(); ++c) {
          for (Eigen::Index r = 0; r < block.rows(); ++r) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            block(r, c) = {re, im};
          }
        }
      }
    }
  }
  return channels;
}

void write_channels_csv(std::ostream& out, const ChannelSet& channels) {
  const NetworkDims& d = channels.dims();
  out << "k,i,l,q,row,col,re,im\n";
  for (int k = 0; k < d.K; ++k) {
    for (int i = 0; i < d.I; ++i) {
      const int user = d.user_index(k, i);
      for (int l = 0; l < d.K; ++l) {
        for (int q = 0; q < d.Q; ++q) {
          auto block = channels.link(user, l, q);
          for (Eigen::Index r = 0; r < block.rows(); ++r) {
            for (Eigen::Index c = 0; c < block.cols(); ++c) {
              out << k << ',' << i << ',' << l << ',' << q << ',' << r << ',' << c
                  << ',' << format_double(block(r, c).real()) << ','
                  << format_double(block(r, c).imag()) << '\n';
            }
          }
        }
      }
    }
  }
}

}  // namespace hetnet
