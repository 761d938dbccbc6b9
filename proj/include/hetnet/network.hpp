#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hetnet {

/// Shape of the network: cells, BSs per cell, users per cell and antenna
/// counts. Users and BSs are addressed by flat indices (cell-major).
struct NetworkDims {
  int K = 1;  // cells
  int Q = 1;  // BSs per cell
  int I = 1;  // users per cell
  int M = 1;  // transmit antennas per BS
  int N = 1;  // receive antennas per user

  int num_users() const { return K * I; }
  int num_bs() const { return K * Q; }
  int user_index(int cell, int i) const { return cell * I + i; }
  int bs_index(int cell, int q) const { return cell * Q + q; }
  int cell_of_user(int user) const { return user / I; }
  int cell_antennas() const { return M * Q; }

  bool operator==(const NetworkDims&) const = default;
};

struct NetworkConfig {
  NetworkDims dims;
  double power = 1.0;  // per-BS budget P (linear)
  double noise_power = 1.0;
  double cell_spacing_m = 2000.0;
  double min_link_distance_m = 35.0;
  double shadowing_sigma_db = 8.0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the first violated field.
  void validate() const;
};

/// SNR = P * Q (linear).
double snr_of(const NetworkConfig& config);

struct Topology {
  std::vector<Eigen::Vector2d> cell_centers;  // K
  std::vector<Eigen::Vector2d> bs_positions;  // K*Q, flat BS index
  std::vector<Eigen::Vector2d> user_positions;  // K*I, flat user index
};

Topology generate_topology(const NetworkConfig& config);

/// Channel matrices for every (user, BS) pair. For a user and a cell the
/// N x (M*Q) concatenation over that cell's BSs is stored contiguously, so
/// the per-link N x M matrix is a column block of it.
class ChannelSet {
 public:
  explicit ChannelSet(const NetworkDims& dims);

  const NetworkDims& dims() const { return dims_; }

  /// Concatenated channel from all BSs of `cell` to `user`: N x (M*Q).
  const Eigen::MatrixXcd& toward(int user, int cell) const {
    return h_[static_cast<std::size_t>(user * dims_.K + cell)];
  }
  Eigen::MatrixXcd& toward(int user, int cell) {
    return h_[static_cast<std::size_t>(user * dims_.K + cell)];
  }

  /// Channel from BS q of `cell` to `user`: N x M.
  auto link(int user, int cell, int q) const {
    return toward(user, cell).middleCols(q * dims_.M, dims_.M);
  }
  auto link(int user, int cell, int q) {
    return toward(user, cell).middleCols(q * dims_.M, dims_.M);
  }

  bool all_finite() const;

  /// FNV-1a over the raw bit patterns of every entry, in storage order.
  std::uint64_t hash() const;

 private:
  NetworkDims dims_;
  std::vector<Eigen::MatrixXcd> h_;
};

ChannelSet generate_channels(const Topology& topology,
                             const NetworkConfig& config);

/// Per-dimension variance of a link's entries: (200/d)^3 * L with d clamped
/// below at `min_distance`.
double pathloss_variance(double distance, double min_distance,
                         double shadowing_linear);

/// CSV dump with header k,i,l,q,row,col,re,im.
void write_channels_csv(std::ostream& out, const ChannelSet& channels);

}  // namespace hetnet
