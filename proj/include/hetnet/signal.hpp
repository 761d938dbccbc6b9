#pragma once

#include <vector>

#include <Eigen/Dense>

#include "hetnet/network.hpp"

namespace hetnet {

/// Transmit beamformers. Each user owns one stacked vector of length M*Q
/// covering the BSs of its own cell; block q is v^{q}_{user}.
class BeamformerSet {
 public:
  BeamformerSet() = default;
  explicit BeamformerSet(const NetworkDims& dims);

  const NetworkDims& dims() const { return dims_; }

  Eigen::VectorXcd& user(int u) { return v_[static_cast<std::size_t>(u)]; }
  const Eigen::VectorXcd& user(int u) const { return v_[static_cast<std::size_t>(u)]; }

  auto block(int u, int q) { return user(u).segment(q * dims_.M, dims_.M); }
  auto block(int u, int q) const { return user(u).segment(q * dims_.M, dims_.M); }

  /// Sum over the cell's users of ||v^{q}_{i}||^2.
  double bs_power(int cell, int q) const;

  /// True when every BS satisfies its budget up to `rel_tol * power`.
  bool feasible(double power, double rel_tol = 1e-9) const;

  bool all_finite() const;

 private:
  NetworkDims dims_;
  std::vector<Eigen::VectorXcd> v_;
};

using ReceiverSet = std::vector<Eigen::VectorXcd>;  // per user, length N
using WeightSet = std::vector<double>;              // per user, > 0

/// Per-user utility u(R) of the rate in nats, and its derivative alpha.
class UtilityModel {
 public:
  enum class Kind { SumRate, WeightedSumRate, ProportionalFair };

  static UtilityModel sum_rate();
  /// u(R) = c_user * R with every constant > 0.
  static UtilityModel weighted_sum_rate(std::vector<double> constants);
  /// u(R) = log R, evaluated at max(R, rate_floor).
  static UtilityModel proportional_fair(double rate_floor = 1e-12);

  Kind kind() const { return kind_; }
  double rate_floor() const { return rate_floor_; }

  /// `floored` (optional) is set when the rate was clamped to the floor.
  double value(int user, double rate, bool* floored = nullptr) const;
  double derivative(int user, double rate, bool* floored = nullptr) const;

 private:
  UtilityModel(Kind kind, std::vector<double> constants, double floor);

  Kind kind_ = Kind::SumRate;
  std::vector<double> constants_;
  double rate_floor_ = 1e-12;
};

struct LinkStats {
  Eigen::MatrixXcd covariance;
  double mse = 1.0;
  double rate = 0.0;
};

/// C = sum over all (cell, user) of H v v^H H^H + noise * I, as seen by `user`.
Eigen::MatrixXcd received_covariance(const ChannelSet& channels,
                                     const BeamformerSet& v, double noise,
                                     int user);

/// u = C^{-1} H v. Throws NumericalError when C is not positive definite.
Eigen::VectorXcd mmse_receiver(const Eigen::MatrixXcd& covariance,
                               const Eigen::MatrixXcd& channel,
                               const Eigen::VectorXcd& v_user);

/// Mean square error of `user` when decoding with receiver `u`.
double mse(const ChannelSet& channels, const BeamformerSet& v,
           const Eigen::VectorXcd& u, double noise, int user);

/// 1 - v^H H^H C^{-1} H v, clamped to [1e-300, 1].
double mmse_value(const ChannelSet& channels, const BeamformerSet& v,
                  double noise, int user);

/// log det(I + H v v^H H^H (interference + noise)^{-1}) in nats.
double user_rate(const ChannelSet& channels, const BeamformerSet& v,
                 double noise, int user);

LinkStats link_stats(const ChannelSet& channels, const BeamformerSet& v,
                     double noise, int user);

/// lambda_k * sum_i sum_q ||v^{q}_{i}|| over all cells.
double group_penalty(const BeamformerSet& v, const std::vector<double>& lambdas);

struct P1Value {
  double value = 0.0;    // utility - penalty
  double utility = 0.0;
  double penalty = 0.0;
  double sum_rate = 0.0;  // nats
  bool rate_floored = false;
};

/// The sparse utility objective to be maximized.
P1Value objective_p1(const ChannelSet& channels, const BeamformerSet& v,
                     const UtilityModel& utility,
                     const std::vector<double>& lambdas, double noise);

/// Regularized weighted-MSE objective (sum-rate form):
/// sum (w e - log w) + penalty. Throws std::invalid_argument if any w <= 0.
double objective_p2_sumrate(const ChannelSet& channels, const BeamformerSet& v,
                            const ReceiverSet& u, const WeightSet& w,
                            const std::vector<double>& lambdas, double noise);

}  // namespace hetnet
