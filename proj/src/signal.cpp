#include "hetnet/signal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hetnet/errors.hpp"

namespace hetnet {

BeamformerSet::BeamformerSet(const NetworkDims& dims) : dims_(dims) {
  v_.assign(static_cast<std::size_t>(dims.num_users()),
            Eigen::VectorXcd::Zero(dims.cell_antennas()));
}

double BeamformerSet::bs_power(int cell, int q) const {
  double p = 0.0;
  for (int i = 0; i < dims_.I; ++i) {
    p += block(dims_.user_index(cell, i), q).squaredNorm();
  }
  return p;
}

bool BeamformerSet::feasible(double power, double rel_tol) const {
  for (int k = 0; k < dims_.K; ++k) {
    for (int q = 0; q < dims_.Q; ++q) {
      if (bs_power(k, q) > power * (1.0 + rel_tol)) return false;
    }
  }
  return true;
}

bool BeamformerSet::all_finite() const {
  return std::all_of(v_.begin(), v_.end(),
                     [](const Eigen::VectorXcd& x) { return x.allFinite(); });
}

UtilityModel::UtilityModel(Kind kind, std::vector<double> constants, double floor)
    : kind_(kind), constants_(std::move(constants)), rate_floor_(floor) {}

UtilityModel UtilityModel::sum_rate() { return {Kind::SumRate, {}, 1e-12}; }

UtilityModel UtilityModel::weighted_sum_rate(std::vector<double> constants) {
  for (double c : constants) {
    if (!(c > 0.0)) {
      throw std::invalid_argument("weighted_sum_rate: constants must be > 0");
    }
  }
  return {Kind::WeightedSumRate, std::move(constants), 1e-12};
}

UtilityModel UtilityModel::proportional_fair(double rate_floor) {
  if (!(rate_floor > 0.0)) {
    throw std::invalid_argument("proportional_fair: rate_floor must be > 0");
  }
  return {Kind::ProportionalFair, {}, rate_floor};
}

double UtilityModel::value(int user, double rate, bool* floored) const {
  switch (kind_) {
    case Kind::SumRate:
      return rate;
    case Kind::WeightedSumRate:
      return constants_.at(static_cast<std::size_t>(user)) * rate;
    case Kind::ProportionalFair: {
      const bool low = rate < rate_floor_;
      if (floored && low) *floored = true;
      return std::log(low ? rate_floor_ : rate);
    }
  }
  return rate;
}

double UtilityModel::derivative(int user, double rate, bool* floored) const {
  switch (kind_) {
    case Kind::SumRate:
      return 1.0;
    case Kind::WeightedSumRate:
      return constants_.at(static_cast<std::size_t>(user));
    case Kind::ProportionalFair: {
      const bool low = rate < rate_floor_;
      if (floored && low) *floored = true;
      return 1.0 / (low ? rate_floor_ : rate);
    }
  }
  return 1.0;
}

namespace {

void check_dims(const ChannelSet& channels, const BeamformerSet& v, int user) {
  if (!(channels.dims() == v.dims())) {
    throw std::invalid_argument("beamformer/channel dimension mismatch");
  }
  if (user < 0 || user >= channels.dims().num_users()) {
    throw std::invalid_argument("user index out of range");
  }
}

// H^{cell(j)}_{user} v_j: the signal of user j as received by `user`.
Eigen::VectorXcd received_signal(const ChannelSet& channels, const BeamformerSet& v,
                                 int user, int j) {
  const int cell = channels.dims().cell_of_user(j);
  return channels.toward(user, cell) * v.user(j);
}

}  // namespace

Eigen::MatrixXcd received_covariance(const ChannelSet& channels,
                                     const BeamformerSet& v, double noise,
                                     int user) {
  check_dims(channels, v, user);
  const NetworkDims& d = channels.dims();
  Eigen::MatrixXcd c = noise * Eigen::MatrixXcd::Identity(d.N, d.N);
  for (int j = 0; j < d.num_users(); ++j) {
    const Eigen::VectorXcd s = received_signal(channels, v, user, j);
    c.noalias() += s * s.adjoint();
  }
  return c;
}

Eigen::VectorXcd mmse_receiver(const Eigen::MatrixXcd& covariance,
                               const Eigen::MatrixXcd& channel,
                               const Eigen::VectorXcd& v_user) {
  Eigen::LLT<Eigen::MatrixXcd> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("mmse_receiver: covariance is not positive definite");
  }
  return llt.solve(channel * v_user);
}

double mse(const ChannelSet& channels, const BeamformerSet& v,
           const Eigen::VectorXcd& u, double noise, int user) {
  check_dims(channels, v, user);
  const NetworkDims& d = channels.dims();
  double e = noise * u.squaredNorm();
  for (int j = 0; j < d.num_users(); ++j) {
    const std::complex<double> g = u.dot(received_signal(channels, v, user, j));
    if (j == user) {
      e += std::norm(1.0 - g);
    } else {
      e += std::norm(g);
    }
  }
  return e;
}

double mmse_value(const ChannelSet& channels, const BeamformerSet& v,
                  double noise, int user) {
  const Eigen::MatrixXcd c = received_covariance(channels, v, noise, user);
  const Eigen::VectorXcd hv = received_signal(channels, v, user, user);
  Eigen::LLT<Eigen::MatrixXcd> llt(c);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("mmse_value: covariance is not positive definite");
  }
  const double gain = hv.dot(llt.solve(hv)).real();
  return std::clamp(1.0 - gain, 1e-300, 1.0);
}

double user_rate(const ChannelSet& channels, const BeamformerSet& v,
                 double noise, int user) {
  check_dims(channels, v, user);
  const NetworkDims& d = channels.dims();
  Eigen::MatrixXcd interference = noise * Eigen::MatrixXcd::Identity(d.N, d.N);
  for (int j = 0; j < d.num_users(); ++j) {
    if (j == user) continue;
    const Eigen::VectorXcd s = received_signal(channels, v, user, j);
    interference.noalias() += s * s.adjoint();
  }
  const Eigen::VectorXcd hv = received_signal(channels, v, user, user);
  Eigen::LLT<Eigen::MatrixXcd> llt(interference);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("user_rate: interference covariance is not positive definite");
  }
  // det(I + a a^H B^{-1}) = 1 + a^H B^{-1} a for a rank-one signal term.
  const double sinr = std::max(0.0, hv.dot(llt.solve(hv)).real());
  return std::log1p(sinr);
}

LinkStats link_stats(const ChannelSet& channels, const BeamformerSet& v,
                     double noise, int user) {
  LinkStats s;
  s.covariance = received_covariance(channels, v, noise, user);
  s.mse = mmse_value(channels, v, noise, user);
  s.rate = user_rate(channels, v, noise, user);
  return s;
}

double group_penalty(const BeamformerSet& v, const std::vector<double>& lambdas) {
  const NetworkDims& d = v.dims();
  if (static_cast<int>(lambdas.size()) != d.K) {
    throw std::invalid_argument("group_penalty: need one lambda per cell");
  }
  double pen = 0.0;
  for (int k = 0; k < d.K; ++k) {
    const double lambda = lambdas[static_cast<std::size_t>(k)];
    if (lambda == 0.0) continue;
    double s = 0.0;
    for (int i = 0; i < d.I; ++i) {
      for (int q = 0; q < d.Q; ++q) s += v.block(d.user_index(k, i), q).norm();
    }
    pen += lambda * s;
  }
  return pen;
}

P1Value objective_p1(const ChannelSet& channels, const BeamformerSet& v,
                     const UtilityModel& utility,
                     const std::vector<double>& lambdas, double noise) {
  P1Value out;
  const NetworkDims& d = channels.dims();
  for (int user = 0; user < d.num_users(); ++user) {
    const double r = user_rate(channels, v, noise, user);
    out.sum_rate += r;
    out.utility += utility.value(user, r, &out.rate_floored);
  }
  out.penalty = group_penalty(v, lambdas);
  out.value = out.utility - out.penalty;
  return out;
}

double objective_p2_sumrate(const ChannelSet& channels, const BeamformerSet& v,
                            const ReceiverSet& u, const WeightSet& w,
                            const std::vector<double>& lambdas, double noise) {
  const NetworkDims& d = channels.dims();
  if (static_cast<int>(u.size()) != d.num_users() ||
      static_cast<int>(w.size()) != d.num_users()) {
    throw std::invalid_argument("objective_p2_sumrate: receiver/weight count mismatch");
  }
  double total = 0.0;
  for (int user = 0; user < d.num_users(); ++user) {
    const double wu = w[static_cast<std::size_t>(user)];
    if (!(wu > 0.0)) {
      throw std::invalid_argument("objective_p2_sumrate: weights must be > 0");
    }
    const double e = mse(channels, v, u[static_cast<std::size_t>(user)], noise, user);
    total += wu * e - std::log(wu);
  }
  return total + group_penalty(v, lambdas);
}

}  // namespace hetnet
