#include "hetnet/swmmse.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "hetnet/rng.hpp"

namespace hetnet {

void SwmmseParams::validate() const {
  if (!(outer_tol > 0.0)) throw std::invalid_argument("outer_tol must be > 0");
  if (max_outer_iters < 1) throw std::invalid_argument("max_outer_iters must be >= 1");
  if (inner.max_passes < 1) throw std::invalid_argument("inner_max_passes must be >= 1");
  if (lambda_policy == LambdaPolicy::Fixed) {
    for (double l : lambdas) {
      if (!(l >= 0.0)) throw std::invalid_argument("lambdas must be >= 0");
    }
  }
  if (init_kind == InitKind::Provided && !initial) {
    throw std::invalid_argument("init_kind Provided needs an initial BeamformerSet");
  }
}

ReceiverSet update_receivers(const ChannelSet& channels, const BeamformerSet& v,
                             double noise) {
  const NetworkDims& d = channels.dims();
  ReceiverSet u(static_cast<std::size_t>(d.num_users()));
  for (int user = 0; user < d.num_users(); ++user) {
    const Eigen::MatrixXcd c = received_covariance(channels, v, noise, user);
    u[static_cast<std::size_t>(user)] =
        mmse_receiver(c, channels.toward(user, d.cell_of_user(user)), v.user(user));
  }
  return u;
}

WeightSet update_weights(const ChannelSet& channels, const BeamformerSet& v,
                         const ReceiverSet& u, const UtilityModel& utility,
                         double noise, bool* floored) {
  const NetworkDims& d = channels.dims();
  WeightSet w(static_cast<std::size_t>(d.num_users()));
  for (int user = 0; user < d.num_users(); ++user) {
    const double e = mse(channels, v, u[static_cast<std::size_t>(user)], noise, user);
    double alpha = 1.0;
    if (utility.kind() != UtilityModel::Kind::SumRate) {
      alpha = utility.derivative(user, user_rate(channels, v, noise, user), floored);
    }
    w[static_cast<std::size_t>(user)] = alpha / e;
  }
  return w;
}

std::vector<double> lambda_fixed(const NetworkConfig& config) {
  const NetworkDims& d = config.dims;
  const double value = static_cast<double>(d.Q) * d.K /
                       (static_cast<double>(d.I) * std::sqrt(snr_of(config)));
  return std::vector<double>(static_cast<std::size_t>(d.K), value);
}

double lambda_zero_threshold(const QcGroupLassoInstance& inst) {
  double mx = 0.0;
  for (int i = 0; i < inst.num_users; ++i) {
    for (int q = 0; q < inst.num_bs; ++q) mx = std::max(mx, inst.d_block(i, q).norm());
  }
  return 2.0 * mx;
}

double lambda_adaptive(const QcGroupLassoInstance& inst, double snr) {
  return std::min(0.01 * lambda_zero_threshold(inst) / snr, 1.0);
}

std::vector<double> lambda_adaptive(const std::vector<QcGroupLassoInstance>& instances,
                                    double snr) {
  std::vector<double> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(lambda_adaptive(inst, snr));
  return out;
}

BeamformerSet random_feasible_beamformers(const NetworkDims& dims, double power,
                                          std::uint64_t seed, const BlockMask* mask) {
  BeamformerSet v(dims);
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  for (int user = 0; user < dims.num_users(); ++user) {
    for (int q = 0; q < dims.Q; ++q) {
      if (mask && !(*mask)[static_cast<std::size_t>(user)][static_cast<std::size_t>(q)]) continue;
      auto rng = substream(seed, "init-beamformer", {user, q});
      auto blk = v.block(user, q);
      for (Eigen::Index a = 0; a < blk.size(); ++a) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        blk(a) = {re, im};
      }
    }
  }
  for (int k = 0; k < dims.K; ++k) {
    for (int q = 0; q < dims.Q; ++q) {
      const double p = v.bs_power(k, q);
      if (p <= 0.0) continue;
      const double scale = std::sqrt(power / p);
      for (int i = 0; i < dims.I; ++i) v.block(dims.user_index(k, i), q) *= scale;
    }
  }
  return v;
}

namespace {

int count_active(const BeamformerSet& v, int cell) {
  const NetworkDims& d = v.dims();
  int n = 0;
  for (int i = 0; i < d.I; ++i) {
    for (int q = 0; q < d.Q; ++q) {
      if (v.block(d.user_index(cell, i), q).squaredNorm() > 0.0) ++n;
    }
  }
  return n;
}

CellBeamformers cell_slice(const BeamformerSet& v, int cell) {
  const NetworkDims& d = v.dims();
  CellBeamformers out;
  out.reserve(static_cast<std::size_t>(d.I));
  for (int i = 0; i < d.I; ++i) out.push_back(v.user(d.user_index(cell, i)));
  return out;
}

}  // namespace

SwmmseResult swmmse(const ChannelSet& channels, const NetworkConfig& config,
                    const UtilityModel& utility, const SwmmseParams& params,
                    const BlockMask* mask) {
  config.validate();
  params.validate();
  const NetworkDims& d = config.dims;
  if (!(channels.dims() == d)) throw std::invalid_argument("swmmse: channel dims mismatch");
  const double noise = config.noise_power;
  const double snr = snr_of(config);

  std::vector<double> lambdas;
  switch (params.lambda_policy) {
    case LambdaPolicy::Fixed:
      if (static_cast<int>(params.lambdas.size()) != d.K) {
        throw std::invalid_argument("swmmse: Fixed policy needs one lambda per cell");
      }
      lambdas = params.lambdas;
      break;
    case LambdaPolicy::FormulaFixed:
      lambdas = lambda_fixed(config);
      break;
    case LambdaPolicy::Adaptive:
      lambdas.assign(static_cast<std::size_t>(d.K), 0.0);
      break;
  }

  SwmmseResult result;
  switch (params.init_kind) {
    case InitKind::RandomFeasible:
      result.v = random_feasible_beamformers(d, config.power, params.seed, mask);
      break;
    case InitKind::Zero:
      result.v = BeamformerSet(d);
      break;
    case InitKind::Provided:
      result.v = *params.initial;
      if (!(result.v.dims() == d)) throw std::invalid_argument("swmmse: initial dims mismatch");
      break;
  }

  SwmmseTrace& trace = result.trace;
  double f_prev = objective_p1(channels, result.v, utility, lambdas, noise).value;
  trace.initial_objective = f_prev;

  for (int iter = 1; iter <= params.max_outer_iters; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    const ReceiverSet u = update_receivers(channels, result.v, noise);
    const WeightSet w = update_weights(channels, result.v, u, utility, noise,
                                       &trace.weight_floored);

    std::vector<QcGroupLassoInstance> instances;
    instances.reserve(static_cast<std::size_t>(d.K));
    for (int k = 0; k < d.K; ++k) {
      instances.push_back(build_instance(channels, u, w, k, lambdas[static_cast<std::size_t>(k)],
                                         config.power));
    }
    if (params.lambda_policy == LambdaPolicy::Adaptive) {
      lambdas = lambda_adaptive(instances, snr);
      for (int k = 0; k < d.K; ++k) instances[static_cast<std::size_t>(k)].lambda = lambdas[static_cast<std::size_t>(k)];
    }

    TraceRecord rec;
    rec.iter = iter;
    for (int k = 0; k < d.K; ++k) {
      QcGroupLassoInstance& inst = instances[static_cast<std::size_t>(k)];
      if (mask) {
        inst.allowed.resize(static_cast<std::size_t>(d.I));
        for (int i = 0; i < d.I; ++i) {
          inst.allowed[static_cast<std::size_t>(i)] = (*mask)[static_cast<std::size_t>(d.user_index(k, i))];
        }
      }
      P3Result cell = solve_p3(inst, cell_slice(result.v, k), params.inner);
      for (int i = 0; i < d.I; ++i) {
        result.v.user(d.user_index(k, i)) = std::move(cell.v[static_cast<std::size_t>(i)]);
      }
      rec.active_blocks_per_cell.push_back(count_active(result.v, k));
      rec.active_blocks_total += rec.active_blocks_per_cell.back();
    }

    const P1Value f = objective_p1(channels, result.v, utility, lambdas, noise);
    rec.objective_p1 = f.value;
    rec.sum_rate = f.sum_rate;
    rec.penalty = f.penalty;
    rec.lambdas = lambdas;
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0).count();
    trace.records.push_back(std::move(rec));
    if (params.on_iteration) params.on_iteration(iter, u, w, result.v);

    const bool done = std::abs(f.value - f_prev) < params.outer_tol;
    f_prev = f.value;
    if (done) {
      trace.converged = true;
      break;
    }
  }
  result.lambdas = lambdas;
  return result;
}

double ClusterAssignment::average_size() const {
  if (serving.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : serving) total += static_cast<double>(s.size());
  return total / static_cast<double>(serving.size());
}

ClusterAssignment extract_clusters(const BeamformerSet& v, double power,
                                   double threshold_rel) {
  if (!(threshold_rel >= 0.0)) throw std::invalid_argument("threshold_rel must be >= 0");
  const NetworkDims& d = v.dims();
  const double threshold = threshold_rel * std::sqrt(power / d.I);
  ClusterAssignment out;
  out.serving.resize(static_cast<std::size_t>(d.num_users()));
  for (int user = 0; user < d.num_users(); ++user) {
    for (int q = 0; q < d.Q; ++q) {
      if (v.block(user, q).norm() > threshold) {
        out.serving[static_cast<std::size_t>(user)].push_back(q);
      }
    }
  }
  return out;
}

}  // namespace hetnet
