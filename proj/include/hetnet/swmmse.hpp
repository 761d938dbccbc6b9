#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "hetnet/group_lasso.hpp"
#include "hetnet/network.hpp"
#include "hetnet/signal.hpp"

namespace hetnet {

enum class LambdaPolicy {
  Fixed,         // user-supplied per-cell values
  FormulaFixed,  // QK / (I sqrt(SNR)) for every cell
  Adaptive,      // min(0.01 * lambda_bar_k / SNR, 1), refreshed every iteration
};

enum class InitKind {
  RandomFeasible,  // iid complex Gaussian blocks scaled so each BS uses exactly P
  Zero,
  Provided,
};

struct SwmmseParams {
  LambdaPolicy lambda_policy = LambdaPolicy::FormulaFixed;
  std::vector<double> lambdas;  // used when lambda_policy == Fixed
  double outer_tol = 1e-1;
  int max_outer_iters = 500;
  P3Options inner;
  InitKind init_kind = InitKind::RandomFeasible;
  std::optional<BeamformerSet> initial;  // used when init_kind == Provided
  std::uint64_t seed = 0;

  /// Called after every outer iteration with the receivers and weights that
  /// were used and the updated beamformers.
  std::function<void(int iter, const ReceiverSet& u, const WeightSet& w,
                     const BeamformerSet& v)>
      on_iteration;

  void validate() const;
};

struct TraceRecord {
  int iter = 0;
  double objective_p1 = 0.0;  // nats
  double sum_rate = 0.0;      // nats
  double penalty = 0.0;
  int active_blocks_total = 0;
  std::vector<int> active_blocks_per_cell;
  std::vector<double> lambdas;
  double wall_ms = 0.0;
};

struct SwmmseTrace {
  double initial_objective = 0.0;
  std::vector<TraceRecord> records;
  bool converged = false;
  bool weight_floored = false;  // a proportional-fair weight used the rate floor
};

struct SwmmseResult {
  BeamformerSet v;
  SwmmseTrace trace;
  std::vector<double> lambdas;  // values in force at the last iteration
};

/// Per (user, own-cell BS) mask: true where the block may be nonzero.
using BlockMask = std::vector<std::vector<bool>>;

ReceiverSet update_receivers(const ChannelSet& channels, const BeamformerSet& v,
                             double noise);

WeightSet update_weights(const ChannelSet& channels, const BeamformerSet& v,
                         const ReceiverSet& u, const UtilityModel& utility,
                         double noise, bool* floored = nullptr);

std::vector<double> lambda_fixed(const NetworkConfig& config);

/// lambda_k = min(0.01 * 2 max_{q,i} ||d_i[q]|| / snr, 1).
double lambda_adaptive(const QcGroupLassoInstance& inst, double snr);
std::vector<double> lambda_adaptive(const std::vector<QcGroupLassoInstance>& instances,
                                    double snr);

/// One-shot all-zero threshold 2 max_{q,i} ||d_i[q]||.
double lambda_zero_threshold(const QcGroupLassoInstance& inst);

BeamformerSet random_feasible_beamformers(const NetworkDims& dims, double power,
                                          std::uint64_t seed,
                                          const BlockMask* mask = nullptr);

/// Three-block BCD over (u, w, v). Stops when |f(v^{t+1}) - f(v^t)| <
/// outer_tol or after max_outer_iters; never throws for non-convergence.
SwmmseResult swmmse(const ChannelSet& channels, const NetworkConfig& config,
                    const UtilityModel& utility, const SwmmseParams& params,
                    const BlockMask* mask = nullptr);

struct ClusterAssignment {
  std::vector<std::vector<int>> serving;  // per user, sorted BS indices within its cell

  double average_size() const;
};

/// S_i = {q : ||v^{q}_{i}|| > threshold_rel * sqrt(P / I)}.
ClusterAssignment extract_clusters(const BeamformerSet& v, double power,
                                   double threshold_rel = 1e-5);

}  // namespace hetnet
