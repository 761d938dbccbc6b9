#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hetnet/baselines.hpp"
#include "hetnet/network.hpp"
#include "hetnet/signal.hpp"
#include "hetnet/swmmse.hpp"

namespace hetnet {

struct AlgorithmSpec {
  enum class Kind { SwmmseFixed, SwmmseAdaptive, WmmseFull, WmmseNn, Zf };
  Kind kind = Kind::SwmmseFixed;
  int cluster_size = 0;  // Zf only

  /// swmmse_fixed, swmmse_adaptive, wmmse_full, wmmse_nn, zf(<n>)
  std::string name() const;
  static AlgorithmSpec parse(const std::string& text);
};

struct SolverSettings {
  UtilityModel::Kind utility = UtilityModel::Kind::SumRate;
  LambdaPolicy fixed_policy = LambdaPolicy::FormulaFixed;  // for swmmse_fixed
  double lambda = 0.0;  // used when fixed_policy == Fixed
  double outer_tol = 1e-1;
  int max_outer_iters = 500;
  double inner_tol = 0.0;  // 0 selects the default 1e-6 sqrt(P)
  int inner_max_passes = 50;
  double bisection_tol = 1e-8;
  double threshold_rel = 1e-5;

  SwmmseParams params(std::uint64_t seed, int num_cells) const;
  UtilityModel utility_model() const;
};

struct Scenario {
  NetworkConfig network;
  SolverSettings solver;
  std::vector<AlgorithmSpec> algorithms{AlgorithmSpec{}};
  std::vector<double> snr_grid_db;
  bool power_from_snr = false;  // false: use network.power for `solve`
  int num_draws = 1;
  std::uint64_t base_seed = 0;

  void validate() const;
};

/// Sectioned key = value text ([network], [solver], [experiment]); '#' starts
/// a comment. Unknown sections or keys throw ConfigError.
Scenario parse_scenario(std::istream& in);
Scenario load_scenario(const std::string& path);

/// Network config for one (SNR, draw): P = SNR / Q, seed derived from the draw.
NetworkConfig draw_config(const Scenario& scenario, double snr_db, std::uint64_t draw_seed);
std::uint64_t draw_seed(std::uint64_t base_seed, int draw);

struct MetricsRow {
  std::uint64_t seed = 0;
  double snr_db = 0.0;
  std::string algorithm;
  double lambda_used = 0.0;
  double sum_rate_nats = 0.0;
  double sum_rate_bits = 0.0;
  std::vector<double> per_user_rates;
  double avg_serving_bs = 0.0;
  double per_bs_power_rel = 0.0;
  int outer_iterations = 0;
  bool converged = true;
  double wall_ms = 0.0;
  std::uint64_t channel_hash = 0;
};

/// Exact header line of metrics.csv (no trailing newline).
std::string metrics_header();
std::string format_metrics_row(const MetricsRow& row);
/// Parses a line produced by format_metrics_row.
MetricsRow parse_metrics_row(const std::string& line);

/// Rates, cluster sizes and power for `v`. With a reference, power is the
/// ratio of total transmit power to the reference's; otherwise the mean
/// per-BS power.
MetricsRow compute_metrics(const ChannelSet& channels, const BeamformerSet& v,
                           const NetworkConfig& config,
                           const BeamformerSet* reference, double threshold_rel);

struct RunOutput {
  MetricsRow row;
  std::optional<SwmmseTrace> trace;  // absent for ZF
  BeamformerSet v;
};

/// Runs one algorithm on one realization.
RunOutput run_algorithm(const AlgorithmSpec& algo, const Scenario& scenario,
                        const NetworkConfig& config, const Topology& topology,
                        const ChannelSet& channels, const BeamformerSet* reference);

/// Runs every listed algorithm on the realization of (snr, seed). When
/// wmmse_full is present it runs first and serves as the power reference.
std::vector<RunOutput> run_draw(const Scenario& scenario, double snr_db,
                                std::uint64_t seed);

struct ExperimentOptions {
  int threads = 1;
  bool record_timing = false;  // false writes wall_ms = 0 for byte-stable output
  /// Rows already done, keyed by format "algorithm|snr|seed".
  std::vector<MetricsRow> completed;
  /// Called with each finished row in canonical order.
  std::function<void(const MetricsRow&)> on_row;
};

/// All (snr, draw, algorithm) rows in canonical order (snr index, draw
/// index, algorithm index). Completed rows are reused verbatim.
std::vector<MetricsRow> run_experiment(const Scenario& scenario,
                                       const ExperimentOptions& options = {});

void write_trace_csv(std::ostream& out, const SwmmseTrace& trace, bool record_timing);

}  // namespace hetnet
