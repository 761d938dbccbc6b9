// hetnet-sim: solve one realization, sweep a scenario, or self-check.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "hetnet/csv.hpp"
#include "hetnet/errors.hpp"
#include "hetnet/harness.hpp"

namespace fs = std::filesystem;
using namespace hetnet;

namespace {

std::string row_key(const MetricsRow& r) {
  return r.algorithm + "|" + format_double(r.snr_db) + "|" + std::to_string(r.seed);
}

void write_file_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw ConfigError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

// Rows of an interrupted metrics.csv. A trailing line without a newline is
// an interrupted write and is dropped.
std::vector<MetricsRow> read_completed(const fs::path& path, std::string* kept_text) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  if (const auto nl = text.rfind('\n'); nl == std::string::npos) {
    text.clear();
  } else {
    text.erase(nl + 1);
  }
  std::vector<MetricsRow> rows;
  std::istringstream lines(text);
  std::string line;
  bool header = true;
  while (std::getline(lines, line)) {
    if (header) {
      if (line != metrics_header()) {
        throw ConfigError("'" + path.string() + "' does not start with the metrics header");
      }
      header = false;
      continue;
    }
    if (!line.empty()) rows.push_back(parse_metrics_row(line));
  }
  *kept_text = text;
  return rows;
}

int cmd_solve(const std::string& config_path, std::optional<std::uint64_t> seed,
              std::optional<double> snr_db, const std::string& out_dir, bool timing) {
  const Scenario scenario = load_scenario(config_path);
  const std::uint64_t s = seed.value_or(scenario.base_seed);
  NetworkConfig config = scenario.network;
  double snr_label = 10.0 * std::log10(snr_of(config));
  if (snr_db || scenario.power_from_snr) {
    snr_label = snr_db.value_or(scenario.snr_grid_db.front());
    config = draw_config(scenario, snr_label, s);
  }
  config.seed = s;
  const fs::path dir = prepare_out_dir(out_dir);

  const Topology topology = generate_topology(config);
  const ChannelSet channels = generate_channels(topology, config);
  if (!channels.all_finite()) throw NumericalError("generated channels are not finite");

  // Same ordering rule as a sweep: wmmse_full first as the power reference.
  std::vector<RunOutput> outputs(scenario.algorithms.size());
  std::optional<std::size_t> full;
  for (std::size_t a = 0; a < scenario.algorithms.size() && !full; ++a) {
    if (scenario.algorithms[a].kind == AlgorithmSpec::Kind::WmmseFull) full = a;
  }
  const BeamformerSet* reference = nullptr;
  if (full) {
    RunOutput& ref = outputs[*full];
    ref = run_algorithm(scenario.algorithms[*full], scenario, config, topology, channels, nullptr);
    reference = &ref.v;
    ref.row.per_bs_power_rel =
        compute_metrics(channels, ref.v, config, reference, 0.0).per_bs_power_rel;
  }
  std::string metrics = metrics_header() + "\n";
  for (std::size_t a = 0; a < scenario.algorithms.size(); ++a) {
    if (!full || a != *full) {
      outputs[a] = run_algorithm(scenario.algorithms[a], scenario, config, topology, channels, reference);
    }
    RunOutput& o = outputs[a];
    if (!o.v.all_finite()) throw NumericalError(o.row.algorithm + " produced non-finite beamformers");
    o.row.snr_db = snr_label;
    if (!timing) o.row.wall_ms = 0.0;
    metrics += format_metrics_row(o.row) + "\n";
    if (o.trace) {
      std::ostringstream t;
      write_trace_csv(t, *o.trace, timing);
      write_file_atomically(dir / ("trace_" + o.row.algorithm + "_" + std::to_string(s) + ".csv"),
                            t.str());
    }
    std::cerr << o.row.algorithm << ": sum rate " << o.row.sum_rate_bits << " bits, "
              << o.row.avg_serving_bs << " serving BSs/user, " << o.row.outer_iterations
              << " iterations" << (o.row.converged ? "" : " (not converged)") << "\n";
  }
  write_file_atomically(dir / "metrics.csv", metrics);
  return 0;
}

int cmd_sweep(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out_dir, bool resume, int threads, bool timing) {
  Scenario scenario = load_scenario(config_path);
  if (seed) scenario.base_seed = *seed;
  if (!scenario.power_from_snr) throw ConfigError("sweep needs [experiment] snr_db");
  const fs::path dir = prepare_out_dir(out_dir);
  const fs::path metrics_path = dir / "metrics.csv";

  ExperimentOptions options;
  options.threads = threads;
  options.record_timing = timing;
  std::string kept;
  if (resume) options.completed = read_completed(metrics_path, &kept);
  std::set<std::string> done;
  for (const auto& r : options.completed) done.insert(row_key(r));
  if (kept.empty()) kept = metrics_header() + "\n";
  write_file_atomically(metrics_path, kept);

  // New rows are appended as they finish so an interrupted sweep can resume.
  std::ofstream append(metrics_path, std::ios::binary | std::ios::app);
  std::size_t fresh = 0;
  options.on_row = [&](const MetricsRow& r) {
    if (done.count(row_key(r))) return;
    append << format_metrics_row(r) << '\n';
    append.flush();
    ++fresh;
  };
  const std::vector<MetricsRow> rows = run_experiment(scenario, options);
  append.close();

  // Final file in canonical order, identical to an uninterrupted run.
  std::string text = metrics_header() + "\n";
  for (const auto& r : rows) text += format_metrics_row(r) + "\n";
  write_file_atomically(metrics_path, text);
  std::cerr << rows.size() << " rows (" << fresh << " computed, " << rows.size() - fresh
            << " reused) -> " << metrics_path.string() << "\n";
  return 0;
}

int cmd_check(const std::optional<std::string>& config_path, std::optional<std::uint64_t> seed) {
  Scenario scenario;
  if (config_path) {
    scenario = load_scenario(*config_path);
  } else {
    scenario.network.dims = {2, 3, 3, 2, 2};
    scenario.snr_grid_db = {10.0};
    scenario.power_from_snr = true;
  }
  const std::uint64_t s = seed.value_or(scenario.base_seed);
  NetworkConfig config = scenario.network;
  if (scenario.power_from_snr) config = draw_config(scenario, scenario.snr_grid_db.front(), s);
  config.seed = s;
  const ChannelSet channels = generate_channels(generate_topology(config), config);

  int failures = 0;
  auto report = [&](bool ok, const std::string& what, const std::string& detail) {
    std::cout << (ok ? "ok     " : "FAILED ") << what << ": " << detail << "\n";
    if (!ok) ++failures;
  };
  report(channels.all_finite(), "channels finite", std::to_string(channels.hash()));

  SwmmseParams params = scenario.solver.params(s, config.dims.K);
  params.outer_tol = 1e-4;
  const std::vector<double> lambdas = lambda_fixed(config);
  const double users = config.dims.num_users();
  bool feasible = true;
  bool positive = true;
  double identity_err = 0.0;
  params.on_iteration = [&](int, const ReceiverSet&, const WeightSet& w, const BeamformerSet& v) {
    feasible = feasible && v.feasible(config.power);
    for (double x : w) positive = positive && x > 0.0;
    const ReceiverSet u1 = update_receivers(channels, v, config.noise_power);
    const WeightSet w1 = update_weights(channels, v, u1, UtilityModel::sum_rate(), config.noise_power);
    const double p2 = objective_p2_sumrate(channels, v, u1, w1, lambdas, config.noise_power);
    const double p1 =
        objective_p1(channels, v, UtilityModel::sum_rate(), lambdas, config.noise_power).value;
    identity_err = std::max(identity_err, std::abs(p1 + p2 - users));
  };
  const SwmmseResult r = swmmse(channels, config, UtilityModel::sum_rate(), params);
  double drop = 0.0;
  double prev = r.trace.initial_objective;
  for (const auto& rec : r.trace.records) {
    drop = std::max(drop, prev - rec.objective_p1);
    prev = rec.objective_p1;
  }
  const double inner = 1e-6 * std::sqrt(config.power);
  report(drop <= 10.0 * (params.inner.bisection.delta + inner), "objective ascent",
         "largest drop " + format_double(drop) + " over " +
             std::to_string(r.trace.records.size()) + " iterations");
  report(feasible, "per-BS power feasibility", "all iterates");
  report(positive, "weight positivity", "all iterates");
  report(identity_err <= 1e-9, "P1 + P2 = user count", "max error " + format_double(identity_err));
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse multi-BS beamforming simulator"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  bool resume = false;
  int threads = 1;
  bool timing = false;
  std::optional<double> snr_db;

  auto* solve = app.add_subcommand("solve", "Run every configured algorithm on one realization");
  solve->add_option("--config,--scenario", config, "Scenario file")->required();
  solve->add_option("--seed", seed, "Realization seed (default: base_seed)");
  solve->add_option("--snr-db", snr_db, "SNR in dB; sets P = SNR / Q");
  solve->add_option("--out", out, "Output directory");
  solve->add_flag("--timing", timing, "Record wall-clock times");

  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep over the SNR grid and draws");
  sweep->add_option("--config,--scenario", config, "Scenario file")->required();
  sweep->add_option("--seed", seed, "Override base_seed");
  sweep->add_option("--out", out, "Output directory");
  sweep->add_flag("--resume", resume, "Reuse rows already in <out>/metrics.csv");
  sweep->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_flag("--timing", timing, "Record wall-clock times");

  std::optional<std::string> check_config;
  auto* check = app.add_subcommand("check", "Verify solver invariants on a small instance");
  check->add_option("--config,--scenario", check_config, "Scenario file (default: built-in)");
  check->add_option("--seed", seed, "Realization seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*solve) return cmd_solve(config, seed, snr_db, out, timing);
    if (*sweep) return cmd_sweep(config, seed, out, resume, threads, timing);
    if (*check) return cmd_check(check_config, seed);
  } catch (const ConfigError& e) {
    std::cerr << "hetnet-sim: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "hetnet-sim: numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "hetnet-sim: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "hetnet-sim: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
