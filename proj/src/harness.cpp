#include "hetnet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "hetnet/csv.hpp"
#include "hetnet/errors.hpp"
#include "hetnet/rng.hpp"

namespace hetnet {

std::string AlgorithmSpec::name() const {
  switch (kind) {
    case Kind::SwmmseFixed: return "swmmse_fixed";
    case Kind::SwmmseAdaptive: return "swmmse_adaptive";
    case Kind::WmmseFull: return "wmmse_full";
    case Kind::WmmseNn: return "wmmse_nn";
    case Kind::Zf: return "zf(" + std::to_string(cluster_size) + ")";
  }
  return "?";
}

AlgorithmSpec AlgorithmSpec::parse(const std::string& raw) {
  const std::string text = trim(raw);
  AlgorithmSpec a;
  if (text == "swmmse_fixed") {
    a.kind = Kind::SwmmseFixed;
  } else if (text == "swmmse_adaptive") {
    a.kind = Kind::SwmmseAdaptive;
  } else if (text == "wmmse_full") {
    a.kind = Kind::WmmseFull;
  } else if (text == "wmmse_nn") {
    a.kind = Kind::WmmseNn;
  } else if (text.rfind("zf(", 0) == 0 && text.back() == ')') {
    a.kind = Kind::Zf;
    try {
      std::size_t used = 0;
      const std::string inner = text.substr(3, text.size() - 4);
      a.cluster_size = std::stoi(inner, &used);
      if (used != inner.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("bad zf cluster size in '" + text + "'");
    }
    if (a.cluster_size < 1) throw ConfigError("zf cluster size must be >= 1");
  } else {
    throw ConfigError("unknown algorithm '" + text + "'");
  }
  return a;
}

SwmmseParams SolverSettings::params(std::uint64_t seed, int num_cells) const {
  SwmmseParams p;
  p.lambda_policy = fixed_policy;
  if (fixed_policy == LambdaPolicy::Fixed) {
    p.lambdas.assign(static_cast<std::size_t>(num_cells), lambda);
  }
  p.outer_tol = outer_tol;
  p.max_outer_iters = max_outer_iters;
  p.inner.inner_tol = inner_tol;
  p.inner.max_passes = inner_max_passes;
  p.inner.bisection.delta = bisection_tol;
  p.inner.bisection.mu = bisection_tol;
  p.seed = substream_seed(seed, "init", {});
  return p;
}

UtilityModel SolverSettings::utility_model() const {
  switch (utility) {
    case UtilityModel::Kind::ProportionalFair:
      return UtilityModel::proportional_fair();
    case UtilityModel::Kind::WeightedSumRate:
    case UtilityModel::Kind::SumRate:
      break;
  }
  return UtilityModel::sum_rate();
}

void Scenario::validate() const {
  try {
    network.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (num_draws < 1) throw ConfigError("num_draws must be >= 1");
  if (algorithms.empty()) throw ConfigError("algorithm list is empty");
  for (const auto& a : algorithms) {
    if (a.kind == AlgorithmSpec::Kind::Zf && a.cluster_size > network.dims.Q) {
      throw ConfigError("zf cluster size exceeds Q");
    }
  }
  if (power_from_snr && snr_grid_db.empty()) throw ConfigError("snr grid is empty");
  if (!(solver.outer_tol > 0.0)) throw ConfigError("outer_tol must be > 0");
  if (solver.max_outer_iters < 1) throw ConfigError("max_outer_iters must be >= 1");
  if (solver.inner_max_passes < 1) throw ConfigError("inner_max_passes must be >= 1");
  if (!(solver.bisection_tol > 0.0)) throw ConfigError("bisection_tol must be > 0");
  if (!(solver.threshold_rel >= 0.0)) throw ConfigError("threshold_rel must be >= 0");
  if (solver.fixed_policy == LambdaPolicy::Fixed && !(solver.lambda >= 0.0)) {
    throw ConfigError("lambda must be >= 0");
  }
}

namespace {

int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + value + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(value, &used);
    if (used != value.size() || value.front() == '-') throw std::invalid_argument("bad");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + value + "'");
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    return parse_double(value);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + value + "'");
  }
}

}  // namespace

Scenario parse_scenario(std::istream& in) {
  Scenario s;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section != "network" && section != "solver" && section != "experiment") {
        throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (section.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": key outside a section");
    }
    const std::string where = section + "." + key;
    auto& net = s.network;
    if (section == "network") {
      if (key == "K") net.dims.K = to_int(where, value);
      else if (key == "Q") net.dims.Q = to_int(where, value);
      else if (key == "I") net.dims.I = to_int(where, value);
      else if (key == "M") net.dims.M = to_int(where, value);
      else if (key == "N") net.dims.N = to_int(where, value);
      else if (key == "power") net.power = to_double(where, value);
      else if (key == "noise_power") net.noise_power = to_double(where, value);
      else if (key == "cell_spacing_m") net.cell_spacing_m = to_double(where, value);
      else if (key == "min_link_distance_m") net.min_link_distance_m = to_double(where, value);
      else if (key == "shadowing_sigma_db") net.shadowing_sigma_db = to_double(where, value);
      else throw ConfigError("unknown key '" + where + "'");
    } else if (section == "solver") {
      auto& sv = s.solver;
      if (key == "utility") {
        if (value == "sum_rate") sv.utility = UtilityModel::Kind::SumRate;
        else if (value == "proportional_fair") sv.utility = UtilityModel::Kind::ProportionalFair;
        else throw ConfigError("unknown utility '" + value + "'");
      } else if (key == "lambda_policy") {
        if (value == "formula") sv.fixed_policy = LambdaPolicy::FormulaFixed;
        else if (value == "fixed") sv.fixed_policy = LambdaPolicy::Fixed;
        else throw ConfigError("unknown lambda_policy '" + value + "'");
      } else if (key == "lambda") {
        sv.lambda = to_double(where, value);
      } else if (key == "outer_tol") {
        sv.outer_tol = to_double(where, value);
      } else if (key == "max_outer_iters") {
        sv.max_outer_iters = to_int(where, value);
      } else if (key == "inner_tol") {
        sv.inner_tol = to_double(where, value);
      } else if (key == "inner_max_passes") {
        sv.inner_max_passes = to_int(where, value);
      } else if (key == "bisection_tol") {
        sv.bisection_tol = to_double(where, value);
      } else if (key == "threshold_rel") {
        sv.threshold_rel = to_double(where, value);
      } else {
        throw ConfigError("unknown key '" + where + "'");
      }
    } else {
      if (key == "algorithms") {
        s.algorithms.clear();
        for (const auto& part : split(value, ',')) {
          if (!trim(part).empty()) s.algorithms.push_back(AlgorithmSpec::parse(part));
        }
      } else if (key == "snr_db") {
        s.snr_grid_db.clear();
        for (const auto& part : split(value, ',')) {
          if (!trim(part).empty()) s.snr_grid_db.push_back(to_double(where, trim(part)));
        }
        s.power_from_snr = true;
      } else if (key == "num_draws") {
        s.num_draws = to_int(where, value);
      } else if (key == "base_seed") {
        s.base_seed = to_u64(where, value);
      } else {
        throw ConfigError("unknown key '" + where + "'");
      }
    }
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_scenario(in);
}

std::uint64_t draw_seed(std::uint64_t base_seed, int draw) {
  return substream_seed(base_seed, "draw", {draw});
}

NetworkConfig draw_config(const Scenario& scenario, double snr_db, std::uint64_t seed) {
  NetworkConfig c = scenario.network;
  c.power = std::pow(10.0, snr_db / 10.0) / static_cast<double>(c.dims.Q);
  c.seed = seed;
  return c;
}

std::string metrics_header() {
  return "seed,snr_db,algorithm,lambda_used,sum_rate_nats,sum_rate_bits,per_user_rates,"
         "avg_serving_bs,per_bs_power_rel,outer_iterations,converged,wall_ms,channel_hash";
}

std::string format_metrics_row(const MetricsRow& r) {
  std::string rates;
  for (std::size_t i = 0; i < r.per_user_rates.size(); ++i) {
    if (i) rates += ';';
    rates += format_double(r.per_user_rates[i]);
  }
  std::ostringstream os;
  os << r.seed << ',' << format_double(r.snr_db) << ',' << r.algorithm << ','
     << format_double(r.lambda_used) << ',' << format_double(r.sum_rate_nats) << ','
     << format_double(r.sum_rate_bits) << ',' << rates << ','
     << format_double(r.avg_serving_bs) << ',' << format_double(r.per_bs_power_rel) << ','
     << r.outer_iterations << ',' << (r.converged ? 1 : 0) << ','
     << format_double(r.wall_ms) << ',' << r.channel_hash;
  return os.str();
}

MetricsRow parse_metrics_row(const std::string& line) {
  const auto f = split(trim(line), ',');
  if (f.size() != 13) throw ConfigError("metrics row: expected 13 fields, got " + std::to_string(f.size()));
  MetricsRow r;
  r.seed = to_u64("seed", f[0]);
  r.snr_db = to_double("snr_db", f[1]);
  r.algorithm = f[2];
  r.lambda_used = to_double("lambda_used", f[3]);
  r.sum_rate_nats = to_double("sum_rate_nats", f[4]);
  r.sum_rate_bits = to_double("sum_rate_bits", f[5]);
  if (!f[6].empty()) {
    for (const auto& x : split(f[6], ';')) r.per_user_rates.push_back(to_double("per_user_rates", x));
  }
  r.avg_serving_bs = to_double("avg_serving_bs", f[7]);
  r.per_bs_power_rel = to_double("per_bs_power_rel", f[8]);
  r.outer_iterations = to_int("outer_iterations", f[9]);
  r.converged = f[10] == "1";
  r.wall_ms = to_double("wall_ms", f[11]);
  r.channel_hash = to_u64("channel_hash", f[12]);
  return r;
}

MetricsRow compute_metrics(const ChannelSet& channels, const BeamformerSet& v,
                           const NetworkConfig& config,
                           const BeamformerSet* reference, double threshold_rel) {
  const NetworkDims& d = config.dims;
  MetricsRow row;
  row.per_user_rates.reserve(static_cast<std::size_t>(d.num_users()));
  for (int u = 0; u < d.num_users(); ++u) {
    const double r = user_rate(channels, v, config.noise_power, u);
    row.per_user_rates.push_back(r);
    row.sum_rate_nats += r;
  }
  row.sum_rate_bits = row.sum_rate_nats / std::numbers::ln2;
  row.avg_serving_bs = extract_clusters(v, config.power, threshold_rel).average_size();
  auto total_power = [&](const BeamformerSet& b) {
    double p = 0.0;
    for (int k = 0; k < d.K; ++k) {
      for (int q = 0; q < d.Q; ++q) p += b.bs_power(k, q);
    }
    return p;
  };
  const double own = total_power(v);
  if (reference) {
    const double ref = total_power(*reference);
    row.per_bs_power_rel = ref > 0.0 ? own / ref : 0.0;
  } else {
    row.per_bs_power_rel = own / static_cast<double>(d.num_bs());
  }
  row.channel_hash = channels.hash();
  return row;
}

RunOutput run_algorithm(const AlgorithmSpec& algo, const Scenario& scenario,
                        const NetworkConfig& config, const Topology& topology,
                        const ChannelSet& channels, const BeamformerSet* reference) {
  const auto t0 = std::chrono::steady_clock::now();
  const UtilityModel utility = scenario.solver.utility_model();
  SwmmseParams params = scenario.solver.params(config.seed, config.dims.K);
  RunOutput out;
  std::vector<double> lambdas(static_cast<std::size_t>(config.dims.K), 0.0);
  switch (algo.kind) {
    case AlgorithmSpec::Kind::SwmmseFixed:
    case AlgorithmSpec::Kind::SwmmseAdaptive: {
      if (algo.kind == AlgorithmSpec::Kind::SwmmseAdaptive) {
        params.lambda_policy = LambdaPolicy::Adaptive;
      }
      SwmmseResult r = swmmse(channels, config, utility, params);
      out.v = std::move(r.v);
      out.trace = std::move(r.trace);
      lambdas = r.lambdas;
      break;
    }
    case AlgorithmSpec::Kind::WmmseFull: {
      SwmmseResult r = wmmse_full(channels, config, utility, params);
      out.v = std::move(r.v);
      out.trace = std::move(r.trace);
      break;
    }
    case AlgorithmSpec::Kind::WmmseNn: {
      SwmmseResult r = wmmse_nn(channels, config, utility, params,
                                nn_assignment(topology, config.dims));
      out.v = std::move(r.v);
      out.trace = std::move(r.trace);
      break;
    }
    case AlgorithmSpec::Kind::Zf: {
      const ZfClustering clustering =
          zf_greedy_clusters(topology, channels, ZfConfig{algo.cluster_size});
      out.v = zf_beamformers(clustering, channels, config).v;
      break;
    }
  }
  out.row = compute_metrics(channels, out.v, config, reference, scenario.solver.threshold_rel);
  out.row.algorithm = algo.name();
  out.row.seed = config.seed;
  double lsum = 0.0;
  for (double l : lambdas) lsum += l;
  out.row.lambda_used = lsum / static_cast<double>(lambdas.size());
  if (out.trace) {
    out.row.outer_iterations = static_cast<int>(out.trace->records.size());
    out.row.converged = out.trace->converged;
  }
  out.row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::vector<RunOutput> run_draw(const Scenario& scenario, double snr_db, std::uint64_t seed) {
  const NetworkConfig config = draw_config(scenario, snr_db, seed);
  const Topology topology = generate_topology(config);
  const ChannelSet channels = generate_channels(topology, config);

  std::vector<RunOutput> out(scenario.algorithms.size());
  std::optional<std::size_t> full_index;
  for (std::size_t a = 0; a < scenario.algorithms.size(); ++a) {
    if (scenario.algorithms[a].kind == AlgorithmSpec::Kind::WmmseFull) {
      full_index = a;
      break;
    }
  }
  const BeamformerSet* reference = nullptr;
  if (full_index) {
    out[*full_index] = run_algorithm(scenario.algorithms[*full_index], scenario, config,
                                     topology, channels, nullptr);
    reference = &out[*full_index].v;
    // The reference run is its own baseline.
    out[*full_index].row.per_bs_power_rel =
        compute_metrics(channels, *reference, config, reference, 0.0).per_bs_power_rel;
  }
  for (std::size_t a = 0; a < scenario.algorithms.size(); ++a) {
    if (full_index && a == *full_index) continue;
    out[a] = run_algorithm(scenario.algorithms[a], scenario, config, topology, channels,
                           reference);
  }
  for (auto& o : out) o.row.snr_db = snr_db;
  return out;
}

namespace {

std::string row_key(const std::string& algorithm, double snr_db, std::uint64_t seed) {
  return algorithm + "|" + format_double(snr_db) + "|" + std::to_string(seed);
}

}  // namespace

std::vector<MetricsRow> run_experiment(const Scenario& scenario,
                                       const ExperimentOptions& options) {
  scenario.validate();
  if (!scenario.power_from_snr) throw ConfigError("run_experiment needs an snr_db grid");
  std::map<std::string, MetricsRow> done;
  for (const auto& r : options.completed) done[row_key(r.algorithm, r.snr_db, r.seed)] = r;

  struct Job {
    double snr_db;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double snr : scenario.snr_grid_db) {
    for (int draw = 0; draw < scenario.num_draws; ++draw) {
      jobs.push_back({snr, draw_seed(scenario.base_seed, draw)});
    }
  }

  const std::size_t n_algo = scenario.algorithms.size();
  std::vector<std::optional<std::vector<MetricsRow>>> results(jobs.size());
  std::vector<std::exception_ptr> failures(jobs.size());
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};

  auto complete_job = [&](std::size_t j) {
    const Job& job = jobs[j];
    std::vector<MetricsRow> rows(n_algo);
    bool all_done = true;
    for (std::size_t a = 0; a < n_algo; ++a) {
      auto it = done.find(row_key(scenario.algorithms[a].name(), job.snr_db, job.seed));
      if (it == done.end()) {
        all_done = false;
      } else {
        rows[a] = it->second;
      }
    }
    if (!all_done) {
      std::vector<RunOutput> fresh = run_draw(scenario, job.snr_db, job.seed);
      for (std::size_t a = 0; a < n_algo; ++a) {
        auto it = done.find(row_key(scenario.algorithms[a].name(), job.snr_db, job.seed));
        if (it != done.end()) continue;
        rows[a] = std::move(fresh[a].row);
        if (!options.record_timing) rows[a].wall_ms = 0.0;
      }
    }
    return rows;
  };

  auto worker = [&]() {
    while (true) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      std::vector<MetricsRow> rows;
      std::exception_ptr failure;
      try {
        rows = complete_job(j);
      } catch (...) {
        failure = std::current_exception();
      }
      {
        std::lock_guard<std::mutex> lock(mu);
        failures[j] = failure;
        results[j] = std::move(rows);
      }
      cv.notify_all();
    }
  };

  const int threads = std::max(1, options.threads);
  std::vector<std::thread> pool;
  if (threads > 1) {
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<MetricsRow> out;
  out.reserve(jobs.size() * n_algo);
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    std::vector<MetricsRow> rows;
    if (threads > 1) {
      std::unique_lock<std::mutex> lock(mu);
      cv.wait(lock, [&] { return results[j].has_value(); });
      if (failures[j]) {
        lock.unlock();
        next.store(jobs.size());
        for (auto& t : pool) t.join();
        std::rethrow_exception(failures[j]);
      }
      rows = std::move(*results[j]);
    } else {
      rows = complete_job(j);
    }
    for (auto& r : rows) {
      if (options.on_row) options.on_row(r);
      out.push_back(std::move(r));
    }
  }
  for (auto& t : pool) t.join();
  return out;
}

void write_trace_csv(std::ostream& out, const SwmmseTrace& trace, bool record_timing) {
  out << "iter,objective_p1_nats,sum_rate_nats,penalty,active_blocks_total,wall_ms\n";
  for (const auto& r : trace.records) {
    out << r.iter << ',' << format_double(r.objective_p1) << ',' << format_double(r.sum_rate)
        << ',' << format_double(r.penalty) << ',' << r.active_blocks_total << ','
        << format_double(record_timing ? r.wall_ms : 0.0) << '\n';
  }
}

}  // namespace hetnet
