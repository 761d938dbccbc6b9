#include "hetnet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hetnet {

SwmmseResult wmmse_full(const ChannelSet& channels, const NetworkConfig& config,
                        const UtilityModel& utility, SwmmseParams params) {
  params.lambda_policy = LambdaPolicy::Fixed;
  params.lambdas.assign(static_cast<std::size_t>(config.dims.K), 0.0);
  return swmmse(channels, config, utility, params);
}

BlockMask FixedAssignment::to_mask(const NetworkDims& dims) const {
  if (static_cast<int>(serving.size()) != dims.num_users()) {
    throw std::invalid_argument("FixedAssignment: one BS per user required");
  }
  BlockMask mask(static_cast<std::size_t>(dims.num_users()),
                 std::vector<bool>(static_cast<std::size_t>(dims.Q), false));
  for (int u = 0; u < dims.num_users(); ++u) {
    const int q = serving[static_cast<std::size_t>(u)];
    if (q < 0 || q >= dims.Q) throw std::invalid_argument("FixedAssignment: BS out of range");
    mask[static_cast<std::size_t>(u)][static_cast<std::size_t>(q)] = true;
  }
  return mask;
}

FixedAssignment nn_assignment(const Topology& topology, const NetworkDims& dims) {
  FixedAssignment out;
  out.serving.resize(static_cast<std::size_t>(dims.num_users()));
  for (int u = 0; u < dims.num_users(); ++u) {
    const int k = dims.cell_of_user(u);
    const auto& up = topology.user_positions[static_cast<std::size_t>(u)];
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int q = 0; q < dims.Q; ++q) {
      const double dist =
          (topology.bs_positions[static_cast<std::size_t>(dims.bs_index(k, q))] - up).norm();
      if (dist < best_d) {
        best_d = dist;
        best = q;
      }
    }
    out.serving[static_cast<std::size_t>(u)] = best;
  }
  return out;
}

SwmmseResult wmmse_nn(const ChannelSet& channels, const NetworkConfig& config,
                      const UtilityModel& utility, SwmmseParams params,
                      const FixedAssignment& assignment) {
  params.lambda_policy = LambdaPolicy::Fixed;
  params.lambdas.assign(static_cast<std::size_t>(config.dims.K), 0.0);
  const BlockMask mask = assignment.to_mask(config.dims);
  return swmmse(channels, config, utility, params, &mask);
}

ZfClustering zf_greedy_clusters(const Topology& topology, const ChannelSet& channels,
                                const ZfConfig& zf) {
  const NetworkDims& d = channels.dims();
  if (zf.cluster_size < 1 || zf.cluster_size > d.Q) {
    throw std::invalid_argument("zf_greedy_clusters: cluster_size must be in [1, Q]");
  }
  ZfClustering out;
  out.clusters.resize(static_cast<std::size_t>(d.K));
  out.user_cluster.assign(static_cast<std::size_t>(d.num_users()), 0);
  for (int k = 0; k < d.K; ++k) {
    auto pos = [&](int q) -> const Eigen::Vector2d& {
      return topology.bs_positions[static_cast<std::size_t>(d.bs_index(k, q))];
    };
    std::vector<int> unclustered(static_cast<std::size_t>(d.Q));
    std::iota(unclustered.begin(), unclustered.end(), 0);
    auto& cell_clusters = out.clusters[static_cast<std::size_t>(k)];
    while (!unclustered.empty()) {
      const int seed = unclustered.front();
      std::vector<int> rest(unclustered.begin() + 1, unclustered.end());
      std::stable_sort(rest.begin(), rest.end(), [&](int a, int b) {
        return (pos(a) - pos(seed)).norm() < (pos(b) - pos(seed)).norm();
      });
      std::vector<int> cluster{seed};
      for (int q : rest) {
        if (static_cast<int>(cluster.size()) >= zf.cluster_size) break;
        cluster.push_back(q);
      }
      std::erase_if(unclustered, [&](int q) {
        return std::find(cluster.begin(), cluster.end(), q) != cluster.end();
      });
      cell_clusters.push_back(std::move(cluster));
    }
    for (int i = 0; i < d.I; ++i) {
      const int u = d.user_index(k, i);
      int best = 0;
      double best_norm = -1.0;
      for (std::size_t c = 0; c < cell_clusters.size(); ++c) {
        double n2 = 0.0;
        for (int q : cell_clusters[c]) n2 += channels.link(u, k, q).squaredNorm();
        if (n2 > best_norm) {
          best_norm = n2;
          best = static_cast<int>(c);
        }
      }
      out.user_cluster[static_cast<std::size_t>(u)] = best;
    }
  }
  return out;
}

namespace {

Eigen::MatrixXcd cluster_channel(const ChannelSet& channels, int user, int cell,
                                 const std::vector<int>& bss) {
  const int m = channels.dims().M;
  Eigen::MatrixXcd g(channels.dims().N, m * static_cast<int>(bss.size()));
  for (std::size_t b = 0; b < bss.size(); ++b) {
    g.middleCols(static_cast<Eigen::Index>(b) * m, m) = channels.link(user, cell, bss[b]);
  }
  return g;
}

}  // namespace

ZfResult zf_beamformers(const ZfClustering& clustering, const ChannelSet& channels,
                        const NetworkConfig& config) {
  const NetworkDims& d = channels.dims();
  const int m = d.M;
  ZfResult out{BeamformerSet(d), {}};
  for (int k = 0; k < d.K; ++k) {
    const auto& cell_clusters = clustering.clusters[static_cast<std::size_t>(k)];
    for (std::size_t c = 0; c < cell_clusters.size(); ++c) {
      const std::vector<int>& bss = cell_clusters[c];
      const int antennas = m * static_cast<int>(bss.size());

      std::vector<int> users;
      std::vector<Eigen::MatrixXcd> g;
      for (int i = 0; i < d.I; ++i) {
        const int u = d.user_index(k, i);
        if (clustering.user_cluster[static_cast<std::size_t>(u)] == static_cast<int>(c)) {
          users.push_back(u);
          g.push_back(cluster_channel(channels, u, k, bss));
        }
      }
      // Drop the weakest direct channels until N * |users| <= antennas.
      while (!users.empty() && d.N * static_cast<int>(users.size()) > antennas) {
        std::size_t weakest = 0;
        for (std::size_t j = 1; j < users.size(); ++j) {
          if (g[j].squaredNorm() < g[weakest].squaredNorm()) weakest = j;
        }
        out.dropped.push_back(users[weakest]);
        users.erase(users.begin() + static_cast<std::ptrdiff_t>(weakest));
        g.erase(g.begin() + static_cast<std::ptrdiff_t>(weakest));
      }
      if (users.empty()) continue;

      std::vector<Eigen::VectorXcd> dirs(users.size());
      for (std::size_t j = 0; j < users.size(); ++j) {
        Eigen::MatrixXcd null_basis;
        if (users.size() == 1) {
          null_basis = Eigen::MatrixXcd::Identity(antennas, antennas);
        } else {
          Eigen::MatrixXcd others(d.N * static_cast<int>(users.size() - 1), antennas);
          Eigen::Index row = 0;
          for (std::size_t o = 0; o < users.size(); ++o) {
            if (o == j) continue;
            others.middleRows(row, d.N) = g[o];
            row += d.N;
          }
          Eigen::JacobiSVD<Eigen::MatrixXcd> svd(others, Eigen::ComputeFullV);
          const auto& s = svd.singularValues();
          const double cutoff = 1e-12 * (s.size() ? s(0) : 0.0);
          Eigen::Index rank = 0;
          for (Eigen::Index r = 0; r < s.size(); ++r) rank += s(r) > cutoff ? 1 : 0;
          null_basis = svd.matrixV().rightCols(antennas - rank);
        }
        if (null_basis.cols() == 0) continue;
        const Eigen::MatrixXcd projected = g[j] * null_basis;
        Eigen::JacobiSVD<Eigen::MatrixXcd> psvd(projected, Eigen::ComputeFullV);
        if (psvd.singularValues().size() == 0 || psvd.singularValues()(0) <= 0.0) continue;
        dirs[j] = null_basis * psvd.matrixV().col(0);
      }

      // Equal power per stream, scaled so the most loaded BS meets P.
      double p_stream = std::numeric_limits<double>::infinity();
      for (std::size_t b = 0; b < bss.size(); ++b) {
        double load = 0.0;
        for (const auto& dir : dirs) {
          if (dir.size()) load += dir.segment(static_cast<Eigen::Index>(b) * m, m).squaredNorm();
        }
        if (load > 0.0) p_stream = std::min(p_stream, config.power / load);
      }
      if (!std::isfinite(p_stream)) continue;
      const double amp = std::sqrt(p_stream);
      for (std::size_t j = 0; j < users.size(); ++j) {
        if (!dirs[j].size()) continue;
        for (std::size_t b = 0; b < bss.size(); ++b) {
          out.v.block(users[j], bss[b]) =
              amp * dirs[j].segment(static_cast<Eigen::Index>(b) * m, m);
        }
      }
    }
  }
  return out;
}

}  // namespace hetnet
