#pragma once

#include <vector>

#include "hetnet/network.hpp"
#include "hetnet/signal.hpp"
#include "hetnet/swmmse.hpp"

namespace hetnet {

/// Full intra-cell coordination: the S-WMMSE loop with every lambda at 0.
SwmmseResult wmmse_full(const ChannelSet& channels, const NetworkConfig& config,
                        const UtilityModel& utility, SwmmseParams params);

struct FixedAssignment {
  std::vector<int> serving;  // per user, BS index within the user's cell

  BlockMask to_mask(const NetworkDims& dims) const;
};

/// Nearest own-cell BS for every user; ties go to the lowest BS index.
FixedAssignment nn_assignment(const Topology& topology, const NetworkDims& dims);

/// WMMSE (lambda = 0) with every block outside the assignment pinned to 0.
SwmmseResult wmmse_nn(const ChannelSet& channels, const NetworkConfig& config,
                      const UtilityModel& utility, SwmmseParams params,
                      const FixedAssignment& assignment);

struct ZfConfig {
  int cluster_size = 1;
};

struct ZfClustering {
  /// Per cell, the clusters as lists of BS indices (seed BS first).
  std::vector<std::vector<std::vector<int>>> clusters;
  /// Per user, index into clusters[cell of user].
  std::vector<int> user_cluster;
};

/// Greedy fixed-size clustering: seed each cluster with the lowest-index
/// unclustered BS and add its nearest unclustered BSs; each user joins the
/// cluster with the largest concatenated direct-channel Frobenius norm.
ZfClustering zf_greedy_clusters(const Topology& topology, const ChannelSet& channels,
                                const ZfConfig& zf);

struct ZfResult {
  BeamformerSet v;
  std::vector<int> dropped;  // flat user indices, in drop order
};

/// Block-diagonalization ZF inside every cluster with equal per-stream power,
/// then one scale per cluster so the most loaded BS meets its budget.
ZfResult zf_beamformers(const ZfClustering& clustering, const ChannelSet& channels,
                        const NetworkConfig& config);

}  // namespace hetnet
