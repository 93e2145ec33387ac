#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gtsim/dataset.hpp"

namespace gtsim {

// Assignment of dataset sample indices to agents: pairwise disjoint,
// jointly covering, every agent non-empty.
struct Partition {
  std::vector<std::vector<std::size_t>> assignments;

  int n_agents() const { return static_cast<int>(assignments.size()); }
  const std::vector<std::size_t>& agent(int n) const { return assignments[n]; }
};

// Throws std::invalid_argument when the disjoint-cover or non-emptiness
// invariants fail against a dataset of n_samples samples.
void validate_partition(const Partition& p, std::size_t n_samples);

// Shuffle then deal round-robin: agents receive floor(S/N) or ceil(S/N)
// samples. Throws if n_agents > n_samples.
Partition partition_iid(const Dataset& ds, int n_agents, std::uint64_t seed);

// Pathological label-skew split: sort samples by label descending, cut
// into n_agents*shards_per_agent equal shards, assign shards_per_agent
// randomly chosen shards to each agent. Requires the shard count to
// divide n_samples.
Partition partition_noniid_shards(const Dataset& ds, int n_agents,
                                  int shards_per_agent, std::uint64_t seed);

// One line per agent, space-separated sample indices.
void save_partition(const Partition& p, const std::string& path);

}  // namespace gtsim
