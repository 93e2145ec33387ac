#include "gtsim/partition.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "gtsim/rng.hpp"
#include "gtsim/io_util.hpp"

namespace gtsim {

void validate_partition(const Partition& p, std::size_t n_samples) {
  std::vector<char> seen(n_samples, 0);
  std::size_t total = 0;
  for (const auto& set : p.assignments) {
    if (set.empty()) throw std::invalid_argument("partition: empty agent set");
    for (std::size_t idx : set) {
      if (idx >= n_samples) throw std::invalid_argument("partition: index out of range");
      if (seen[idx]) throw std::invalid_argument("partition: duplicate index");
      seen[idx] = 1;
      ++total;
    }
  }
  if (total != n_samples)
    throw std::invalid_argument("partition: does not cover all samples");
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = rng.next_below(i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace

Partition partition_iid(const Dataset& ds, int n_agents, std::uint64_t seed) {
  if (n_agents < 1) throw std::invalid_argument("partition_iid: n_agents must be positive");
  if (static_cast<std::size_t>(n_agents) > ds.n_samples)
    throw std::invalid_argument("partition_iid: more agents than samples");
  Rng rng = derive_stream(seed, StreamKind::partition, 0);
  std::vector<std::size_t> idx = shuffled_indices(ds.n_samples, rng);
  Partition p;
  p.assignments.resize(n_agents);
  for (std::size_t i = 0; i < idx.size(); ++i)
    p.assignments[i % n_agents].push_back(idx[i]);
  for (auto& a : p.assignments) std::sort(a.begin(), a.end());
  validate_partition(p, ds.n_samples);
  return p;
}

Partition partition_noniid_shards(const Dataset& ds, int n_agents,
                                  int shards_per_agent, std::uint64_t seed) {
  if (n_agents < 1 || shards_per_agent < 1)
    throw std::invalid_argument("partition_noniid_shards: bad agent/shard counts");
  std::size_t n_shards = static_cast<std::size_t>(n_agents) * shards_per_agent;
  if (ds.n_samples % n_shards != 0)
    throw std::invalid_argument(
        "partition_noniid_shards: n_agents*shards_per_agent must divide n_samples");
  std::size_t shard_size = ds.n_samples / n_shards;

  // Sort by label descending; stable so ties keep dataset order.
  std::vector<std::size_t> order(ds.n_samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ds.labels[a] > ds.labels[b];
  });

  Rng rng = derive_stream(seed, StreamKind::partition, 1);
  std::vector<std::size_t> shard_order = shuffled_indices(n_shards, rng);

  Partition p;
  p.assignments.resize(n_agents);
  for (std::size_t s = 0; s < n_shards; ++s) {
    std::size_t shard = shard_order[s];
    auto& dst = p.assignments[s / shards_per_agent];
    for (std::size_t k = 0; k < shard_size; ++k)
      dst.push_back(order[shard * shard_size + k]);
  }
  for (auto& a : p.assignments) std::sort(a.begin(), a.end());
  validate_partition(p, ds.n_samples);
  return p;
}

void save_partition(const Partition& p, const std::string& path) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_partition: cannot open " + path);
  for (const auto& set : p.assignments) {
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (i) out << ' ';
      out << set[i];
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_partition: write failed for " + path);
}

}  // namespace gtsim
