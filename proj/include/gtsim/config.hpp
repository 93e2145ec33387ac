#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gtsim {

enum class AlgorithmTag { lsgt, gt, dsgd, d2, must, centralized };
enum class PartitionMode { iid, noniid, hybrid };
enum class DataSource { synthetic, mnist };

AlgorithmTag parse_algorithm(const std::string& s);
PartitionMode parse_partition_mode(const std::string& s);
std::string to_string(AlgorithmTag t);
std::string to_string(PartitionMode m);
std::string to_string(DataSource s);

// Full experiment description, loadable from a flat key-value config file
// with section headers (see docs in README). Unknown keys are errors.
struct ExperimentConfig {
  // [experiment]
  AlgorithmTag algorithm = AlgorithmTag::lsgt;
  int rounds = 100;        // T >= 0
  int local_updates = 1;   // E >= 1
  double stepsize = 1e-2;  // gamma
  double alpha = 1e-2;     // must
  double beta = 1e-2;      // must
  std::size_t batch_size = 16;
  std::vector<std::uint64_t> seeds = {1};
  int eval_cadence = 1;
  int threads = 0;  // worker threads for independent trials; 0 = one per core

  // [topology]
  std::string topology_kind = "random";  // random | line | complete | file
  int n_agents = 20;
  double edge_prob = 0.3;
  std::uint64_t graph_seed = 7;
  std::string graph_file;

  // [data]
  DataSource source = DataSource::synthetic;
  PartitionMode partition = PartitionMode::iid;
  std::string model = "nonconvex_logistic";
  int hidden = 30;
  int shards_per_agent = 2;
  int patches = 2;
  // synthetic
  std::size_t samples = 2000;
  std::size_t test_samples = 500;
  std::size_t features = 10;
  int classes = 4;
  double noise = 1.0;
  std::uint64_t data_seed = 12345;
  double nonconvex_lambda = 0.1;
  // hybrid quadratic objective
  std::size_t z_dim = 3;
  std::size_t theta_dim = 2;
  double hybrid_lambda = 0.5;
  // mnist idx paths
  std::string train_images, train_labels, test_images, test_labels;
  std::size_t train_subset = 6000;  // 0 = all
  std::size_t test_subset = 1000;   // 0 = all

  // [output]
  std::string out_path = "run.csv";
  bool per_trial = false;
  std::string checkpoint_prefix;
  int checkpoint_every = 0;
};

// Parse a config file. Throws std::runtime_error naming the offending line
// or key on malformed input, unknown sections/keys, or invalid values.
ExperimentConfig load_config(const std::string& path);

// Parse from an in-memory string (same grammar; used by tests and by the
// echo round-trip).
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin = "<string>");

// Cross-field validation: algorithm/partition compatibility, positivity,
// divisibility preconditions, referenced paths resolvable. Throws
// std::runtime_error naming the failing field.
void validate_config(const ExperimentConfig& cfg);

// Canonical serialization; parsing the echo reproduces the config.
std::string config_echo(const ExperimentConfig& cfg);

}  // namespace gtsim
