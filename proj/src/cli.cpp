#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gtsim/harness.hpp"
#include "gtsim/partition.hpp"
#include "gtsim/topology.hpp"

namespace gtsim {

namespace {

// "0" -> "0.0" so spectral output always reads as a real number.
std::string format_lambda(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  std::string s(buf);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
    s += ".0";
  return s;
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

void print_run_summary(const RunOutput& out, const std::string& csv_path) {
  const MetricsRecord& last = out.averaged.back();
  std::cout << "wrote " << csv_path << " (" << out.averaged.size()
            << " records, " << out.trials.size() << " trial(s), "
            << out.wall_seconds << " s)\n";
  std::cout << "final: round " << last.round << " loss " << last.train_loss
            << " acc " << last.test_accuracy << " stat_gap "
            << last.stationarity_gap << "\n";
  for (const auto& tc : out.accuracy_thresholds) {
    std::cout << "rounds to acc " << tc.threshold << ": ";
    if (tc.reached)
      std::cout << tc.round << "\n";
    else
      std::cout << "not reached\n";
  }
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"decentralized gradient-tracking experiment runner"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_override, graph_path, axis_name, values_arg;
  std::uint64_t seed_override = 0;
  bool have_seed = false, quiet = false, per_trial = false;

  app.add_flag("--quiet", quiet, "suppress progress output");

  CLI::App* run_cmd = app.add_subcommand("run", "run one experiment from a config file");
  run_cmd->add_option("config", config_path, "config file")->required();
  run_cmd->add_option("--seed", seed_override, "override the seed list with one seed")
      ->each([&](const std::string&) { have_seed = true; });
  run_cmd->add_option("--out", out_override, "override output CSV path");
  run_cmd->add_flag("--per-trial", per_trial, "also write each trial's series");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a one-axis sweep");
  sweep_cmd->add_option("config", config_path, "base config file")->required();
  sweep_cmd->add_option("--axis", axis_name, "axis: E, gamma, topology, partition")
      ->required();
  sweep_cmd->add_option("--values", values_arg, "comma-separated axis values")
      ->required();
  sweep_cmd->add_option("--seed", seed_override, "override the seed list with one seed")
      ->each([&](const std::string&) { have_seed = true; });
  sweep_cmd->add_option("--out", out_override, "output base path");

  CLI::App* validate_cmd =
      app.add_subcommand("validate", "validate a config file and exit");
  validate_cmd->add_option("config", config_path, "config file")->required();

  CLI::App* spectral_cmd = app.add_subcommand(
      "spectral", "print lambda_w of the max-degree mixing matrix of a graph file");
  spectral_cmd->add_option("graph", graph_path, "edge-list graph file")->required();

  CLI::App* pdump_cmd = app.add_subcommand(
      "partition-dump", "write the per-agent sample assignment of a config");
  pdump_cmd->add_option("config", config_path, "config file")->required();
  pdump_cmd->add_option("--seed", seed_override, "override the seed list with one seed")
      ->each([&](const std::string&) { have_seed = true; });
  pdump_cmd->add_option("--out", out_override, "output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  }

  try {
    if (*run_cmd) {
      ExperimentConfig cfg = load_config(config_path);
      if (have_seed) cfg.seeds = {seed_override};
      if (!out_override.empty()) cfg.out_path = out_override;
      if (per_trial) cfg.per_trial = true;
      RunOutput out = run_experiment(cfg);
      write_csv(out, cfg.out_path);
      write_meta(out, cfg.out_path);
      if (cfg.per_trial) write_per_trial_csv(out, cfg.out_path);
      if (!quiet) print_run_summary(out, cfg.out_path);
      if (out.diverged) {
        std::cerr << "run aborted: " << out.divergence_message << "\n";
        return 2;
      }
      return 0;
    }
    if (*sweep_cmd) {
      ExperimentConfig cfg = load_config(config_path);
      if (have_seed) cfg.seeds = {seed_override};
      std::string base = !out_override.empty() ? out_override : cfg.out_path;
      // strip a trailing .csv for cleaner derived names
      if (base.size() > 4 && base.substr(base.size() - 4) == ".csv")
        base = base.substr(0, base.size() - 4);
      auto entries =
          sweep(cfg, parse_sweep_axis(axis_name), split_csv_list(values_arg), base, quiet);
      if (!quiet)
        std::cout << "wrote " << entries.size() << " sweep points and "
                  << base + "_summary.csv\n";
      return 0;
    }
    if (*validate_cmd) {
      ExperimentConfig cfg = load_config(config_path);
      validate_config(cfg);
      std::cout << "OK\n";
      return 0;
    }
    if (*spectral_cmd) {
      Graph g = load_graph(graph_path);
      MixingMatrix w = max_degree_mixing(g);
      std::cout << "lambda_w " << format_lambda(w.lambda_w) << "\n";
      return 0;
    }
    if (*pdump_cmd) {
      ExperimentConfig cfg = load_config(config_path);
      validate_config(cfg);
      if (have_seed) cfg.seeds = {seed_override};
      Dataset train;
      if (cfg.source == DataSource::synthetic) {
        train = make_blobs(cfg.samples + cfg.test_samples, cfg.features,
                           cfg.classes, cfg.noise, cfg.data_seed);
        train = head_subset(train, cfg.samples);
      } else {
        train = load_idx(cfg.train_images, cfg.train_labels);
        if (cfg.train_subset > 0) train = head_subset(train, cfg.train_subset);
      }
      Partition part;
      switch (cfg.partition) {
        case PartitionMode::iid:
          part = partition_iid(train, cfg.n_agents, cfg.seeds[0]);
          break;
        case PartitionMode::noniid:
          part = partition_noniid_shards(train, cfg.n_agents,
                                         cfg.shards_per_agent, cfg.seeds[0]);
          break;
        case PartitionMode::hybrid: {
          // Agents hold overlapping sample sets (one patch each), so the
          // dump lists every sample an agent owns a patch of.
          HybridAssignment a = partition_hybrid(train.n_samples, cfg.n_agents,
                                                cfg.patches, cfg.seeds[0]);
          part.assignments = a.local_samples;
          break;
        }
      }
      std::string path = !out_override.empty() ? out_override : cfg.out_path + ".partition";
      save_partition(part, path);
      if (!quiet) std::cout << "wrote " << path << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace gtsim
