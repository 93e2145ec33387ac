#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gtsim/config.hpp"
#include "gtsim/metrics.hpp"

namespace gtsim {

struct TrialSeries {
  std::uint64_t seed = 0;
  std::vector<MetricsRecord> records;
};

struct ThresholdCrossing {
  double threshold = 0.0;
  bool reached = false;
  int round = -1;  // first recorded round where the trial-averaged accuracy crosses
};

struct RunOutput {
  ExperimentConfig config;  // echoed configuration, sufficient to re-run
  std::vector<TrialSeries> trials;
  std::vector<MetricsRecord> averaged;  // pointwise mean across trials
  std::vector<ThresholdCrossing> accuracy_thresholds;  // 0.85 / 0.90 / 0.95
  bool is_must = false;
  bool diverged = false;
  std::string divergence_message;
  double wall_seconds = 0.0;
};

// Execute the configured experiment: per seed, initialize and run T rounds,
// recording metrics at the evaluation cadence (round 0 always, final round
// always); then average the per-trial series pointwise. Deterministic given
// (config, seeds). A divergence abort is reported in the output rather than
// thrown; everything recorded before the abort is kept.
RunOutput run_experiment(const ExperimentConfig& cfg);

// First recorded rounds at which a trial-averaged accuracy series crosses
// each threshold.
std::vector<ThresholdCrossing> rounds_to_thresholds(
    const std::vector<MetricsRecord>& averaged,
    const std::vector<double>& thresholds);

// CSV schema (header is bit-exact):
//   round,comm_messages,train_loss,test_acc,stat_gap,phi_y,phi_v
// with ,phi_theta,phi_x,phi_z,phi_u appended for coupled-variable runs.
// Floating values are printed with 17 significant digits, LF endings.
void write_csv(const RunOutput& out, const std::string& path);

// Per-trial series at path with suffix ".trial<k>.csv".
void write_per_trial_csv(const RunOutput& out, const std::string& base_path);

// Deterministic sidecar (config echo + threshold summary), written next to
// the CSV as "<path>.meta".
void write_meta(const RunOutput& out, const std::string& csv_path);

std::vector<MetricsRecord> parse_csv(const std::string& path, bool* is_must = nullptr);

enum class SweepAxis { local_updates, stepsize, topology, partition };

SweepAxis parse_sweep_axis(const std::string& s);

struct SweepEntry {
  std::string value;
  double lambda_w = 0.0;
  RunOutput output;
};

// One run per axis value; every derived config is validated before any run
// starts. A combined comparison table is written to "<out>_summary.csv".
std::vector<SweepEntry> sweep(const ExperimentConfig& base, SweepAxis axis,
                              const std::vector<std::string>& values,
                              const std::string& out_base, bool quiet);

// CLI entry point (exposed for tests). Exit codes: 0 success, 1 usage
// error, 2 runtime failure.
int cli_main(int argc, const char* const* argv);

}  // namespace gtsim
