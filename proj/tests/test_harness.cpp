#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gtsim/harness.hpp"
#include "gtsim/topology.hpp"

using namespace gtsim;

namespace {

std::string temp_dir() {
  auto d = std::filesystem::temp_directory_path() / "gtsim_harness_tests";
  std::filesystem::create_directories(d);
  return d.string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

// Small, fast experiment used across the harness tests.
ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.algorithm = AlgorithmTag::lsgt;
  cfg.rounds = 12;
  cfg.local_updates = 2;
  cfg.stepsize = 0.02;
  cfg.batch_size = 4;
  cfg.seeds = {1, 2};
  cfg.eval_cadence = 1;
  cfg.topology_kind = "random";
  cfg.n_agents = 4;
  cfg.edge_prob = 0.6;
  cfg.graph_seed = 3;
  cfg.source = DataSource::synthetic;
  cfg.partition = PartitionMode::iid;
  cfg.model = "nonconvex_logistic";
  cfg.samples = 80;
  cfg.test_samples = 40;
  cfg.features = 5;
  cfg.classes = 4;
  cfg.noise = 1.0;
  cfg.data_seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("config text parses, echoes, and round-trips") {
  std::string text =
      "[experiment]\n"
      "algorithm = gt\n"
      "rounds = 5\n"
      "seeds = 10 11 12\n"
      "# comment line\n"
      "\n"
      "[topology]\n"
      "kind = line\n"
      "n_agents = 3\n"
      "[data]\n"
      "samples = 60\n"
      "model = logistic\n";
  ExperimentConfig cfg = parse_config_text(text);
  CHECK(cfg.algorithm == AlgorithmTag::gt);
  CHECK(cfg.rounds == 5);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{10, 11, 12});
  CHECK(cfg.topology_kind == "line");
  CHECK(cfg.n_agents == 3);
  CHECK(cfg.samples == 60);

  ExperimentConfig back = parse_config_text(config_echo(cfg));
  CHECK(config_echo(back) == config_echo(cfg));
}

TEST_CASE("config rejects unknown keys, sections, and bad values") {
  CHECK_THROWS_WITH_AS(parse_config_text("[experiment]\nnot_a_key = 3\n"),
                       doctest::Contains("unknown key"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_text("[bogus]\n"),
                       doctest::Contains("unknown section"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_text("[experiment]\nrounds = soon\n"),
                       doctest::Contains("integer"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_text("[experiment]\nrounds\n"),
                       doctest::Contains("key = value"), std::runtime_error);
}

TEST_CASE("cross-field validation names the failing field") {
  ExperimentConfig cfg = tiny_config();
  cfg.algorithm = AlgorithmTag::must;  // without hybrid partition
  CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("data.partition"),
                       std::runtime_error);

  cfg = tiny_config();
  cfg.stepsize = 0.0;
  CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("stepsize"),
                       std::runtime_error);

  cfg = tiny_config();
  cfg.source = DataSource::mnist;
  cfg.train_images = "/nonexistent/file";
  CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("train_images"),
                       std::runtime_error);

  cfg = tiny_config();
  cfg.partition = PartitionMode::noniid;
  cfg.samples = 81;  // 4 agents * 2 shards does not divide 81
  CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("shards"),
                       std::runtime_error);
}

TEST_CASE("record count and determinism of a run") {
  ExperimentConfig cfg = tiny_config();
  RunOutput out = run_experiment(cfg);
  CHECK(out.averaged.size() == 13);  // rounds 0..12 at cadence 1
  CHECK(out.averaged.front().round == 0);
  CHECK(out.averaged.back().round == 12);
  CHECK_FALSE(out.diverged);

  SUBCASE("T=0 yields only the initial record") {
    cfg.rounds = 0;
    RunOutput o = run_experiment(cfg);
    CHECK(o.averaged.size() == 1);
    CHECK(o.averaged[0].round == 0);
  }

  SUBCASE("cadence thinning keeps round 0 and the final round") {
    cfg.rounds = 10;
    cfg.eval_cadence = 3;
    RunOutput o = run_experiment(cfg);
    // ceil(10/3) + 1 = 5 records: rounds 0, 3, 6, 9, 10
    REQUIRE(o.averaged.size() == 5);
    CHECK(o.averaged[0].round == 0);
    CHECK(o.averaged[1].round == 3);
    CHECK(o.averaged[4].round == 10);
  }

  SUBCASE("byte-identical CSV across reruns") {
    std::string p1 = temp_dir() + "/det1.csv";
    std::string p2 = temp_dir() + "/det2.csv";
    write_csv(run_experiment(cfg), p1);
    write_csv(run_experiment(cfg), p2);
    CHECK(slurp(p1) == slurp(p2));
  }
}

TEST_CASE("csv: header, row count, 17-digit round trip") {
  ExperimentConfig cfg = tiny_config();
  cfg.rounds = 7;
  RunOutput out = run_experiment(cfg);
  std::string path = temp_dir() + "/rt.csv";
  write_csv(out, path);

  std::string text = slurp(path);
  CHECK(text.rfind("round,comm_messages,train_loss,test_acc,stat_gap,phi_y,phi_v\n",
                   0) == 0);
  CHECK(text.find('\r') == std::string::npos);  // LF endings only

  bool is_must = true;
  std::vector<MetricsRecord> parsed = parse_csv(path, &is_must);
  CHECK_FALSE(is_must);
  REQUIRE(parsed.size() == out.averaged.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].round == out.averaged[i].round);
    // 17 significant digits round-trip doubles exactly
    CHECK(parsed[i].train_loss == out.averaged[i].train_loss);
    CHECK(parsed[i].test_accuracy == out.averaged[i].test_accuracy);
    CHECK(parsed[i].stationarity_gap == out.averaged[i].stationarity_gap);
    CHECK(parsed[i].phi_y == out.averaged[i].phi_y);
    CHECK(parsed[i].phi_v == out.averaged[i].phi_v);
  }
}

TEST_CASE("trial averaging is the arithmetic mean and per-trial series are kept") {
  ExperimentConfig cfg = tiny_config();
  cfg.rounds = 6;
  RunOutput out = run_experiment(cfg);
  REQUIRE(out.trials.size() == 2);
  for (std::size_t i = 0; i < out.averaged.size(); ++i) {
    double mean_loss = 0.5 * (out.trials[0].records[i].train_loss +
                              out.trials[1].records[i].train_loss);
    CHECK(std::abs(out.averaged[i].train_loss - mean_loss) <= 1e-15);
    double mean_gap = 0.5 * (out.trials[0].records[i].stationarity_gap +
                             out.trials[1].records[i].stationarity_gap);
    CHECK(std::abs(out.averaged[i].stationarity_gap - mean_gap) <= 1e-15);
  }

  std::string base = temp_dir() + "/pt.csv";
  write_per_trial_csv(out, base);
  std::vector<MetricsRecord> t0 = parse_csv(base + ".trial0.csv");
  CHECK(t0.size() == out.trials[0].records.size());
}

TEST_CASE("rounds-to-threshold uses the first crossing of the averaged series") {
  std::vector<MetricsRecord> series(5);
  for (int i = 0; i < 5; ++i) {
    series[i].round = i * 10;
    series[i].test_accuracy = 0.2 * i;  // 0, .2, .4, .6, .8
  }
  auto th = rounds_to_thresholds(series, {0.35, 0.8, 0.95});
  CHECK(th[0].reached);
  CHECK(th[0].round == 20);
  CHECK(th[1].reached);
  CHECK(th[1].round == 40);
  CHECK_FALSE(th[2].reached);
}

TEST_CASE("config echo is sufficient to reproduce a run") {
  ExperimentConfig cfg = tiny_config();
  cfg.rounds = 5;
  RunOutput first = run_experiment(cfg);
  ExperimentConfig back = parse_config_text(config_echo(first.config));
  RunOutput second = run_experiment(back);
  std::string p1 = temp_dir() + "/echo1.csv", p2 = temp_dir() + "/echo2.csv";
  write_csv(first, p1);
  write_csv(second, p2);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("single-value sweep equals a plain run; topology sweep orders lambda_w") {
  ExperimentConfig cfg = tiny_config();
  cfg.rounds = 4;
  std::string base = temp_dir() + "/sw";

  auto entries = sweep(cfg, SweepAxis::local_updates, {"2"}, base, true);
  REQUIRE(entries.size() == 1);
  RunOutput direct = run_experiment(cfg);
  std::string p1 = temp_dir() + "/sw_single.csv", p2 = temp_dir() + "/sw_direct.csv";
  write_csv(entries[0].output, p1);
  write_csv(direct, p2);
  CHECK(slurp(p1) == slurp(p2));

  auto topo = sweep(cfg, SweepAxis::topology, {"line", "random", "complete"},
                    temp_dir() + "/sw_topo", true);
  REQUIRE(topo.size() == 3);
  CHECK(topo[0].lambda_w > topo[1].lambda_w);
  CHECK(topo[1].lambda_w > topo[2].lambda_w);
  CHECK(std::filesystem::exists(temp_dir() + "/sw_topo_summary.csv"));

  // A sweep with any invalid derived config aborts before running anything.
  CHECK_THROWS_AS(sweep(cfg, SweepAxis::local_updates, {"4", "0"}, base, true),
                  std::runtime_error);
}

TEST_CASE("must runs produce the extended csv schema") {
  ExperimentConfig cfg;
  cfg.algorithm = AlgorithmTag::must;
  cfg.partition = PartitionMode::hybrid;
  cfg.model = "hybrid_quadratic";
  cfg.rounds = 5;
  cfg.local_updates = 2;
  cfg.alpha = 0.02;
  cfg.beta = 0.01;
  cfg.batch_size = 2;
  cfg.seeds = {4};
  cfg.topology_kind = "complete";
  cfg.n_agents = 2;
  cfg.samples = 8;
  cfg.test_samples = 4;
  cfg.features = 6;
  cfg.classes = 2;
  cfg.z_dim = 3;
  cfg.theta_dim = 2;

  RunOutput out = run_experiment(cfg);
  CHECK(out.is_must);
  std::string path = temp_dir() + "/must.csv";
  write_csv(out, path);
  std::string text = slurp(path);
  CHECK(text.rfind("round,comm_messages,train_loss,test_acc,stat_gap,phi_y,phi_v,"
                   "phi_theta,phi_x,phi_z,phi_u\n",
                   0) == 0);
  bool is_must = false;
  parse_csv(path, &is_must);
  CHECK(is_must);
  // The coupled objective should descend over the run.
  CHECK(out.averaged.back().train_loss < out.averaged.front().train_loss);
}

TEST_CASE("cli: validate, spectral, run, partition-dump, and usage errors") {
  std::string dir = temp_dir();
  ExperimentConfig cfg = tiny_config();
  cfg.rounds = 3;
  cfg.out_path = dir + "/cli_run.csv";
  std::string cfg_path = dir + "/cli.cfg";
  spit(cfg_path, config_echo(cfg));

  auto run_cli = [](std::vector<std::string> args) {
    std::vector<const char*> argv;
    argv.push_back("gtsim");
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data());
  };

  CHECK(run_cli({"validate", cfg_path}) == 0);
  CHECK(run_cli({"validate", dir + "/does_not_exist.cfg"}) == 2);
  CHECK(run_cli({"frobnicate"}) == 1);
  CHECK(run_cli({"run"}) == 1);

  Graph g = gen_graph(GraphKind::complete, 4, 0);
  std::string gpath = dir + "/complete4.edges";
  save_graph(g, gpath);
  CHECK(run_cli({"spectral", gpath}) == 0);

  CHECK(run_cli({"--quiet", "run", cfg_path}) == 0);
  CHECK(std::filesystem::exists(cfg.out_path));
  CHECK(std::filesystem::exists(cfg.out_path + ".meta"));

  CHECK(run_cli({"--quiet", "partition-dump", cfg_path, "--out", dir + "/part.txt"}) == 0);
  std::string part_text = slurp(dir + "/part.txt");
  int lines = 0;
  for (char c : part_text)
    if (c == '\n') ++lines;
  CHECK(lines == cfg.n_agents);

  // Seed override produces a single-trial run.
  CHECK(run_cli({"--quiet", "run", cfg_path, "--seed", "9",
                 "--out", dir + "/cli_seed.csv"}) == 0);
  CHECK(std::filesystem::exists(dir + "/cli_seed.csv"));
}

TEST_CASE("301 records for a 300-round run at cadence 1") {
  ExperimentConfig cfg = tiny_config();
  cfg.rounds = 300;
  cfg.seeds = {1};
  RunOutput out = run_experiment(cfg);
  CHECK(out.averaged.size() == 301);
  // Descent over the run on the synthetic problem.
  CHECK(out.averaged.back().stationarity_gap < out.averaged.front().stationarity_gap);
}

TEST_CASE("local-update sweep produces one output per value plus a summary") {
  ExperimentConfig cfg = tiny_config();
  cfg.rounds = 4;
  cfg.seeds = {1};
  std::string base = temp_dir() + "/sw_e";
  auto entries = sweep(cfg, SweepAxis::local_updates, {"1", "5", "10", "50"}, base, true);
  REQUIRE(entries.size() == 4);
  for (const auto& e : entries) CHECK(e.output.averaged.size() == 5);
  CHECK(std::filesystem::exists(base + "_E=1.csv"));
  CHECK(std::filesystem::exists(base + "_E=50.csv"));
  CHECK(std::filesystem::exists(base + "_summary.csv"));
}

TEST_CASE("checkpoints are written at the configured cadence and reload") {
  ExperimentConfig cfg = tiny_config();
  cfg.rounds = 6;
  cfg.seeds = {3};
  cfg.checkpoint_every = 3;
  cfg.checkpoint_prefix = temp_dir() + "/ckpt";
  RunOutput out = run_experiment(cfg);
  CHECK_FALSE(out.diverged);
  std::string p = cfg.checkpoint_prefix + "_seed3_r3.ck";
  REQUIRE(std::filesystem::exists(p));
  Checkpoint ck = load_checkpoint(p);
  CHECK(ck.algorithm == "lsgt");
  CHECK(ck.round == 3);
  CHECK(ck.states.size() == 4);
  CHECK(std::filesystem::exists(cfg.checkpoint_prefix + "_seed3_r6.ck"));
}

TEST_CASE("cli spectral prints the gap value, cli sweep writes outputs") {
  std::string dir = temp_dir();
  Graph g = gen_graph(GraphKind::complete, 4, 0);
  std::string gpath = dir + "/spectral4.edges";
  save_graph(g, gpath);

  auto run_cli_capture = [](std::vector<std::string> args, std::string* out_text) {
    std::vector<const char*> argv;
    argv.push_back("gtsim");
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream captured;
    std::streambuf* old = std::cout.rdbuf(captured.rdbuf());
    int rc = cli_main(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old);
    if (out_text) *out_text = captured.str();
    return rc;
  };

  std::string text;
  CHECK(run_cli_capture({"spectral", gpath}, &text) == 0);
  CHECK(text == "lambda_w 0.0\n");

  Graph line3 = gen_graph(GraphKind::line, 3, 0);
  std::string lpath = dir + "/line3.edges";
  save_graph(line3, lpath);
  CHECK(run_cli_capture({"spectral", lpath}, &text) == 0);
  CHECK(text.rfind("lambda_w 0.66666666", 0) == 0);

  ExperimentConfig cfg = tiny_config();
  cfg.rounds = 3;
  cfg.seeds = {1};
  std::string cfg_path = dir + "/sweep_cli.cfg";
  spit(cfg_path, config_echo(cfg));
  CHECK(run_cli_capture({"--quiet", "sweep", cfg_path, "--axis", "E", "--values",
                         "1,2", "--out", dir + "/swcli"}, nullptr) == 0);
  CHECK(std::filesystem::exists(dir + "/swcli_E=1.csv"));
  CHECK(std::filesystem::exists(dir + "/swcli_E=2.csv"));
  CHECK(std::filesystem::exists(dir + "/swcli_summary.csv"));
}

TEST_CASE("divergent configs abort with partial output and exit code 2") {
  std::string dir = temp_dir();
  ExperimentConfig cfg = tiny_config();
  cfg.model = "mlp";  // compounding layers blow up fast at this stepsize
  cfg.hidden = 8;
  cfg.stepsize = 1e4;
  cfg.rounds = 200;
  cfg.seeds = {1};
  RunOutput out = run_experiment(cfg);
  CHECK(out.diverged);
  CHECK_FALSE(out.divergence_message.empty());
  CHECK(out.trials[0].records.size() >= 1);  // at least the round-0 record

  std::string cfg_path = dir + "/diverge.cfg";
  cfg.out_path = dir + "/diverge.csv";
  spit(cfg_path, config_echo(cfg));
  std::vector<const char*> argv = {"gtsim", "--quiet", "run", cfg_path.c_str()};
  CHECK(cli_main(4, argv.data()) == 2);
}

TEST_CASE("cli per-trial flag and hybrid partition dump") {
  std::string dir = temp_dir();
  auto run_cli = [](std::vector<std::string> args) {
    std::vector<const char*> argv;
    argv.push_back("gtsim");
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data());
  };

  ExperimentConfig cfg = tiny_config();
  cfg.rounds = 2;
  std::string cfg_path = dir + "/pt_cli.cfg";
  spit(cfg_path, config_echo(cfg));
  CHECK(run_cli({"run", cfg_path, "--out", dir + "/pt_run.csv", "--per-trial",
                 "--quiet"}) == 0);
  CHECK(std::filesystem::exists(dir + "/pt_run.csv.trial0.csv"));
  CHECK(std::filesystem::exists(dir + "/pt_run.csv.trial1.csv"));

  ExperimentConfig hy;
  hy.algorithm = AlgorithmTag::must;
  hy.partition = PartitionMode::hybrid;
  hy.model = "hybrid_quadratic";
  hy.rounds = 1;
  hy.alpha = 0.01;
  hy.beta = 0.01;
  hy.batch_size = 1;
  hy.seeds = {2};
  hy.topology_kind = "complete";
  hy.n_agents = 2;
  hy.samples = 4;
  hy.test_samples = 2;
  hy.features = 4;
  hy.classes = 2;
  std::string hy_path = dir + "/hy_cli.cfg";
  spit(hy_path, config_echo(hy));
  CHECK(run_cli({"partition-dump", hy_path, "--out", dir + "/hy_part.txt",
                 "--quiet"}) == 0);
  std::string text = slurp(dir + "/hy_part.txt");
  int lines = 0;
  for (char c : text)
    if (c == '\n') ++lines;
  CHECK(lines == 2);
}

TEST_CASE("runs accept a graph from an edge-list file") {
  std::string dir = temp_dir();
  Graph g = gen_graph(GraphKind::random, 4, 12, 0.7);
  std::string gpath = dir + "/run_graph.edges";
  save_graph(g, gpath);

  ExperimentConfig cfg = tiny_config();
  cfg.rounds = 3;
  cfg.seeds = {1};
  cfg.topology_kind = "file";
  cfg.graph_file = gpath;
  RunOutput out = run_experiment(cfg);
  CHECK(out.averaged.size() == 4);

  cfg.n_agents = 5;  // mismatch with the 4-agent file
  CHECK_THROWS_AS(run_experiment(cfg), std::runtime_error);
}

TEST_CASE("threaded trials produce the same bytes as sequential trials") {
  ExperimentConfig cfg = tiny_config();
  cfg.rounds = 8;
  cfg.seeds = {1, 2, 3};
  cfg.threads = 1;
  RunOutput seq = run_experiment(cfg);
  cfg.threads = 3;
  RunOutput par = run_experiment(cfg);
  std::string p1 = temp_dir() + "/thr_seq.csv", p2 = temp_dir() + "/thr_par.csv";
  write_csv(seq, p1);
  write_csv(par, p2);
  CHECK(slurp(p1) == slurp(p2));
}
