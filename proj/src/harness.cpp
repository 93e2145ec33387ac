#include "gtsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "gtsim/algorithms.hpp"
#include "gtsim/io_util.hpp"
#include "gtsim/vecmath.hpp"

namespace gtsim {

namespace {

constexpr const char* kCsvHeaderClassic =
    "round,comm_messages,train_loss,test_acc,stat_gap,phi_y,phi_v";
constexpr const char* kCsvHeaderMust =
    "round,comm_messages,train_loss,test_acc,stat_gap,phi_y,phi_v,"
    "phi_theta,phi_x,phi_z,phi_u";

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct RunContext {
  Dataset train;
  Dataset test;
  Graph graph;
  MixingMatrix w;  // unused for centralized
  std::unique_ptr<LossModel> train_model;
  std::unique_ptr<LossModel> test_model;
};

Dataset build_synthetic(const ExperimentConfig& cfg, bool test_split) {
  Dataset all = make_blobs(cfg.samples + cfg.test_samples, cfg.features,
                           cfg.classes, cfg.noise, cfg.data_seed);
  if (!test_split) return head_subset(all, cfg.samples);
  Dataset t;
  t.n_samples = cfg.test_samples;
  t.n_features = all.n_features;
  t.n_classes = all.n_classes;
  t.features.assign(all.features.begin() +
                        static_cast<std::ptrdiff_t>(cfg.samples * all.n_features),
                    all.features.end());
  t.labels.assign(all.labels.begin() + static_cast<std::ptrdiff_t>(cfg.samples),
                  all.labels.end());
  return t;
}

RunContext build_context(const ExperimentConfig& cfg) {
  RunContext ctx;
  if (cfg.source == DataSource::synthetic) {
    ctx.train = build_synthetic(cfg, false);
    ctx.test = build_synthetic(cfg, true);
  } else {
    ctx.train = load_idx(cfg.train_images, cfg.train_labels);
    ctx.test = load_idx(cfg.test_images, cfg.test_labels);
    if (cfg.train_subset > 0) ctx.train = head_subset(ctx.train, cfg.train_subset);
    if (cfg.test_subset > 0) ctx.test = head_subset(ctx.test, cfg.test_subset);
  }

  if (cfg.algorithm != AlgorithmTag::centralized) {
    if (cfg.topology_kind == "file") {
      ctx.graph = load_graph(cfg.graph_file);
      if (ctx.graph.n_agents != cfg.n_agents)
        throw std::runtime_error("config: graph file agent count (" +
                                 std::to_string(ctx.graph.n_agents) +
                                 ") != topology.n_agents");
    } else {
      ctx.graph = gen_graph(parse_graph_kind(cfg.topology_kind), cfg.n_agents,
                            cfg.graph_seed, cfg.edge_prob);
    }
    ctx.w = max_degree_mixing(ctx.graph);
  }

  if (cfg.partition != PartitionMode::hybrid) {
    ModelKind kind = parse_model_kind(cfg.model);
    ctx.train_model = make_model(kind, ctx.train, cfg.hidden, cfg.nonconvex_lambda);
    ctx.test_model = make_model(kind, ctx.test, cfg.hidden, cfg.nonconvex_lambda);
    if (ctx.train.n_features != ctx.test.n_features ||
        ctx.train.n_classes != ctx.test.n_classes)
      throw std::runtime_error("config: train/test datasets have mismatched shapes");
  }
  return ctx;
}

// Evaluation of a classic (single parameter vector per agent) state list.
MetricsRecord eval_classic(const RunContext& ctx, const Partition& part,
                           const std::vector<AgentState>& states, int round,
                           long long messages) {
  MetricsRecord rec;
  rec.round = round;
  rec.messages_cumulative = messages;
  rec.stationarity_gap = stationarity_gap(states, *ctx.train_model, part);
  ConsensusErrors ce = consensus_errors(states);
  rec.phi_y = ce.phi_y;
  rec.phi_v = ce.phi_v;

  // Loss/accuracy at the across-agent average iterate.
  std::vector<double> ybar(ctx.train_model->dim(), 0.0);
  for (const auto& s : states) axpy(1.0, s.y, ybar);
  for (double& v : ybar) v /= static_cast<double>(states.size());
  std::vector<std::size_t> train_idx(ctx.train.n_samples);
  for (std::size_t i = 0; i < train_idx.size(); ++i) train_idx[i] = i;
  rec.train_loss = loss_accuracy(*ctx.train_model, ybar, train_idx).loss;
  std::vector<std::size_t> test_idx(ctx.test.n_samples);
  for (std::size_t i = 0; i < test_idx.size(); ++i) test_idx[i] = i;
  rec.test_accuracy = loss_accuracy(*ctx.test_model, ybar, test_idx).accuracy;
  return rec;
}

bool should_record(int round, int rounds, int cadence) {
  if (round == 0 || round == rounds) return true;
  return round % cadence == 0;
}

TrialSeries run_trial_classic(const ExperimentConfig& cfg, const RunContext& ctx,
                              std::uint64_t seed, std::string* divergence) {
  const bool centralized = cfg.algorithm == AlgorithmTag::centralized;
  Partition part;
  if (centralized) {
    part.assignments.resize(1);
    part.assignments[0].resize(ctx.train.n_samples);
    for (std::size_t i = 0; i < ctx.train.n_samples; ++i)
      part.assignments[0][i] = i;
  } else if (cfg.partition == PartitionMode::iid) {
    part = partition_iid(ctx.train, cfg.n_agents, seed);
  } else {
    part = partition_noniid_shards(ctx.train, cfg.n_agents, cfg.shards_per_agent, seed);
  }
  BoundProblem problem{ctx.train_model.get(), &part};

  AlgorithmConfig acfg;
  acfg.gamma = cfg.stepsize;
  acfg.local_updates = cfg.local_updates;
  acfg.rounds = cfg.rounds;
  acfg.batch_size = cfg.batch_size;

  TrialSeries series;
  series.seed = seed;
  long long messages = 0;

  auto checkpoint_path = [&](int round) {
    return cfg.checkpoint_prefix + "_seed" + std::to_string(seed) + "_r" +
           std::to_string(round) + ".ck";
  };

  try {
    if (cfg.algorithm == AlgorithmTag::d2) {
      std::vector<D2AgentState> states = d2_init(problem, cfg.n_agents, seed);
      auto as_agent_states = [&]() {
        std::vector<AgentState> tmp(states.size());
        for (std::size_t i = 0; i < states.size(); ++i) tmp[i].y = states[i].y;
        return tmp;
      };
      series.records.push_back(eval_classic(ctx, part, as_agent_states(), 0, 0));
      for (int r = 1; r <= cfg.rounds; ++r) {
        RoundReport rep = d2_round(states, ctx.w, acfg, problem, seed, r - 1);
        messages += rep.messages_sent;
        if (should_record(r, cfg.rounds, cfg.eval_cadence))
          series.records.push_back(eval_classic(ctx, part, as_agent_states(), r, messages));
      }
      return series;
    }

    if (centralized) {
      std::vector<double> params(ctx.train_model->dim());
      Rng init_rng = derive_stream(seed, StreamKind::param_init);
      ctx.train_model->init_params(params, init_rng);
      auto as_states = [&]() {
        std::vector<AgentState> tmp(1);
        tmp[0].y = params;
        return tmp;
      };
      series.records.push_back(eval_classic(ctx, part, as_states(), 0, 0));
      std::size_t b = std::min(cfg.batch_size, ctx.train.n_samples);
      for (int r = 1; r <= cfg.rounds; ++r) {
        for (int q = 1; q <= cfg.local_updates; ++q) {
          Rng rng = derive_stream(seed, StreamKind::local_batch, 0,
                                  static_cast<std::uint64_t>(r - 1),
                                  static_cast<std::uint64_t>(q));
          centralized_sgd_step(params, *ctx.train_model, part.agent(0), b,
                               cfg.stepsize, rng);
        }
        if (should_record(r, cfg.rounds, cfg.eval_cadence))
          series.records.push_back(eval_classic(ctx, part, as_states(), r, 0));
      }
      return series;
    }

    std::vector<AgentState> states =
        lsgt_init(problem, cfg.n_agents, seed, cfg.batch_size);
    if (cfg.algorithm == AlgorithmTag::dsgd)
      for (auto& s : states) s.v.clear();  // no tracking variable
    series.records.push_back(eval_classic(ctx, part, states, 0, 0));
    for (int r = 1; r <= cfg.rounds; ++r) {
      RoundReport rep;
      switch (cfg.algorithm) {
        case AlgorithmTag::lsgt:
          rep = lsgt_round(states, ctx.w, acfg, problem, seed, r - 1);
          break;
        case AlgorithmTag::gt:
          rep = gt_round(states, ctx.w, acfg, problem, seed, r - 1);
          break;
        case AlgorithmTag::dsgd:
          rep = dsgd_round(states, ctx.w, acfg, problem, seed, r - 1);
          break;
        default:
          throw std::logic_error("unexpected algorithm");
      }
      messages += rep.messages_sent;
      if (cfg.checkpoint_every > 0 && r % cfg.checkpoint_every == 0)
        save_checkpoint(checkpoint_path(r), to_string(cfg.algorithm), r, states);
      if (should_record(r, cfg.rounds, cfg.eval_cadence))
        series.records.push_back(eval_classic(ctx, part, states, r, messages));
    }
  } catch (const DivergenceError& e) {
    if (divergence) *divergence = e.what();
  }
  return series;
}

// --- coupled-variable runs --------------------------------------------------

std::unique_ptr<HybridProblem> build_hybrid_problem(const ExperimentConfig& cfg,
                                                    const Dataset& train,
                                                    std::uint64_t seed) {
  HybridAssignment assign =
      partition_hybrid(train.n_samples, cfg.n_agents, cfg.patches, seed);
  if (cfg.model == "mlp")
    return std::make_unique<MlpHybridProblem>(train, std::move(assign), cfg.hidden);
  return std::make_unique<QuadraticHybridProblem>(
      train, std::move(assign), cfg.z_dim, cfg.theta_dim, cfg.hybrid_lambda,
      cfg.data_seed);
}

// Test accuracy for the patch-split network: resolve the first layer from
// the averaged x (input-major d x hidden slab) on raw test features, then
// the theta head.
double must_test_accuracy(const Dataset& test, const ExperimentConfig& cfg,
                          std::span<const double> xbar,
                          std::span<const double> thetabar) {
  const std::size_t d = test.n_features;
  const std::size_t h = static_cast<std::size_t>(cfg.hidden);
  const std::size_t c = static_cast<std::size_t>(test.n_classes);
  const double* b1 = thetabar.data();
  const double* w2 = thetabar.data() + h;
  const double* b2 = thetabar.data() + h + h * c;
  std::vector<double> z(h), logits(c);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.n_samples; ++i) {
    const double* feat = test.row(i);
    for (std::size_t k = 0; k < h; ++k) z[k] = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double fj = feat[j];
      if (fj == 0.0) continue;
      const double* row = xbar.data() + j * h;
      for (std::size_t k = 0; k < h; ++k) z[k] += fj * row[k];
    }
    for (std::size_t k = 0; k < c; ++k) logits[k] = b2[k];
    for (std::size_t k = 0; k < h; ++k) {
      double pre = z[k] + b1[k];
      double act = pre > 0.0 ? pre : 0.0;
      if (act == 0.0) continue;
      const double* row = w2 + k * c;
      for (std::size_t t = 0; t < c; ++t) logits[t] += act * row[t];
    }
    std::size_t arg = 0;
    for (std::size_t t = 1; t < c; ++t)
      if (logits[t] > logits[arg]) arg = t;
    if (static_cast<int>(arg) == test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.n_samples);
}

MetricsRecord eval_must(const ExperimentConfig& cfg, const HybridProblem& hp,
                        const Dataset& test,
                        const std::vector<MustAgentState>& states, int round,
                        long long messages) {
  MetricsRecord rec;
  rec.round = round;
  rec.messages_cumulative = messages;
  rec.stationarity_gap = must_stationarity_gap(states, hp);
  MustConsensusErrors mce = must_consensus_errors(states);
  rec.phi_theta = mce.phi_theta;
  rec.phi_x = mce.phi_x;
  rec.phi_z = mce.phi_z;
  rec.phi_u = mce.phi_u;

  const int n = static_cast<int>(states.size());
  std::vector<double> xbar(hp.x_dim(), 0.0), thetabar(hp.theta_dim(), 0.0);
  for (const auto& s : states) {
    axpy(1.0, s.x, xbar);
    axpy(1.0, s.theta, thetabar);
  }
  for (double& v : xbar) v /= n;
  for (double& v : thetabar) v /= n;

  std::vector<double> zi(hp.z_dim());
  double loss = 0.0;
  for (std::size_t i = 0; i < hp.n_samples(); ++i) {
    full_coupling(hp, i, xbar, zi);
    loss += hp.loss(zi, thetabar, i);
  }
  rec.train_loss = loss / static_cast<double>(hp.n_samples());
  rec.test_accuracy =
      cfg.model == "mlp" ? must_test_accuracy(test, cfg, xbar, thetabar) : 0.0;
  return rec;
}

TrialSeries run_trial_must(const ExperimentConfig& cfg, const RunContext& ctx,
                           std::uint64_t seed, std::string* divergence) {
  std::unique_ptr<HybridProblem> hp = build_hybrid_problem(cfg, ctx.train, seed);

  AlgorithmConfig acfg;
  acfg.alpha = cfg.alpha;
  acfg.beta = cfg.beta;
  acfg.local_updates = cfg.local_updates;
  acfg.rounds = cfg.rounds;
  acfg.batch_size = cfg.batch_size;

  TrialSeries series;
  series.seed = seed;
  long long messages = 0;
  try {
    std::vector<MustAgentState> states =
        must_init(*hp, cfg.n_agents, seed, cfg.batch_size);
    series.records.push_back(eval_must(cfg, *hp, ctx.test, states, 0, 0));
    for (int r = 1; r <= cfg.rounds; ++r) {
      RoundReport rep = must_round(states, ctx.w, acfg, *hp, seed, r - 1);
      messages += rep.messages_sent;
      if (cfg.checkpoint_every > 0 && r % cfg.checkpoint_every == 0)
        save_must_checkpoint(cfg.checkpoint_prefix + "_seed" +
                                 std::to_string(seed) + "_r" +
                                 std::to_string(r) + ".ck",
                             r, states);
      if (should_record(r, cfg.rounds, cfg.eval_cadence))
        series.records.push_back(eval_must(cfg, *hp, ctx.test, states, r, messages));
    }
  } catch (const DivergenceError& e) {
    if (divergence) *divergence = e.what();
  }
  return series;
}

}  // namespace

std::vector<ThresholdCrossing> rounds_to_thresholds(
    const std::vector<MetricsRecord>& averaged,
    const std::vector<double>& thresholds) {
  std::vector<ThresholdCrossing> out;
  for (double th : thresholds) {
    ThresholdCrossing tc;
    tc.threshold = th;
    for (const auto& rec : averaged) {
      if (rec.test_accuracy >= th) {
        tc.reached = true;
        tc.round = rec.round;
        break;
      }
    }
    out.push_back(tc);
  }
  return out;
}

RunOutput run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  auto t0 = std::chrono::steady_clock::now();

  RunOutput out;
  out.config = cfg;
  out.is_must = cfg.algorithm == AlgorithmTag::must;

  RunContext ctx = build_context(cfg);

  // Trials are independent given their seeds (the context is immutable and
  // every random draw comes from a trial-keyed stream), so they may run on
  // worker threads; results are merged in seed order either way.
  const std::size_t n_trials = cfg.seeds.size();
  std::vector<TrialSeries> trials(n_trials);
  std::vector<std::string> divergences(n_trials);
  std::vector<std::string> errors(n_trials);
  auto run_one = [&](std::size_t i) {
    try {
      trials[i] = out.is_must
                      ? run_trial_must(cfg, ctx, cfg.seeds[i], &divergences[i])
                      : run_trial_classic(cfg, ctx, cfg.seeds[i], &divergences[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };

  unsigned hw = std::thread::hardware_concurrency();
  std::size_t workers = cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads)
                                        : (hw ? hw : 1);
  workers = std::min(workers, n_trials);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n_trials; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n_trials; i = next.fetch_add(1))
          run_one(i);
      });
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < n_trials; ++i) {
    if (!errors[i].empty()) throw std::runtime_error(errors[i]);
    if (!divergences[i].empty() && !out.diverged) {
      out.diverged = true;
      out.divergence_message = divergences[i];
    }
    out.trials.push_back(std::move(trials[i]));
  }

  // Pointwise average over the common prefix of the trial series.
  std::size_t common = out.trials.empty() ? 0 : out.trials[0].records.size();
  for (const auto& t : out.trials) common = std::min(common, t.records.size());
  const double inv = out.trials.empty() ? 0.0 : 1.0 / static_cast<double>(out.trials.size());
  for (std::size_t i = 0; i < common; ++i) {
    MetricsRecord avg;
    avg.round = out.trials[0].records[i].round;
    avg.messages_cumulative = out.trials[0].records[i].messages_cumulative;
    for (const auto& t : out.trials) {
      const MetricsRecord& r = t.records[i];
      avg.train_loss += inv * r.train_loss;
      avg.test_accuracy += inv * r.test_accuracy;
      avg.stationarity_gap += inv * r.stationarity_gap;
      avg.phi_y += inv * r.phi_y;
      avg.phi_v += inv * r.phi_v;
      avg.phi_theta += inv * r.phi_theta;
      avg.phi_x += inv * r.phi_x;
      avg.phi_z += inv * r.phi_z;
      avg.phi_u += inv * r.phi_u;
    }
    out.averaged.push_back(avg);
  }
  out.accuracy_thresholds = rounds_to_thresholds(out.averaged, {0.85, 0.90, 0.95});

  auto t1 = std::chrono::steady_clock::now();
  out.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  return out;
}

namespace {

void write_records(std::ofstream& f, const std::vector<MetricsRecord>& records,
                   bool is_must) {
  f << (is_must ? kCsvHeaderMust : kCsvHeaderClassic) << "\n";
  for (const auto& r : records) {
    f << r.round << "," << r.messages_cumulative << "," << fmt17(r.train_loss)
      << "," << fmt17(r.test_accuracy) << "," << fmt17(r.stationarity_gap)
      << "," << fmt17(r.phi_y) << "," << fmt17(r.phi_v);
    if (is_must)
      f << "," << fmt17(r.phi_theta) << "," << fmt17(r.phi_x) << ","
        << fmt17(r.phi_z) << "," << fmt17(r.phi_u);
    f << "\n";
  }
}

}  // namespace

void write_csv(const RunOutput& out, const std::string& path) {
  ensure_parent_dir(path);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_csv: cannot open " + path);
  write_records(f, out.averaged, out.is_must);
  if (!f) throw std::runtime_error("write_csv: write failed for " + path);
}

void write_per_trial_csv(const RunOutput& out, const std::string& base_path) {
  for (std::size_t k = 0; k < out.trials.size(); ++k) {
    std::string path = base_path + ".trial" + std::to_string(k) + ".csv";
    ensure_parent_dir(path);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_per_trial_csv: cannot open " + path);
    write_records(f, out.trials[k].records, out.is_must);
    if (!f) throw std::runtime_error("write_per_trial_csv: write failed for " + path);
  }
}

void write_meta(const RunOutput& out, const std::string& csv_path) {
  std::string path = csv_path + ".meta";
  ensure_parent_dir(path);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_meta: cannot open " + path);
  f << "# run metadata\n";
  for (const auto& tc : out.accuracy_thresholds) {
    char th[16];
    std::snprintf(th, sizeof(th), "%.2f", tc.threshold);
    f << "rounds_to_acc_" << th << " = ";
    if (tc.reached)
      f << tc.round << "\n";
    else
      f << "not_reached\n";
  }
  if (out.diverged) f << "diverged = true\n";
  f << "\n" << config_echo(out.config);
}

std::vector<MetricsRecord> parse_csv(const std::string& path, bool* is_must) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("parse_csv: cannot open " + path);
  std::string header;
  if (!std::getline(f, header)) throw std::runtime_error("parse_csv: empty file " + path);
  bool must_schema;
  if (header == kCsvHeaderClassic) must_schema = false;
  else if (header == kCsvHeaderMust) must_schema = true;
  else throw std::runtime_error("parse_csv: unexpected header in " + path);
  if (is_must) *is_must = must_schema;

  std::vector<MetricsRecord> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    std::vector<std::string> cols;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
    std::size_t expect = must_schema ? 11 : 7;
    if (cols.size() != expect)
      throw std::runtime_error("parse_csv: bad column count in " + path);
    MetricsRecord r;
    r.round = std::stoi(cols[0]);
    r.messages_cumulative = std::stoll(cols[1]);
    r.train_loss = std::stod(cols[2]);
    r.test_accuracy = std::stod(cols[3]);
    r.stationarity_gap = std::stod(cols[4]);
    r.phi_y = std::stod(cols[5]);
    r.phi_v = std::stod(cols[6]);
    if (must_schema) {
      r.phi_theta = std::stod(cols[7]);
      r.phi_x = std::stod(cols[8]);
      r.phi_z = std::stod(cols[9]);
      r.phi_u = std::stod(cols[10]);
    }
    out.push_back(r);
  }
  return out;
}

SweepAxis parse_sweep_axis(const std::string& s) {
  if (s == "E" || s == "local_updates") return SweepAxis::local_updates;
  if (s == "gamma" || s == "stepsize") return SweepAxis::stepsize;
  if (s == "topology") return SweepAxis::topology;
  if (s == "partition") return SweepAxis::partition;
  throw std::runtime_error("sweep: unknown axis '" + s + "'");
}

namespace {

ExperimentConfig apply_axis(const ExperimentConfig& base, SweepAxis axis,
                            const std::string& value) {
  ExperimentConfig cfg = base;
  switch (axis) {
    case SweepAxis::local_updates:
      cfg.local_updates = std::stoi(value);
      break;
    case SweepAxis::stepsize:
      cfg.stepsize = std::stod(value);
      cfg.alpha = cfg.stepsize;
      cfg.beta = cfg.stepsize;
      break;
    case SweepAxis::topology:
      cfg.topology_kind = value;
      break;
    case SweepAxis::partition:
      cfg.partition = parse_partition_mode(value);
      break;
  }
  return cfg;
}

std::string sanitize_for_filename(std::string v) {
  for (char& c : v)
    if (c == '.' || c == '/' || c == ' ') c = '_';
  return v;
}

}  // namespace

std::vector<SweepEntry> sweep(const ExperimentConfig& base, SweepAxis axis,
                              const std::vector<std::string>& values,
                              const std::string& out_base, bool quiet) {
  if (values.empty()) throw std::runtime_error("sweep: no axis values given");
  // Validate every derived config before any run starts.
  std::vector<ExperimentConfig> cfgs;
  for (const auto& v : values) {
    ExperimentConfig cfg = apply_axis(base, axis, v);
    validate_config(cfg);
    cfgs.push_back(std::move(cfg));
  }

  std::vector<SweepEntry> entries;
  for (std::size_t i = 0; i < values.size(); ++i) {
    SweepEntry e;
    e.value = values[i];
    e.output = run_experiment(cfgs[i]);
    if (cfgs[i].algorithm != AlgorithmTag::centralized) {
      Graph g = cfgs[i].topology_kind == "file"
                    ? load_graph(cfgs[i].graph_file)
                    : gen_graph(parse_graph_kind(cfgs[i].topology_kind),
                                cfgs[i].n_agents, cfgs[i].graph_seed,
                                cfgs[i].edge_prob);
      e.lambda_w = max_degree_mixing(g).lambda_w;
    }
    std::string path = out_base + "_" +
                       (axis == SweepAxis::local_updates ? "E"
                        : axis == SweepAxis::stepsize    ? "gamma"
                        : axis == SweepAxis::topology    ? "topology"
                                                         : "partition") +
                       "=" + sanitize_for_filename(values[i]) + ".csv";
    write_csv(e.output, path);
    if (!quiet)
      std::cout << "sweep point " << values[i] << " -> " << path << "\n";
    entries.push_back(std::move(e));
  }

  std::string summary_path = out_base + "_summary.csv";
  ensure_parent_dir(summary_path);
  std::ofstream f(summary_path, std::ios::binary);
  if (!f) throw std::runtime_error("sweep: cannot open " + summary_path);
  f << "axis_value,lambda_w,final_round,final_train_loss,final_test_acc,"
       "final_stat_gap,rounds_to_acc_0.85,rounds_to_acc_0.9,rounds_to_acc_0.95\n";
  for (const auto& e : entries) {
    const auto& avg = e.output.averaged;
    const MetricsRecord& last = avg.back();
    f << e.value << "," << fmt17(e.lambda_w) << "," << last.round << ","
      << fmt17(last.train_loss) << "," << fmt17(last.test_accuracy) << ","
      << fmt17(last.stationarity_gap);
    for (const auto& tc : e.output.accuracy_thresholds) {
      if (tc.reached)
        f << "," << tc.round;
      else
        f << ",-1";
    }
    f << "\n";
  }
  return entries;
}

}  // namespace gtsim
