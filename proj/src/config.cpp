#include "gtsim/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace gtsim {

AlgorithmTag parse_algorithm(const std::string& s) {
  if (s == "lsgt") return AlgorithmTag::lsgt;
  if (s == "gt") return AlgorithmTag::gt;
  if (s == "dsgd") return AlgorithmTag::dsgd;
  if (s == "d2") return AlgorithmTag::d2;
  if (s == "must") return AlgorithmTag::must;
  if (s == "centralized") return AlgorithmTag::centralized;
  throw std::runtime_error("config: unknown algorithm '" + s + "'");
}

PartitionMode parse_partition_mode(const std::string& s) {
  if (s == "iid") return PartitionMode::iid;
  if (s == "noniid") return PartitionMode::noniid;
  if (s == "hybrid") return PartitionMode::hybrid;
  throw std::runtime_error("config: unknown partition mode '" + s + "'");
}

std::string to_string(AlgorithmTag t) {
  switch (t) {
    case AlgorithmTag::lsgt: return "lsgt";
    case AlgorithmTag::gt: return "gt";
    case AlgorithmTag::dsgd: return "dsgd";
    case AlgorithmTag::d2: return "d2";
    case AlgorithmTag::must: return "must";
    case AlgorithmTag::centralized: return "centralized";
  }
  return "?";
}

std::string to_string(PartitionMode m) {
  switch (m) {
    case PartitionMode::iid: return "iid";
    case PartitionMode::noniid: return "noniid";
    case PartitionMode::hybrid: return "hybrid";
  }
  return "?";
}

std::string to_string(DataSource s) {
  return s == DataSource::synthetic ? "synthetic" : "mnist";
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    long long r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return r;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return r;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("config: key '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<std::uint64_t> to_seed_list(const std::string& key, const std::string& v) {
  std::vector<std::uint64_t> out;
  std::istringstream iss(v);
  std::string tok;
  while (iss >> tok) out.push_back(static_cast<std::uint64_t>(to_int(key, tok)));
  if (out.empty())
    throw std::runtime_error("config: key '" + key + "' expects at least one seed");
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                 ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section != "experiment" && section != "topology" &&
          section != "data" && section != "output")
        throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                 ": unknown section [" + section + "]");
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": expected 'key = value'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    std::string full = section.empty() ? key : section + "." + key;

    if (full == "experiment.algorithm") cfg.algorithm = parse_algorithm(value);
    else if (full == "experiment.rounds") cfg.rounds = static_cast<int>(to_int(full, value));
    else if (full == "experiment.local_updates") cfg.local_updates = static_cast<int>(to_int(full, value));
    else if (full == "experiment.stepsize") cfg.stepsize = to_real(full, value);
    else if (full == "experiment.alpha") cfg.alpha = to_real(full, value);
    else if (full == "experiment.beta") cfg.beta = to_real(full, value);
    else if (full == "experiment.batch_size") cfg.batch_size = static_cast<std::size_t>(to_int(full, value));
    else if (full == "experiment.seeds") cfg.seeds = to_seed_list(full, value);
    else if (full == "experiment.eval_cadence") cfg.eval_cadence = static_cast<int>(to_int(full, value));
    else if (full == "experiment.threads") cfg.threads = static_cast<int>(to_int(full, value));
    else if (full == "topology.kind") cfg.topology_kind = value;
    else if (full == "topology.n_agents") cfg.n_agents = static_cast<int>(to_int(full, value));
    else if (full == "topology.edge_prob") cfg.edge_prob = to_real(full, value);
    else if (full == "topology.graph_seed") cfg.graph_seed = static_cast<std::uint64_t>(to_int(full, value));
    else if (full == "topology.graph_file") cfg.graph_file = value;
    else if (full == "data.source") {
      if (value == "synthetic") cfg.source = DataSource::synthetic;
      else if (value == "mnist") cfg.source = DataSource::mnist;
      else throw std::runtime_error("config: unknown data source '" + value + "'");
    }
    else if (full == "data.partition") cfg.partition = parse_partition_mode(value);
    else if (full == "data.model") cfg.model = value;
    else if (full == "data.hidden") cfg.hidden = static_cast<int>(to_int(full, value));
    else if (full == "data.shards_per_agent") cfg.shards_per_agent = static_cast<int>(to_int(full, value));
    else if (full == "data.patches") cfg.patches = static_cast<int>(to_int(full, value));
    else if (full == "data.samples") cfg.samples = static_cast<std::size_t>(to_int(full, value));
    else if (full == "data.test_samples") cfg.test_samples = static_cast<std::size_t>(to_int(full, value));
    else if (full == "data.features") cfg.features = static_cast<std::size_t>(to_int(full, value));
    else if (full == "data.classes") cfg.classes = static_cast<int>(to_int(full, value));
    else if (full == "data.noise") cfg.noise = to_real(full, value);
    else if (full == "data.data_seed") cfg.data_seed = static_cast<std::uint64_t>(to_int(full, value));
    else if (full == "data.nonconvex_lambda") cfg.nonconvex_lambda = to_real(full, value);
    else if (full == "data.z_dim") cfg.z_dim = static_cast<std::size_t>(to_int(full, value));
    else if (full == "data.theta_dim") cfg.theta_dim = static_cast<std::size_t>(to_int(full, value));
    else if (full == "data.hybrid_lambda") cfg.hybrid_lambda = to_real(full, value);
    else if (full == "data.train_images") cfg.train_images = value;
    else if (full == "data.train_labels") cfg.train_labels = value;
    else if (full == "data.test_images") cfg.test_images = value;
    else if (full == "data.test_labels") cfg.test_labels = value;
    else if (full == "data.train_subset") cfg.train_subset = static_cast<std::size_t>(to_int(full, value));
    else if (full == "data.test_subset") cfg.test_subset = static_cast<std::size_t>(to_int(full, value));
    else if (full == "output.path") cfg.out_path = value;
    else if (full == "output.per_trial") cfg.per_trial = to_bool(full, value);
    else if (full == "output.checkpoint_prefix") cfg.checkpoint_prefix = value;
    else if (full == "output.checkpoint_every") cfg.checkpoint_every = static_cast<int>(to_int(full, value));
    else
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": unknown key '" + full + "'");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

namespace {

void require(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw std::runtime_error("config: field '" + field + "': " + msg);
}

void require_readable(const std::string& field, const std::string& path) {
  require(!path.empty(), field, "path is required");
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), field, "cannot open '" + path + "'");
}

}  // namespace

void validate_config(const ExperimentConfig& cfg) {
  require(cfg.rounds >= 0, "experiment.rounds", "must be >= 0");
  require(cfg.local_updates >= 1, "experiment.local_updates", "must be >= 1");
  require(cfg.batch_size >= 1, "experiment.batch_size", "must be >= 1");
  require(cfg.eval_cadence >= 1, "experiment.eval_cadence", "must be >= 1");
  require(cfg.threads >= 0, "experiment.threads", "must be >= 0");
  require(!cfg.seeds.empty(), "experiment.seeds", "at least one seed");
  bool is_must = cfg.algorithm == AlgorithmTag::must;
  if (is_must) {
    require(cfg.alpha > 0, "experiment.alpha", "must be positive");
    require(cfg.beta > 0, "experiment.beta", "must be positive");
  } else {
    require(cfg.stepsize > 0, "experiment.stepsize", "must be positive");
  }
  require(is_must == (cfg.partition == PartitionMode::hybrid),
          "data.partition",
          "hybrid partition and the must algorithm require each other");

  require(cfg.n_agents >= 1, "topology.n_agents", "must be >= 1");
  if (cfg.topology_kind == "random") {
    require(cfg.edge_prob > 0.0 && cfg.edge_prob <= 1.0, "topology.edge_prob",
            "must be in (0, 1]");
  } else if (cfg.topology_kind == "file") {
    require_readable("topology.graph_file", cfg.graph_file);
  } else {
    require(cfg.topology_kind == "line" || cfg.topology_kind == "complete",
            "topology.kind", "must be random, line, complete, or file");
  }

  if (cfg.source == DataSource::synthetic) {
    require(cfg.samples >= 1, "data.samples", "must be >= 1");
    require(cfg.features >= 1, "data.features", "must be >= 1");
    require(cfg.classes >= 2, "data.classes", "must be >= 2");
    require(cfg.test_samples >= 1, "data.test_samples", "must be >= 1");
  } else {
    require_readable("data.train_images", cfg.train_images);
    require_readable("data.train_labels", cfg.train_labels);
    require_readable("data.test_images", cfg.test_images);
    require_readable("data.test_labels", cfg.test_labels);
  }

  std::size_t train_count = cfg.source == DataSource::synthetic
                                ? cfg.samples
                                : cfg.train_subset;  // 0 = unknown until load
  switch (cfg.partition) {
    case PartitionMode::iid:
      require(static_cast<std::size_t>(cfg.n_agents) <= train_count || train_count == 0,
              "topology.n_agents", "more agents than training samples");
      break;
    case PartitionMode::noniid: {
      require(cfg.shards_per_agent >= 1, "data.shards_per_agent", "must be >= 1");
      std::size_t shards =
          static_cast<std::size_t>(cfg.n_agents) * static_cast<std::size_t>(cfg.shards_per_agent);
      require(train_count == 0 || train_count % shards == 0, "data.shards_per_agent",
              "n_agents * shards_per_agent must divide the training sample count");
      break;
    }
    case PartitionMode::hybrid:
      require(cfg.patches == 1 || cfg.patches == 2, "data.patches", "must be 1 or 2");
      require(train_count == 0 || train_count % static_cast<std::size_t>(cfg.n_agents) == 0,
              "data.samples", "n_agents must divide the training sample count");
      require(cfg.features % static_cast<std::size_t>(cfg.patches) == 0 ||
                  cfg.source == DataSource::mnist,
              "data.features", "patches must divide feature count");
      break;
  }

  if (cfg.partition == PartitionMode::hybrid) {
    require(cfg.model == "mlp" || cfg.model == "hybrid_quadratic", "data.model",
            "hybrid runs support 'mlp' or 'hybrid_quadratic'");
    if (cfg.model == "hybrid_quadratic") {
      require(cfg.z_dim >= 1, "data.z_dim", "must be >= 1");
      require(cfg.theta_dim >= 1, "data.theta_dim", "must be >= 1");
    }
  } else {
    require(cfg.model == "logistic" || cfg.model == "nonconvex_logistic" ||
                cfg.model == "mlp",
            "data.model", "must be logistic, nonconvex_logistic, or mlp");
  }
  if (cfg.model == "mlp") require(cfg.hidden >= 1, "data.hidden", "must be >= 1");
  require(cfg.checkpoint_every >= 0, "output.checkpoint_every", "must be >= 0");
  if (cfg.checkpoint_every > 0)
    require(!cfg.checkpoint_prefix.empty(), "output.checkpoint_prefix",
            "required when checkpoint_every > 0");
}

std::string config_echo(const ExperimentConfig& cfg) {
  std::ostringstream o;
  char buf[64];
  auto real = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  o << "[experiment]\n";
  o << "algorithm = " << to_string(cfg.algorithm) << "\n";
  o << "rounds = " << cfg.rounds << "\n";
  o << "local_updates = " << cfg.local_updates << "\n";
  o << "stepsize = " << real(cfg.stepsize) << "\n";
  o << "alpha = " << real(cfg.alpha) << "\n";
  o << "beta = " << real(cfg.beta) << "\n";
  o << "batch_size = " << cfg.batch_size << "\n";
  o << "seeds =";
  for (auto s : cfg.seeds) o << " " << s;
  o << "\n";
  o << "eval_cadence = " << cfg.eval_cadence << "\n";
  o << "threads = " << cfg.threads << "\n";
  o << "\n[topology]\n";
  o << "kind = " << cfg.topology_kind << "\n";
  o << "n_agents = " << cfg.n_agents << "\n";
  o << "edge_prob = " << real(cfg.edge_prob) << "\n";
  o << "graph_seed = " << cfg.graph_seed << "\n";
  if (!cfg.graph_file.empty()) o << "graph_file = " << cfg.graph_file << "\n";
  o << "\n[data]\n";
  o << "source = " << to_string(cfg.source) << "\n";
  o << "partition = " << to_string(cfg.partition) << "\n";
  o << "model = " << cfg.model << "\n";
  o << "hidden = " << cfg.hidden << "\n";
  o << "shards_per_agent = " << cfg.shards_per_agent << "\n";
  o << "patches = " << cfg.patches << "\n";
  o << "samples = " << cfg.samples << "\n";
  o << "test_samples = " << cfg.test_samples << "\n";
  o << "features = " << cfg.features << "\n";
  o << "classes = " << cfg.classes << "\n";
  o << "noise = " << real(cfg.noise) << "\n";
  o << "data_seed = " << cfg.data_seed << "\n";
  o << "nonconvex_lambda = " << real(cfg.nonconvex_lambda) << "\n";
  o << "z_dim = " << cfg.z_dim << "\n";
  o << "theta_dim = " << cfg.theta_dim << "\n";
  o << "hybrid_lambda = " << real(cfg.hybrid_lambda) << "\n";
  if (!cfg.train_images.empty()) o << "train_images = " << cfg.train_images << "\n";
  if (!cfg.train_labels.empty()) o << "train_labels = " << cfg.train_labels << "\n";
  if (!cfg.test_images.empty()) o << "test_images = " << cfg.test_images << "\n";
  if (!cfg.test_labels.empty()) o << "test_labels = " << cfg.test_labels << "\n";
  o << "train_subset = " << cfg.train_subset << "\n";
  o << "test_subset = " << cfg.test_subset << "\n";
  o << "\n[output]\n";
  o << "path = " << cfg.out_path << "\n";
  o << "per_trial = " << (cfg.per_trial ? "true" : "false") << "\n";
  if (!cfg.checkpoint_prefix.empty())
    o << "checkpoint_prefix = " << cfg.checkpoint_prefix << "\n";
  o << "checkpoint_every = " << cfg.checkpoint_every << "\n";
  return o.str();
}

}  // namespace gtsim
