#include "gtsim/algorithms.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "gtsim/vecmath.hpp"
#include "gtsim/io_util.hpp"

namespace gtsim {

namespace {

constexpr double kDivergenceLimit = 1e12;

void check_finite(std::span<const double> x, int round, const char* what) {
  for (double v : x) {
    if (!std::isfinite(v) || std::abs(v) > kDivergenceLimit) {
      char buf[128];
      std::snprintf(buf, sizeof(buf),
                    "divergence detected in %s at round %d (|coord| > 1e12 "
                    "or non-finite)",
                    what, round);
      throw DivergenceError(round, buf);
    }
  }
}

// dst[n] = sum_m W[n][m] src[m], for stacked per-agent vectors.
template <typename GetVec>
std::vector<std::vector<double>> mix_all(const MixingMatrix& w, int n_agents,
                                         std::size_t dim, GetVec get) {
  std::vector<std::vector<double>> out(n_agents);
  for (int n = 0; n < n_agents; ++n) {
    out[n].assign(dim, 0.0);
    for (int m = 0; m < n_agents; ++m) {
      double wnm = w.at(n, m);
      if (wnm == 0.0) continue;
      axpy(wnm, get(m), out[n]);
    }
  }
  return out;
}

long long directed_edge_count(const MixingMatrix& w) {
  long long cnt = 0;
  for (int r = 0; r < w.n; ++r)
    for (int c = 0; c < w.n; ++c)
      if (r != c && w.at(r, c) != 0.0) ++cnt;
  return cnt;
}

void validate_round_args(const std::vector<AgentState>& states,
                         const MixingMatrix& w, const AlgorithmConfig& cfg) {
  if (states.empty()) throw std::invalid_argument("round: no agents");
  if (w.n != static_cast<int>(states.size()))
    throw std::invalid_argument("round: mixing matrix size != agent count");
  if (cfg.local_updates < 1)
    throw std::invalid_argument("round: local_updates must be >= 1");
  if (!(cfg.gamma >= 0.0) || !std::isfinite(cfg.gamma))
    throw std::invalid_argument("round: stepsize must be finite and >= 0");
}

}  // namespace

std::vector<AgentState> lsgt_init(const BoundProblem& problem, int n_agents,
                                  std::uint64_t seed, std::size_t batch_size) {
  const LossModel& model = *problem.model;
  const Partition& part = *problem.partition;
  if (part.n_agents() != n_agents)
    throw std::invalid_argument("lsgt_init: partition does not match agent count");

  std::vector<double> y0(model.dim());
  Rng init_rng = derive_stream(seed, StreamKind::param_init);
  model.init_params(y0, init_rng);

  std::vector<AgentState> states(n_agents);
  for (int n = 0; n < n_agents; ++n) {
    states[n].y = y0;
    Rng rng = derive_stream(seed, StreamKind::init_batch, static_cast<std::uint64_t>(n));
    std::size_t b = std::min(batch_size, part.agent(n).size());
    states[n].g_last = stochastic_gradient(model, y0, part.agent(n), b, rng).gradient;
    states[n].v = states[n].g_last;
  }
  return states;
}

namespace {

// Shared implementation for lsgt_round / lsgt_round_ordered.
RoundReport lsgt_round_impl(std::vector<AgentState>& states,
                            const MixingMatrix& w, const AlgorithmConfig& cfg,
                            const BoundProblem& problem, std::uint64_t seed,
                            int round, std::span<const int> order) {
  validate_round_args(states, w, cfg);
  const LossModel& model = *problem.model;
  const Partition& part = *problem.partition;
  const int n_agents = static_cast<int>(states.size());
  const std::size_t dim = model.dim();

  // Mixing reads a snapshot of the committed states (synchronous rounds).
  auto mixed_y = mix_all(w, n_agents, dim, [&](int m) -> std::span<const double> {
    return states[m].y;
  });
  auto mixed_v = mix_all(w, n_agents, dim, [&](int m) -> std::span<const double> {
    return states[m].v;
  });

  std::vector<AgentState> next(n_agents);
  for (int k = 0; k < n_agents; ++k) {
    const int n = order.empty() ? k : order[k];
    std::vector<double> y = std::move(mixed_y[n]);
    std::vector<double> v = std::move(mixed_v[n]);
    std::vector<double> g = states[n].g_last;  // carried, not recomputed

    std::size_t b = std::min(cfg.batch_size, part.agent(n).size());
    for (int q = 1; q <= cfg.local_updates; ++q) {
      axpy(-cfg.gamma, v, y);
      Rng rng = derive_stream(seed, StreamKind::local_batch,
                              static_cast<std::uint64_t>(n),
                              static_cast<std::uint64_t>(round),
                              static_cast<std::uint64_t>(q));
      std::vector<double> g_new =
          stochastic_gradient(model, y, part.agent(n), b, rng).gradient;
      for (std::size_t i = 0; i < dim; ++i) v[i] += g_new[i] - g[i];
      g = std::move(g_new);
    }
    check_finite(y, round, "lsgt y");
    check_finite(v, round, "lsgt v");
    next[n] = AgentState{std::move(y), std::move(v), std::move(g)};
  }
  states = std::move(next);
  return RoundReport{round, 2 * directed_edge_count(w)};
}

}  // namespace

RoundReport lsgt_round(std::vector<AgentState>& states, const MixingMatrix& w,
                       const AlgorithmConfig& cfg, const BoundProblem& problem,
                       std::uint64_t seed, int round) {
  return lsgt_round_impl(states, w, cfg, problem, seed, round, {});
}

RoundReport lsgt_round_ordered(std::vector<AgentState>& states,
                               const MixingMatrix& w,
                               const AlgorithmConfig& cfg,
                               const BoundProblem& problem, std::uint64_t seed,
                               int round, std::span<const int> process_order) {
  return lsgt_round_impl(states, w, cfg, problem, seed, round, process_order);
}

RoundReport gt_round(std::vector<AgentState>& states, const MixingMatrix& w,
                     const AlgorithmConfig& cfg, const BoundProblem& problem,
                     std::uint64_t seed, int round) {
  validate_round_args(states, w, cfg);
  const LossModel& model = *problem.model;
  const Partition& part = *problem.partition;
  const int n_agents = static_cast<int>(states.size());
  const std::size_t dim = model.dim();

  auto mixed_y = mix_all(w, n_agents, dim, [&](int m) -> std::span<const double> {
    return states[m].y;
  });
  auto mixed_v = mix_all(w, n_agents, dim, [&](int m) -> std::span<const double> {
    return states[m].v;
  });

  std::vector<AgentState> next(n_agents);
  for (int n = 0; n < n_agents; ++n) {
    std::vector<double> y = std::move(mixed_y[n]);
    std::vector<double> v = std::move(mixed_v[n]);
    axpy(-cfg.gamma, v, y);
    Rng rng = derive_stream(seed, StreamKind::local_batch,
                            static_cast<std::uint64_t>(n),
                            static_cast<std::uint64_t>(round), 1);
    std::size_t b = std::min(cfg.batch_size, part.agent(n).size());
    std::vector<double> g_new =
        stochastic_gradient(model, y, part.agent(n), b, rng).gradient;
    for (std::size_t i = 0; i < dim; ++i)
      v[i] += g_new[i] - states[n].g_last[i];
    check_finite(y, round, "gt y");
    check_finite(v, round, "gt v");
    next[n] = AgentState{std::move(y), std::move(v), std::move(g_new)};
  }
  states = std::move(next);
  return RoundReport{round, 2 * directed_edge_count(w)};
}

RoundReport dsgd_round(std::vector<AgentState>& states, const MixingMatrix& w,
                       const AlgorithmConfig& cfg, const BoundProblem& problem,
                       std::uint64_t seed, int round) {
  validate_round_args(states, w, cfg);
  const LossModel& model = *problem.model;
  const Partition& part = *problem.partition;
  const int n_agents = static_cast<int>(states.size());

  auto mixed_y = mix_all(w, n_agents, model.dim(),
                         [&](int m) -> std::span<const double> { return states[m].y; });

  std::vector<AgentState> next(n_agents);
  for (int n = 0; n < n_agents; ++n) {
    Rng rng = derive_stream(seed, StreamKind::local_batch,
                            static_cast<std::uint64_t>(n),
                            static_cast<std::uint64_t>(round), 1);
    std::size_t b = std::min(cfg.batch_size, part.agent(n).size());
    // Gradient at the agent's own pre-mixing iterate.
    std::vector<double> g =
        stochastic_gradient(model, states[n].y, part.agent(n), b, rng).gradient;
    std::vector<double> y = std::move(mixed_y[n]);
    axpy(-cfg.gamma, g, y);
    check_finite(y, round, "dsgd y");
    next[n] = AgentState{std::move(y), {}, std::move(g)};
  }
  states = std::move(next);
  return RoundReport{round, directed_edge_count(w)};
}

std::vector<D2AgentState> d2_init(const BoundProblem& problem, int n_agents,
                                  std::uint64_t seed) {
  const LossModel& model = *problem.model;
  if (problem.partition->n_agents() != n_agents)
    throw std::invalid_argument("d2_init: partition does not match agent count");
  std::vector<double> y0(model.dim());
  Rng init_rng = derive_stream(seed, StreamKind::param_init);
  model.init_params(y0, init_rng);
  std::vector<D2AgentState> states(n_agents);
  for (auto& s : states) s.y = y0;
  return states;
}

RoundReport d2_round(std::vector<D2AgentState>& states, const MixingMatrix& w,
                     const AlgorithmConfig& cfg, const BoundProblem& problem,
                     std::uint64_t seed, int round) {
  if (states.empty()) throw std::invalid_argument("d2_round: no agents");
  if (w.n != static_cast<int>(states.size()))
    throw std::invalid_argument("d2_round: mixing matrix size != agent count");
  // The eigenvalue condition for this recursion: symmetric W with smallest
  // eigenvalue > -1/3. Checked once, on the first round of a run.
  if (!states[0].have_history) {
    double lam_min = min_eigenvalue_symmetric(w.w, w.n);
    if (!(lam_min > -1.0 / 3.0 + 1e-9) || !(w.lambda_w < 1.0))
      throw std::invalid_argument(
          "d2_round: mixing matrix eigenvalues must lie in (-1/3, 1)");
  }

  const LossModel& model = *problem.model;
  const Partition& part = *problem.partition;
  const int n_agents = static_cast<int>(states.size());
  const std::size_t dim = model.dim();

  // Fresh gradients at the current iterates.
  std::vector<std::vector<double>> g(n_agents);
  for (int n = 0; n < n_agents; ++n) {
    Rng rng = derive_stream(seed, StreamKind::local_batch,
                            static_cast<std::uint64_t>(n),
                            static_cast<std::uint64_t>(round), 1);
    std::size_t b = std::min(cfg.batch_size, part.agent(n).size());
    g[n] = stochastic_gradient(model, states[n].y, part.agent(n), b, rng).gradient;
  }

  // Inner term per agent, then one mixing pass.
  std::vector<std::vector<double>> inner(n_agents);
  for (int n = 0; n < n_agents; ++n) {
    inner[n].resize(dim);
    if (!states[n].have_history) {
      for (std::size_t i = 0; i < dim; ++i)
        inner[n][i] = states[n].y[i] - cfg.gamma * g[n][i];
    } else {
      for (std::size_t i = 0; i < dim; ++i)
        inner[n][i] = 2.0 * states[n].y[i] - states[n].y_prev[i] -
                      cfg.gamma * (g[n][i] - states[n].g_prev[i]);
    }
  }
  auto mixed = mix_all(w, n_agents, dim, [&](int m) -> std::span<const double> {
    return inner[m];
  });

  for (int n = 0; n < n_agents; ++n) {
    check_finite(mixed[n], round, "d2 y");
    states[n].y_prev = std::move(states[n].y);
    states[n].g_prev = std::move(g[n]);
    states[n].y = std::move(mixed[n]);
    states[n].have_history = true;
  }
  return RoundReport{round, directed_edge_count(w)};
}

void centralized_sgd_step(std::vector<double>& params, const LossModel& model,
                          std::span<const std::size_t> all_data,
                          std::size_t batch_size, double gamma, Rng& rng) {
  StochasticGradient sg =
      stochastic_gradient(model, params, all_data, batch_size, rng);
  axpy(-gamma, sg.gradient, params);
}

// --- must -------------------------------------------------------------------

std::vector<MustAgentState> must_init(const HybridProblem& hp, int n_agents,
                                      std::uint64_t seed,
                                      std::size_t batch_size) {
  if (n_agents != hp.n_agents())
    throw std::invalid_argument("must_init: agent count does not match problem");
  const std::size_t m = hp.z_dim();
  const std::size_t s = hp.n_samples();

  std::vector<double> theta0(hp.theta_dim());
  std::vector<double> x0(hp.x_dim());
  Rng theta_rng = derive_stream(seed, StreamKind::param_init, 0);
  Rng x_rng = derive_stream(seed, StreamKind::param_init, 1);
  hp.init_theta(theta0, theta_rng);
  hp.init_x(x0, x_rng);

  std::vector<MustAgentState> states(n_agents);
  std::vector<double> bz(m);
  for (int n = 0; n < n_agents; ++n) {
    MustAgentState& st = states[n];
    st.theta = theta0;
    st.x = x0;
    st.z.assign(s * m, 0.0);
    for (std::size_t i : hp.local_samples(n)) {
      hp.apply_map(n, i, st.x, bz);
      for (std::size_t k = 0; k < m; ++k)
        st.z[i * m + k] = static_cast<double>(n_agents) * bz[k];
    }
    Rng rng = derive_stream(seed, StreamKind::init_batch, static_cast<std::uint64_t>(n));
    const auto& local = hp.local_samples(n);
    std::size_t b = std::min(batch_size, local.size());
    std::vector<std::size_t> pos = draw_batch(local.size(), b, rng);
    std::vector<std::size_t> batch;
    batch.reserve(b);
    for (std::size_t p : pos) batch.push_back(local[p]);
    HybridGradients hg = hybrid_gradients(hp, st.theta, st.z, batch, n);
    st.g_theta_last = std::move(hg.g_theta);
    st.g_x_last = std::move(hg.g_x);
    st.u = st.g_x_last;
  }
  return states;
}

RoundReport must_round(std::vector<MustAgentState>& states,
                       const MixingMatrix& w, const AlgorithmConfig& cfg,
                       const HybridProblem& hp, std::uint64_t seed, int round) {
  if (states.empty()) throw std::invalid_argument("must_round: no agents");
  if (w.n != static_cast<int>(states.size()) || w.n != hp.n_agents())
    throw std::invalid_argument("must_round: agent count mismatch");
  if (cfg.local_updates < 1)
    throw std::invalid_argument("must_round: local_updates must be >= 1");
  const int n_agents = static_cast<int>(states.size());
  const std::size_t m = hp.z_dim();

  auto mixed_theta = mix_all(w, n_agents, hp.theta_dim(),
                             [&](int a) -> std::span<const double> { return states[a].theta; });
  auto mixed_x = mix_all(w, n_agents, hp.x_dim(),
                         [&](int a) -> std::span<const double> { return states[a].x; });
  auto mixed_z = mix_all(w, n_agents, hp.n_samples() * m,
                         [&](int a) -> std::span<const double> { return states[a].z; });
  auto mixed_u = mix_all(w, n_agents, hp.x_dim(),
                         [&](int a) -> std::span<const double> { return states[a].u; });

  std::vector<MustAgentState> next(n_agents);
  std::vector<double> dx(hp.x_dim());
  std::vector<double> bdz(m);
  for (int n = 0; n < n_agents; ++n) {
    std::vector<double> theta = std::move(mixed_theta[n]);
    std::vector<double> x = std::move(mixed_x[n]);
    std::vector<double> z = std::move(mixed_z[n]);
    std::vector<double> u = std::move(mixed_u[n]);
    std::vector<double> g_theta = states[n].g_theta_last;  // carried
    std::vector<double> g_x = states[n].g_x_last;          // carried

    const auto& local = hp.local_samples(n);

    // The tracking correction covers every displacement of the agent's x
    // since its previous correction, including the jump from consensus
    // averaging; this keeps (1/N) sum_n z_{n,i} = sum_n B_{n,i} x_n exact
    // at every commit.
    for (std::size_t i = 0; i < dx.size(); ++i)
      dx[i] = x[i] - states[n].x[i];
    for (std::size_t smp : local) {
      hp.apply_map(n, smp, dx, bdz);
      double* zrow = &z[smp * m];
      for (std::size_t k = 0; k < m; ++k)
        zrow[k] += static_cast<double>(n_agents) * bdz[k];
    }

    std::size_t b = std::min(cfg.batch_size, local.size());
    for (int q = 1; q <= cfg.local_updates; ++q) {
      axpy(-cfg.alpha, g_theta, theta);
      // x step, remembering the increment for the z update
      for (std::size_t i = 0; i < x.size(); ++i) {
        double nx = x[i] - cfg.beta * u[i];
        dx[i] = nx - x[i];
        x[i] = nx;
      }
      // z <- z + N * B_n dx (nonzero only for owned samples)
      for (std::size_t smp : local) {
        hp.apply_map(n, smp, dx, bdz);
        double* zrow = &z[smp * m];
        for (std::size_t k = 0; k < m; ++k)
          zrow[k] += static_cast<double>(n_agents) * bdz[k];
      }
      Rng rng = derive_stream(seed, StreamKind::local_batch,
                              static_cast<std::uint64_t>(n),
                              static_cast<std::uint64_t>(round),
                              static_cast<std::uint64_t>(q));
      std::vector<std::size_t> pos = draw_batch(local.size(), b, rng);
      std::vector<std::size_t> batch;
      batch.reserve(b);
      for (std::size_t p : pos) batch.push_back(local[p]);
      HybridGradients hg = hybrid_gradients(hp, theta, z, batch, n);
      for (std::size_t i = 0; i < u.size(); ++i)
        u[i] += hg.g_x[i] - g_x[i];
      g_theta = std::move(hg.g_theta);
      g_x = std::move(hg.g_x);
    }
    check_finite(theta, round, "must theta");
    check_finite(x, round, "must x");
    check_finite(z, round, "must z");
    check_finite(u, round, "must u");
    next[n] = MustAgentState{std::move(theta), std::move(x),   std::move(z),
                             std::move(u),     std::move(g_theta), std::move(g_x)};
  }
  states = std::move(next);
  return RoundReport{round, 4 * directed_edge_count(w)};
}

// --- checkpoints --------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'G', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw std::runtime_error("checkpoint: truncated " + path);
  return v;
}

void write_vec(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_vec(std::ifstream& in, std::vector<double>& v, std::size_t n,
              const std::string& path) {
  v.resize(n);
  if (!in.read(reinterpret_cast<char*>(v.data()),
               static_cast<std::streamsize>(n * sizeof(double))))
    throw std::runtime_error("checkpoint: truncated " + path);
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& algorithm,
                     int round, const std::vector<AgentState>& states) {
  if (states.empty()) throw std::invalid_argument("save_checkpoint: no states");
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write(kMagic, 4);
  std::uint32_t ver = kVersion;
  out.write(reinterpret_cast<const char*>(&ver), sizeof ver);
  std::uint32_t tag_len = static_cast<std::uint32_t>(algorithm.size());
  out.write(reinterpret_cast<const char*>(&tag_len), sizeof tag_len);
  out.write(algorithm.data(), tag_len);
  write_u64(out, static_cast<std::uint64_t>(round));
  write_u64(out, states.size());
  write_u64(out, states[0].y.size());
  bool has_v = !states[0].v.empty();
  std::uint64_t flags = has_v ? 1 : 0;
  write_u64(out, flags);
  for (const auto& s : states) {
    write_vec(out, s.y);
    if (has_v) write_vec(out, s.v);
    write_vec(out, s.g_last);
  }
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  std::uint32_t ver = 0;
  in.read(reinterpret_cast<char*>(&ver), sizeof ver);
  if (ver != kVersion)
    throw std::runtime_error("load_checkpoint: unsupported version in " + path);
  std::uint32_t tag_len = 0;
  in.read(reinterpret_cast<char*>(&tag_len), sizeof tag_len);
  Checkpoint ck;
  ck.algorithm.resize(tag_len);
  in.read(ck.algorithm.data(), tag_len);
  ck.round = static_cast<int>(read_u64(in, path));
  std::uint64_t n = read_u64(in, path);
  std::uint64_t p = read_u64(in, path);
  std::uint64_t flags = read_u64(in, path);
  ck.states.resize(n);
  for (auto& s : ck.states) {
    read_vec(in, s.y, p, path);
    if (flags & 1) read_vec(in, s.v, p, path);
    read_vec(in, s.g_last, p, path);
  }
  return ck;
}

void save_must_checkpoint(const std::string& path, int round,
                          const std::vector<MustAgentState>& states) {
  if (states.empty()) throw std::invalid_argument("save_must_checkpoint: no states");
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_must_checkpoint: cannot open " + path);
  out.write(kMagic, 4);
  std::uint32_t ver = kVersion;
  out.write(reinterpret_cast<const char*>(&ver), sizeof ver);
  std::uint32_t tag_len = 4;
  out.write(reinterpret_cast<const char*>(&tag_len), sizeof tag_len);
  out.write("must", 4);
  write_u64(out, static_cast<std::uint64_t>(round));
  write_u64(out, states.size());
  write_u64(out, states[0].theta.size());
  write_u64(out, states[0].x.size());
  write_u64(out, states[0].z.size());
  for (const auto& s : states) {
    write_vec(out, s.theta);
    write_vec(out, s.x);
    write_vec(out, s.z);
    write_vec(out, s.u);
    write_vec(out, s.g_theta_last);
    write_vec(out, s.g_x_last);
  }
  if (!out) throw std::runtime_error("save_must_checkpoint: write failed for " + path);
}

MustCheckpoint load_must_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_must_checkpoint: cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("load_must_checkpoint: bad magic in " + path);
  std::uint32_t ver = 0;
  in.read(reinterpret_cast<char*>(&ver), sizeof ver);
  std::uint32_t tag_len = 0;
  in.read(reinterpret_cast<char*>(&tag_len), sizeof tag_len);
  std::string tag(tag_len, '\0');
  in.read(tag.data(), tag_len);
  if (tag != "must")
    throw std::runtime_error("load_must_checkpoint: wrong algorithm tag in " + path);
  MustCheckpoint ck;
  ck.round = static_cast<int>(read_u64(in, path));
  std::uint64_t n = read_u64(in, path);
  std::uint64_t k = read_u64(in, path);
  std::uint64_t j = read_u64(in, path);
  std::uint64_t sm = read_u64(in, path);
  ck.states.resize(n);
  for (auto& s : ck.states) {
    read_vec(in, s.theta, k, path);
    read_vec(in, s.x, j, path);
    read_vec(in, s.z, sm, path);
    read_vec(in, s.u, j, path);
    read_vec(in, s.g_theta_last, k, path);
    read_vec(in, s.g_x_last, j, path);
  }
  return ck;
}

}  // namespace gtsim
