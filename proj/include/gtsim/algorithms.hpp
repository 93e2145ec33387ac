#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtsim/hybrid.hpp"
#include "gtsim/models.hpp"
#include "gtsim/partition.hpp"
#include "gtsim/topology.hpp"

namespace gtsim {

// Per-agent state for the gradient-tracking family. v tracks the network
// average gradient; g_last is the most recent stochastic gradient, carried
// across rounds (it is not recomputed after mixing).
struct AgentState {
  std::vector<double> y;
  std::vector<double> v;
  std::vector<double> g_last;
};

// Per-agent state for the coupled-variable algorithm. z holds one tracking
// vector per sample (stacked, S * M); u tracks the coupled gradient.
struct MustAgentState {
  std::vector<double> theta;
  std::vector<double> x;
  std::vector<double> z;  // S * M
  std::vector<double> u;
  std::vector<double> g_theta_last;
  std::vector<double> g_x_last;
};

struct AlgorithmConfig {
  double gamma = 0.0;          // stepsize for lsgt/gt/dsgd/d2/centralized
  double alpha = 0.0;          // theta stepsize (must)
  double beta = 0.0;           // x stepsize (must)
  int local_updates = 1;       // E
  int rounds = 1;              // T
  std::size_t batch_size = 1;  // |I|
};

struct RoundReport {
  int round = 0;
  // Vector transmissions this round: one per exchanged vector per directed
  // edge. The gradient-tracking family sends (y, v), so 4 * |edges|;
  // dsgd/d2 send y only (2 * |edges|); must sends (theta, x, z, u)
  // (8 * |edges|).
  long long messages_sent = 0;
};

// Thrown when any state coordinate exceeds 1e12 in magnitude or becomes
// non-finite. Carries the offending round.
struct DivergenceError : std::runtime_error {
  DivergenceError(int round_idx, const std::string& what)
      : std::runtime_error(what), round(round_idx) {}
  int round;
};

// Problem binding shared by the classic (non-hybrid) algorithms.
struct BoundProblem {
  const LossModel* model = nullptr;
  const Partition* partition = nullptr;
};

// --- gradient-tracking family -------------------------------------------

// All agents start from one shared seeded parameter vector; each agent
// draws a fresh batch for its initial gradient and sets v = g_last.
std::vector<AgentState> lsgt_init(const BoundProblem& problem, int n_agents,
                                  std::uint64_t seed, std::size_t batch_size);

// One synchronous round: mixing of (y, v) from a snapshot of the previous
// committed states, carry g_last, then E local steps of
//   y <- y - gamma * v;  g <- fresh batch gradient at y;  v <- v + g - g_old.
RoundReport lsgt_round(std::vector<AgentState>& states, const MixingMatrix& w,
                       const AlgorithmConfig& cfg, const BoundProblem& problem,
                       std::uint64_t seed, int round);

// Single-local-step tracking baseline: mix (y, v), one descent step along
// the mixed tracker, one fresh gradient, tracker correction. Identical
// trajectory to lsgt_round with E = 1 under the same seed.
RoundReport gt_round(std::vector<AgentState>& states, const MixingMatrix& w,
                     const AlgorithmConfig& cfg, const BoundProblem& problem,
                     std::uint64_t seed, int round);

// Consensus SGD baseline without tracking: y <- W y - gamma * g(y).
// The v member is unused.
RoundReport dsgd_round(std::vector<AgentState>& states, const MixingMatrix& w,
                       const AlgorithmConfig& cfg, const BoundProblem& problem,
                       std::uint64_t seed, int round);

// Two-round-history baseline:
//   Y^{r+1} = W (2 Y^r - Y^{r-1} - gamma (G^r - G^{r-1})),
//   Y^1     = W (Y^0 - gamma G^0).
struct D2AgentState {
  std::vector<double> y;
  std::vector<double> y_prev;
  std::vector<double> g_prev;
  bool have_history = false;
};

std::vector<D2AgentState> d2_init(const BoundProblem& problem, int n_agents,
                                  std::uint64_t seed);

// Requires a symmetric mixing matrix whose smallest eigenvalue is > -1/3
// (checked once per matrix); throws std::invalid_argument otherwise.
RoundReport d2_round(std::vector<D2AgentState>& states, const MixingMatrix& w,
                     const AlgorithmConfig& cfg, const BoundProblem& problem,
                     std::uint64_t seed, int round);

// Single-machine reference: params <- params - gamma * batch gradient over
// the pooled index set.
void centralized_sgd_step(std::vector<double>& params, const LossModel& model,
                          std::span<const std::size_t> all_data,
                          std::size_t batch_size, double gamma, Rng& rng);

// --- coupled-variable algorithm -------------------------------------------

// Shared (theta, x) across agents; z_{n,i} = N * B_{n,i} x; u = g_x from a
// fresh per-agent batch.
std::vector<MustAgentState> must_init(const HybridProblem& hp, int n_agents,
                                      std::uint64_t seed,
                                      std::size_t batch_size);

// One synchronous round: mix (theta, x, z, u), carry both gradients, then
// E local steps of
//   theta <- theta - alpha * g_theta;  x <- x - beta * u;
//   z <- z + N * B_n (x_new - x_old);
//   fresh batch -> (g_theta, g_x) at (z, theta);  u <- u + g_x - g_x_old.
RoundReport must_round(std::vector<MustAgentState>& states,
                       const MixingMatrix& w, const AlgorithmConfig& cfg,
                       const HybridProblem& hp, std::uint64_t seed, int round);

// --- optional processing-order override (synchronous-semantics check) ----

// Round functions process agents in index order; these variants take an
// explicit processing order and must commit identical states.
RoundReport lsgt_round_ordered(std::vector<AgentState>& states,
                               const MixingMatrix& w,
                               const AlgorithmConfig& cfg,
                               const BoundProblem& problem, std::uint64_t seed,
                               int round, std::span<const int> process_order);

// --- checkpoints ------------------------------------------------------------

// Binary dump of all agent vectors. Header: magic "GTCK", format version,
// algorithm tag, round, N, p; then per agent the raw little-endian doubles
// of (y, v, g_last).
void save_checkpoint(const std::string& path, const std::string& algorithm,
                     int round, const std::vector<AgentState>& states);

struct Checkpoint {
  std::string algorithm;
  int round = 0;
  std::vector<AgentState> states;
};

Checkpoint load_checkpoint(const std::string& path);

// As above for the coupled-variable state; header carries (K, J, S*M)
// instead of a single p.
void save_must_checkpoint(const std::string& path, int round,
                          const std::vector<MustAgentState>& states);

struct MustCheckpoint {
  int round = 0;
  std::vector<MustAgentState> states;
};

MustCheckpoint load_must_checkpoint(const std::string& path);

}  // namespace gtsim
