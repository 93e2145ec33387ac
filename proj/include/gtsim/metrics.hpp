#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gtsim/algorithms.hpp"

namespace gtsim {

// Per-evaluation diagnostics. The phi fields are single-realization
// squared Frobenius deviations from the across-agent average (empirical
// estimates of the expected consensus/tracking errors); they are zero
// exactly when all agents share identical states.
struct MetricsRecord {
  int round = 0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
  double stationarity_gap = 0.0;
  double phi_y = 0.0;
  double phi_v = 0.0;
  // coupled-variable runs only
  double phi_theta = 0.0;
  double phi_x = 0.0;
  double phi_z = 0.0;
  double phi_u = 0.0;
  long long messages_cumulative = 0;
};

// || (1/N) sum_n grad f_n(y_n) ||^2 with each f_n the full-batch local
// objective over the agent's entire partition.
double stationarity_gap(const std::vector<AgentState>& states,
                        const LossModel& model, const Partition& partition);

struct ConsensusErrors {
  double phi_y = 0.0;
  double phi_v = 0.0;
};

// Squared Frobenius deviations sum_n ||y_n - ybar||^2 and the same for v.
// Agents with no v variable contribute zero to phi_v.
ConsensusErrors consensus_errors(const std::vector<AgentState>& states);

struct MustConsensusErrors {
  double phi_theta = 0.0;
  double phi_x = 0.0;
  double phi_z = 0.0;
  double phi_u = 0.0;
};

MustConsensusErrors must_consensus_errors(const std::vector<MustAgentState>& states);

// Residuals of the two conservation laws the tracking recursions keep
// exactly (up to floating-point error):
//   sum_n v_n == sum_n g_last_n
// for the gradient-tracking family, and per sample
//   (1/N) sum_n z_{n,i} == sum_n B_{n,i} x_n,  (1/N) sum_n (u_n - g_x_n) == 0
// for the coupled-variable algorithm.
double tracking_conservation_residual(const std::vector<AgentState>& states);

struct MustConservation {
  double z_residual_max = 0.0;  // max over samples of ||zbar_i - sum_n B_{n,i} x_n||
  double u_residual = 0.0;      // ||ubar - gbar_x||
};

MustConservation must_conservation(const std::vector<MustAgentState>& states,
                                   const HybridProblem& hp);

// Average over agents of the squared gradient norms of the coupled
// objective evaluated at each agent's own (x_n, theta_n) with the exact
// coupling B_i x_n resolved across all agents.
double must_stationarity_gap(const std::vector<MustAgentState>& states,
                             const HybridProblem& hp);

// --- theoretical rate evaluators -------------------------------------------

struct TheoryConstants {
  double smoothness = 0.0;      // L
  double sigma2 = 0.0;          // gradient-variance bound
  double f0_minus_flb = 0.0;    // F(ybar^0) - lower bound
  double phi_v0 = 0.0;          // initial tracking error
  double lambda_w = 0.0;
  double n_agents = 0.0;        // N
  double local_updates = 0.0;   // E
  double rounds = 0.0;          // T
  double batch_size = 0.0;      // |I|
  double gamma = 0.0;
};

// Rate bound for the tracking algorithm with local updates:
//   4 (F0 - Flb) / (gamma E T) + 40 L gamma sigma^2 / (N |I|)
//   + [16 (1+7 lw^2)^2 E^2 L^2 gamma^2 / (1-lw^2)^4]
//     * (2577 N sigma^2 / |I| + 111 phi_v0 / T)
// Requires gamma < 1, non-negative fields, lambda_w < 1.
double theorem1_rhs(const TheoryConstants& tc);

struct BoundWithFlag {
  double value = 0.0;
  bool e_condition_ok = true;
};

// Same bound at the prescribed stepsize gamma = sqrt(N/(E T)); the flag
// reports whether E <= (T / N^5)^(1/3) holds.
BoundWithFlag corollary1_rhs(TheoryConstants tc);

struct MustTheoryConstants {
  double smoothness = 0.0;    // L
  double sigma2 = 0.0;
  double f0_minus_flb = 0.0;  // coupled objective at the common start minus lower bound
  double phi_z0 = 0.0;
  double phi_u0 = 0.0;
  double lambda_w = 0.0;
  double b_max = 0.0;  // bound on ||B_{n,i}||
  double n_agents = 0.0;
  double local_updates = 0.0;
  double rounds = 0.0;
  double batch_size = 0.0;
  double n_samples = 0.0;  // S
};

// Rate bound for the coupled-variable algorithm at alpha = beta =
// sqrt(N/(E T)); the flag reports whether E <= T^(1/3) / N^3 holds.
BoundWithFlag theorem2_rhs(const MustTheoryConstants& tc);

// --- empirical constant estimation ---------------------------------------

struct EstimatedConstants {
  double smoothness = 0.0;  // lower-bound estimate of L
  double sigma2 = 0.0;      // lower-bound estimate of the variance constant
};

// L-hat: max over probe pairs of ||grad F(a) - grad F(b)|| / ||a - b|| with
// F the full-data objective; sigma2-hat: |I| times the mean squared
// deviation of batch gradients from the full local gradient. When the
// number of distinct batches of an agent is small (<= 256) the deviation
// is enumerated exactly instead of sampled. Both are lower-bound estimates.
EstimatedConstants estimate_constants(const LossModel& model,
                                      const Partition& partition,
                                      int n_probes, std::size_t batch_size,
                                      std::uint64_t seed);

}  // namespace gtsim
