#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "gtsim/dataset.hpp"
#include "gtsim/rng.hpp"

namespace gtsim {

// Ownership table produced by the hybrid data split: every sample is cut
// into feature patches, and each (sample, patch) pair belongs to exactly
// one agent. Per subset of n_agents samples, first patches go to agents in
// forward order and second patches in reversed order, so agents end up
// holding partial samples with partial features.
struct HybridAssignment {
  int n_agents = 0;
  int patches = 0;
  std::size_t n_samples = 0;
  // patch_owner[i * patches + p] = agent owning patch p of sample i
  std::vector<int> patch_owner;
  // sorted sample ids each agent owns at least one patch of
  std::vector<std::vector<std::size_t>> local_samples;

  int owner(std::size_t sample, int patch) const {
    return patch_owner[sample * static_cast<std::size_t>(patches) + patch];
  }
};

// Shuffle samples, group into subsets of size n_agents, assign patches as
// described above. Requires patches in {1, 2} and n_agents | n_samples.
HybridAssignment partition_hybrid(std::size_t n_samples, int n_agents,
                                  int patches, std::uint64_t seed);

// Objective (1/(N*S)) * sum_i f(B_i x, theta) with B_i = sum_n B_{n,i}.
// Each per-agent map B_{n,i} is realized implicitly through the feature
// blocks the agent owns; a dense materialization exists only in tests.
class HybridProblem {
 public:
  virtual ~HybridProblem() = default;

  virtual std::size_t n_samples() const = 0;  // S
  virtual int n_agents() const = 0;           // N
  virtual std::size_t z_dim() const = 0;      // M, per-sample coupling size
  virtual std::size_t x_dim() const = 0;      // J
  virtual std::size_t theta_dim() const = 0;  // K

  virtual bool owns(int agent, std::size_t sample) const = 0;
  virtual const std::vector<std::size_t>& local_samples(int agent) const = 0;

  // out_z = B_{n,i} x  (all zeros when the agent owns nothing of i)
  virtual void apply_map(int agent, std::size_t sample,
                         std::span<const double> x,
                         std::span<double> out_z) const = 0;
  // out_x += weight * B_{n,i}^T gz
  virtual void apply_map_transpose(int agent, std::size_t sample,
                                   std::span<const double> gz, double weight,
                                   std::span<double> out_x) const = 0;

  virtual double loss(std::span<const double> z, std::span<const double> theta,
                      std::size_t sample) const = 0;
  // out += weight * d f / d theta at (z, theta, sample)
  virtual void add_grad_theta(std::span<const double> z,
                              std::span<const double> theta, std::size_t sample,
                              double weight, std::span<double> out) const = 0;
  // out_z = d f / d z at (z, theta, sample)
  virtual void grad_z(std::span<const double> z, std::span<const double> theta,
                      std::size_t sample, std::span<double> out_z) const = 0;

  virtual void init_theta(std::span<double> out, Rng& rng) const = 0;
  virtual void init_x(std::span<double> out, Rng& rng) const = 0;

  // Top-1 prediction from a resolved coupling vector; -1 if not a classifier.
  virtual int predict(std::span<const double> z, std::span<const double> theta,
                      std::size_t sample) const {
    (void)z;
    (void)theta;
    (void)sample;
    return -1;
  }
};

struct HybridGradients {
  std::vector<double> g_theta;  // K
  std::vector<double> g_x;      // J
};

// Mini-batch gradients from the agent's tracking state:
//   g_theta = (1/(N*|batch|)) sum over batch of d f/d theta (z_{n,xi}, theta)
//   g_x     = (1/|batch|)     sum over batch of B_{n,xi}^T d f/d z (z_{n,xi}, theta)
// z_all is the agent's stacked tracking vector (S * M).
HybridGradients hybrid_gradients(const HybridProblem& hp,
                                 std::span<const double> theta,
                                 std::span<const double> z_all,
                                 std::span<const std::size_t> batch, int agent);

// Resolve the full coupling B_i x = sum_n B_{n,i} x for one sample.
void full_coupling(const HybridProblem& hp, std::size_t sample,
                   std::span<const double> x, std::span<double> out_z);

// Shared block-structured realization: features are split into contiguous
// patch dims, x is a (d x M) weight slab stored input-major, and
// B_{n,i} x = sum over the agent's patch dims j of features[i][j] * x_row(j).
class BlockHybridBase : public HybridProblem {
 public:
  BlockHybridBase(const Dataset& ds, HybridAssignment assignment,
                  std::size_t z_dim);

  std::size_t n_samples() const override { return ds_.n_samples; }
  int n_agents() const override { return assignment_.n_agents; }
  std::size_t z_dim() const override { return m_; }
  std::size_t x_dim() const override { return ds_.n_features * m_; }

  bool owns(int agent, std::size_t sample) const override;
  const std::vector<std::size_t>& local_samples(int agent) const override {
    return assignment_.local_samples[agent];
  }
  void apply_map(int agent, std::size_t sample, std::span<const double> x,
                 std::span<double> out_z) const override;
  void apply_map_transpose(int agent, std::size_t sample,
                           std::span<const double> gz, double weight,
                           std::span<double> out_x) const override;

  const Dataset& data() const { return ds_; }
  const HybridAssignment& assignment() const { return assignment_; }

 protected:
  // [first_dim, last_dim) of one patch
  std::pair<std::size_t, std::size_t> patch_dims(int patch) const;

  const Dataset& ds_;
  HybridAssignment assignment_;
  std::size_t m_;
};

// Patch-split two-layer network: z_i = W1^T phi_i is the coupled first
// layer (x = vec(W1), input-major), theta = [b1, W2, b2], and
// f(z, theta, i) = cross-entropy(softmax(W2^T relu(z + b1) + b2), label_i).
class MlpHybridProblem : public BlockHybridBase {
 public:
  MlpHybridProblem(const Dataset& ds, HybridAssignment assignment, int hidden);

  std::size_t theta_dim() const override { return h_ + h_ * c_ + c_; }
  double loss(std::span<const double> z, std::span<const double> theta,
              std::size_t sample) const override;
  void add_grad_theta(std::span<const double> z, std::span<const double> theta,
                      std::size_t sample, double weight,
                      std::span<double> out) const override;
  void grad_z(std::span<const double> z, std::span<const double> theta,
              std::size_t sample, std::span<double> out_z) const override;
  void init_theta(std::span<double> out, Rng& rng) const override;
  void init_x(std::span<double> out, Rng& rng) const override;
  int predict(std::span<const double> z, std::span<const double> theta,
              std::size_t sample) const override;

 private:
  void output_probs(std::span<const double> z, std::span<const double> theta,
                    double* probs) const;
  std::size_t h_, c_;
};

// Fully quadratic coupled objective for traceable tests:
//   f(z, theta, i) = 0.5 * ||z + P theta - c_i||^2 + 0.5 * lambda * ||theta||^2
// with P a fixed seeded M x K matrix and c_i a per-sample target.
class QuadraticHybridProblem : public BlockHybridBase {
 public:
  QuadraticHybridProblem(const Dataset& ds, HybridAssignment assignment,
                         std::size_t z_dim, std::size_t theta_dim,
                         double lambda, std::uint64_t seed);

  std::size_t theta_dim() const override { return k_; }
  double loss(std::span<const double> z, std::span<const double> theta,
              std::size_t sample) const override;
  void add_grad_theta(std::span<const double> z, std::span<const double> theta,
                      std::size_t sample, double weight,
                      std::span<double> out) const override;
  void grad_z(std::span<const double> z, std::span<const double> theta,
              std::size_t sample, std::span<double> out_z) const override;
  void init_theta(std::span<double> out, Rng& rng) const override;
  void init_x(std::span<double> out, Rng& rng) const override;

  const std::vector<double>& coupling_matrix() const { return p_mat_; }
  const std::vector<double>& targets() const { return targets_; }

 private:
  void residual(std::span<const double> z, std::span<const double> theta,
                std::size_t sample, double* out) const;
  std::size_t k_;
  double lambda_;
  std::vector<double> p_mat_;    // M x K row-major
  std::vector<double> targets_;  // S x M
};

}  // namespace gtsim
