#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gtsim/dataset.hpp"
#include "gtsim/rng.hpp"

namespace gtsim {

// Differentiable local objective bound to a dataset. Implementations are
// immutable after construction and evaluation is pure, so one instance can
// serve all agents concurrently.
class LossModel {
 public:
  virtual ~LossModel() = default;

  virtual std::size_t dim() const = 0;
  virtual const Dataset& data() const = 0;

  virtual double sample_loss(std::span<const double> params,
                             std::size_t sample) const = 0;
  // out += weight * grad(loss(params; sample))
  virtual void add_sample_gradient(std::span<const double> params,
                                   std::size_t sample, double weight,
                                   std::span<double> out) const = 0;
  // Top-1 predicted class, or -1 when the model is not a classifier.
  virtual int predict(std::span<const double> params, std::size_t sample) const {
    (void)params;
    (void)sample;
    return -1;
  }
  // Shared initial parameter vector policy.
  virtual void init_params(std::span<double> out, Rng& rng) const = 0;
};

// Mean-over-indices full gradient: (1/|idx|) sum of per-sample gradients.
// Deterministic; throws std::invalid_argument on an empty index set.
std::vector<double> full_gradient(const LossModel& model,
                                  std::span<const double> params,
                                  std::span<const std::size_t> indices);

// Uniform batch of `size` distinct positions out of [0, pool_size),
// returned sorted; Floyd's sampling driven by the supplied stream.
std::vector<std::size_t> draw_batch(std::size_t pool_size, std::size_t size,
                                    Rng& rng);

struct StochasticGradient {
  std::vector<double> gradient;
  std::vector<std::size_t> batch;  // dataset indices actually used
};

// Mini-batch gradient over a uniformly drawn without-replacement batch
// from the agent's partition. Throws if batch_size exceeds the partition.
StochasticGradient stochastic_gradient(const LossModel& model,
                                       std::span<const double> params,
                                       std::span<const std::size_t> partition,
                                       std::size_t batch_size, Rng& rng);

struct LossAccuracy {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Mean loss and top-1 accuracy over the index set. Accuracy is 0 for
// non-classifier models. Throws on an empty index set.
LossAccuracy loss_accuracy(const LossModel& model,
                           std::span<const double> params,
                           std::span<const std::size_t> indices);

// --- concrete models ---------------------------------------------------

// Scalar quadratic residual: loss(y; xi) = 0.5 * (y - xi_0)^2 on the first
// feature. Test workhorse with closed-form gradients.
class QuadraticModel : public LossModel {
 public:
  explicit QuadraticModel(const Dataset& ds) : ds_(ds) {}
  std::size_t dim() const override { return 1; }
  const Dataset& data() const override { return ds_; }
  double sample_loss(std::span<const double> p, std::size_t i) const override;
  void add_sample_gradient(std::span<const double> p, std::size_t i,
                           double w, std::span<double> out) const override;
  void init_params(std::span<double> out, Rng& rng) const override;

 private:
  const Dataset& ds_;
};

// Multinomial logistic regression (softmax linear classifier) with
// cross-entropy loss. Parameter layout: W (d x C, row-major by feature),
// then bias b (C).
class LogisticModel : public LossModel {
 public:
  explicit LogisticModel(const Dataset& ds);
  std::size_t dim() const override { return dim_; }
  const Dataset& data() const override { return ds_; }
  double sample_loss(std::span<const double> p, std::size_t i) const override;
  void add_sample_gradient(std::span<const double> p, std::size_t i,
                           double w, std::span<double> out) const override;
  int predict(std::span<const double> p, std::size_t i) const override;
  void init_params(std::span<double> out, Rng& rng) const override;

 private:
  void logits(std::span<const double> p, std::size_t i, double* out) const;
  const Dataset& ds_;
  std::size_t dim_;
};

// Logistic model plus the smooth non-convex penalty
// lambda * sum_k p_k^2 / (1 + p_k^2), applied per sample so that every
// local objective carries it once.
class NonconvexLogisticModel : public LogisticModel {
 public:
  NonconvexLogisticModel(const Dataset& ds, double lambda = 0.1)
      : LogisticModel(ds), lambda_(lambda) {}
  double sample_loss(std::span<const double> p, std::size_t i) const override;
  void add_sample_gradient(std::span<const double> p, std::size_t i,
                           double w, std::span<double> out) const override;

 private:
  double lambda_;
};

// Two-layer perceptron d -> hidden -> C with ReLU hidden activation,
// softmax output, cross-entropy loss. The ReLU subgradient at 0 is 0.
//
// Parameter layout (fixed, documented): W1 (d x hidden, row-major by input
// feature), b1 (hidden), W2 (hidden x C, row-major by hidden unit), b2 (C).
class MlpModel : public LossModel {
 public:
  MlpModel(const Dataset& ds, int hidden = 30);
  std::size_t dim() const override { return dim_; }
  const Dataset& data() const override { return ds_; }
  int hidden_units() const { return hidden_; }

  double sample_loss(std::span<const double> p, std::size_t i) const override;
  void add_sample_gradient(std::span<const double> p, std::size_t i,
                           double w, std::span<double> out) const override;
  int predict(std::span<const double> p, std::size_t i) const override;
  void init_params(std::span<double> out, Rng& rng) const override;

  std::size_t w1_offset() const { return 0; }
  std::size_t b1_offset() const { return d_ * h_; }
  std::size_t w2_offset() const { return d_ * h_ + h_; }
  std::size_t b2_offset() const { return d_ * h_ + h_ + h_ * c_; }

 private:
  // Forward pass up to output probabilities; hidden/post buffers supplied
  // by the caller to keep evaluation allocation-free.
  void forward(std::span<const double> p, std::size_t i, double* hidden_pre,
               double* probs) const;

  const Dataset& ds_;
  int hidden_;
  std::size_t d_, h_, c_;
  std::size_t dim_;
};

enum class ModelKind { quadratic, logistic, nonconvex_logistic, mlp };

ModelKind parse_model_kind(const std::string& s);
std::string to_string(ModelKind k);

std::unique_ptr<LossModel> make_model(ModelKind kind, const Dataset& ds,
                                      int hidden = 30, double lambda = 0.1);

}  // namespace gtsim
