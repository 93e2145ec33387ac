#include "gtsim/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gtsim/vecmath.hpp"

namespace gtsim {

std::vector<double> full_gradient(const LossModel& model,
                                  std::span<const double> params,
                                  std::span<const std::size_t> indices) {
  if (indices.empty())
    throw std::invalid_argument("full_gradient: empty index set");
  std::vector<double> g(model.dim(), 0.0);
  double w = 1.0 / static_cast<double>(indices.size());
  for (std::size_t idx : indices)
    model.add_sample_gradient(params, idx, w, g);
  return g;
}

std::vector<std::size_t> draw_batch(std::size_t pool_size, std::size_t size,
                                    Rng& rng) {
  if (size > pool_size)
    throw std::invalid_argument("draw_batch: batch larger than pool");
  // Floyd's algorithm: uniform over all size-subsets.
  std::vector<std::size_t> picked;
  picked.reserve(size);
  for (std::size_t j = pool_size - size; j < pool_size; ++j) {
    std::size_t t = rng.next_below(j + 1);
    if (std::find(picked.begin(), picked.end(), t) != picked.end())
      picked.push_back(j);
    else
      picked.push_back(t);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

StochasticGradient stochastic_gradient(const LossModel& model,
                                       std::span<const double> params,
                                       std::span<const std::size_t> partition,
                                       std::size_t batch_size, Rng& rng) {
  if (batch_size == 0)
    throw std::invalid_argument("stochastic_gradient: batch size must be positive");
  if (batch_size > partition.size())
    throw std::invalid_argument("stochastic_gradient: batch larger than local data");
  StochasticGradient out;
  std::vector<std::size_t> positions = draw_batch(partition.size(), batch_size, rng);
  out.batch.reserve(batch_size);
  for (std::size_t pos : positions) out.batch.push_back(partition[pos]);
  out.gradient.assign(model.dim(), 0.0);
  double w = 1.0 / static_cast<double>(batch_size);
  for (std::size_t idx : out.batch)
    model.add_sample_gradient(params, idx, w, out.gradient);
  return out;
}

LossAccuracy loss_accuracy(const LossModel& model,
                           std::span<const double> params,
                           std::span<const std::size_t> indices) {
  if (indices.empty())
    throw std::invalid_argument("loss_accuracy: empty index set");
  LossAccuracy out;
  std::size_t correct = 0;
  for (std::size_t idx : indices) {
    out.loss += model.sample_loss(params, idx);
    if (model.predict(params, idx) == model.data().labels[idx]) ++correct;
  }
  out.loss /= static_cast<double>(indices.size());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(indices.size());
  return out;
}

// --- QuadraticModel -----------------------------------------------------

double QuadraticModel::sample_loss(std::span<const double> p,
                                   std::size_t i) const {
  double r = p[0] - ds_.row(i)[0];
  return 0.5 * r * r;
}

void QuadraticModel::add_sample_gradient(std::span<const double> p,
                                         std::size_t i, double w,
                                         std::span<double> out) const {
  out[0] += w * (p[0] - ds_.row(i)[0]);
}

void QuadraticModel::init_params(std::span<double> out, Rng& rng) const {
  out[0] = rng.next_gaussian();
}

// --- LogisticModel ------------------------------------------------------

LogisticModel::LogisticModel(const Dataset& ds)
    : ds_(ds),
      dim_(ds.n_features * static_cast<std::size_t>(ds.n_classes) +
           static_cast<std::size_t>(ds.n_classes)) {}

void LogisticModel::logits(std::span<const double> p, std::size_t i,
                           double* out) const {
  const std::size_t d = ds_.n_features;
  const std::size_t c = static_cast<std::size_t>(ds_.n_classes);
  const double* x = ds_.row(i);
  const double* bias = p.data() + d * c;
  for (std::size_t k = 0; k < c; ++k) out[k] = bias[k];
  for (std::size_t j = 0; j < d; ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    const double* wrow = p.data() + j * c;
    for (std::size_t k = 0; k < c; ++k) out[k] += xj * wrow[k];
  }
}

namespace {

// In place: logits -> softmax probabilities; returns log-sum-exp.
double softmax_inplace(double* z, std::size_t c) {
  double zmax = z[0];
  for (std::size_t k = 1; k < c; ++k) zmax = std::max(zmax, z[k]);
  double sum = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    z[k] = std::exp(z[k] - zmax);
    sum += z[k];
  }
  for (std::size_t k = 0; k < c; ++k) z[k] /= sum;
  return zmax + std::log(sum);
}

}  // namespace

double LogisticModel::sample_loss(std::span<const double> p,
                                  std::size_t i) const {
  const std::size_t c = static_cast<std::size_t>(ds_.n_classes);
  std::vector<double> z(c);
  logits(p, i, z.data());
  double zmax = z[0];
  for (std::size_t k = 1; k < c; ++k) zmax = std::max(zmax, z[k]);
  double sum = 0.0;
  for (std::size_t k = 0; k < c; ++k) sum += std::exp(z[k] - zmax);
  double lse = zmax + std::log(sum);
  return lse - z[static_cast<std::size_t>(ds_.labels[i])];
}

void LogisticModel::add_sample_gradient(std::span<const double> p,
                                        std::size_t i, double w,
                                        std::span<double> out) const {
  const std::size_t d = ds_.n_features;
  const std::size_t c = static_cast<std::size_t>(ds_.n_classes);
  std::vector<double> z(c);
  logits(p, i, z.data());
  softmax_inplace(z.data(), c);
  z[static_cast<std::size_t>(ds_.labels[i])] -= 1.0;  // dL/dlogits
  const double* x = ds_.row(i);
  for (std::size_t j = 0; j < d; ++j) {
    const double wx = w * x[j];
    if (wx == 0.0) continue;
    double* grow = out.data() + j * c;
    for (std::size_t k = 0; k < c; ++k) grow[k] += wx * z[k];
  }
  double* gbias = out.data() + d * c;
  for (std::size_t k = 0; k < c; ++k) gbias[k] += w * z[k];
}

int LogisticModel::predict(std::span<const double> p, std::size_t i) const {
  const std::size_t c = static_cast<std::size_t>(ds_.n_classes);
  std::vector<double> z(c);
  logits(p, i, z.data());
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

void LogisticModel::init_params(std::span<double> out, Rng& rng) const {
  double scale = 1.0 / std::sqrt(static_cast<double>(ds_.n_features));
  for (double& v : out) v = scale * rng.next_gaussian();
}

// --- NonconvexLogisticModel ----------------------------------------------

double NonconvexLogisticModel::sample_loss(std::span<const double> p,
                                           std::size_t i) const {
  double base = LogisticModel::sample_loss(p, i);
  double pen = 0.0;
  for (double v : p) pen += v * v / (1.0 + v * v);
  return base + lambda_ * pen;
}

void NonconvexLogisticModel::add_sample_gradient(std::span<const double> p,
                                                 std::size_t i, double w,
                                                 std::span<double> out) const {
  LogisticModel::add_sample_gradient(p, i, w, out);
  for (std::size_t k = 0; k < p.size(); ++k) {
    double denom = 1.0 + p[k] * p[k];
    out[k] += w * lambda_ * 2.0 * p[k] / (denom * denom);
  }
}

// --- MlpModel -------------------------------------------------------------

MlpModel::MlpModel(const Dataset& ds, int hidden)
    : ds_(ds),
      hidden_(hidden),
      d_(ds.n_features),
      h_(static_cast<std::size_t>(hidden)),
      c_(static_cast<std::size_t>(ds.n_classes)) {
  if (hidden < 1) throw std::invalid_argument("MlpModel: hidden units must be positive");
  dim_ = d_ * h_ + h_ + h_ * c_ + c_;
}

void MlpModel::forward(std::span<const double> p, std::size_t i,
                       double* hidden_pre, double* probs) const {
  const double* x = ds_.row(i);
  const double* w1 = p.data() + w1_offset();
  const double* b1 = p.data() + b1_offset();
  const double* w2 = p.data() + w2_offset();
  const double* b2 = p.data() + b2_offset();

  for (std::size_t h = 0; h < h_; ++h) hidden_pre[h] = b1[h];
  for (std::size_t j = 0; j < d_; ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    const double* row = w1 + j * h_;
    for (std::size_t h = 0; h < h_; ++h) hidden_pre[h] += xj * row[h];
  }
  for (std::size_t k = 0; k < c_; ++k) probs[k] = b2[k];
  for (std::size_t h = 0; h < h_; ++h) {
    double a = hidden_pre[h] > 0.0 ? hidden_pre[h] : 0.0;
    if (a == 0.0) continue;
    const double* row = w2 + h * c_;
    for (std::size_t k = 0; k < c_; ++k) probs[k] += a * row[k];
  }
  softmax_inplace(probs, c_);
}

double MlpModel::sample_loss(std::span<const double> p, std::size_t i) const {
  std::vector<double> pre(h_), probs(c_);
  forward(p, i, pre.data(), probs.data());
  double py = probs[static_cast<std::size_t>(ds_.labels[i])];
  return -std::log(std::max(py, 1e-300));
}

void MlpModel::add_sample_gradient(std::span<const double> p, std::size_t i,
                                   double w, std::span<double> out) const {
  std::vector<double> pre(h_), probs(c_), delta_h(h_);
  forward(p, i, pre.data(), probs.data());

  const double* x = ds_.row(i);
  const double* w2 = p.data() + w2_offset();
  double* gw1 = out.data() + w1_offset();
  double* gb1 = out.data() + b1_offset();
  double* gw2 = out.data() + w2_offset();
  double* gb2 = out.data() + b2_offset();

  probs[static_cast<std::size_t>(ds_.labels[i])] -= 1.0;  // dL/dlogits

  for (std::size_t h = 0; h < h_; ++h) {
    double act = pre[h] > 0.0 ? pre[h] : 0.0;
    const double* w2row = w2 + h * c_;
    double* gw2row = gw2 + h * c_;
    double dh = 0.0;
    for (std::size_t k = 0; k < c_; ++k) {
      gw2row[k] += w * act * probs[k];
      dh += w2row[k] * probs[k];
    }
    delta_h[h] = pre[h] > 0.0 ? dh : 0.0;  // ReLU'(0) = 0
  }
  for (std::size_t k = 0; k < c_; ++k) gb2[k] += w * probs[k];

  for (std::size_t j = 0; j < d_; ++j) {
    const double wx = w * x[j];
    if (wx == 0.0) continue;
    double* grow = gw1 + j * h_;
    for (std::size_t h = 0; h < h_; ++h) grow[h] += wx * delta_h[h];
  }
  for (std::size_t h = 0; h < h_; ++h) gb1[h] += w * delta_h[h];
}

int MlpModel::predict(std::span<const double> p, std::size_t i) const {
  std::vector<double> pre(h_), probs(c_);
  forward(p, i, pre.data(), probs.data());
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) -
                          probs.begin());
}

void MlpModel::init_params(std::span<double> out, Rng& rng) const {
  // He-style fan-in scaling per layer, zero biases.
  double s1 = std::sqrt(2.0 / static_cast<double>(d_));
  double s2 = std::sqrt(2.0 / static_cast<double>(h_));
  for (std::size_t k = 0; k < d_ * h_; ++k) out[k] = s1 * rng.next_gaussian();
  for (std::size_t k = b1_offset(); k < w2_offset(); ++k) out[k] = 0.0;
  for (std::size_t k = w2_offset(); k < b2_offset(); ++k)
    out[k] = s2 * rng.next_gaussian();
  for (std::size_t k = b2_offset(); k < dim_; ++k) out[k] = 0.0;
}

// --- factory ---------------------------------------------------------------

ModelKind parse_model_kind(const std::string& s) {
  if (s == "quadratic") return ModelKind::quadratic;
  if (s == "logistic") return ModelKind::logistic;
  if (s == "nonconvex_logistic") return ModelKind::nonconvex_logistic;
  if (s == "mlp") return ModelKind::mlp;
  throw std::invalid_argument("unknown model kind: " + s);
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::quadratic: return "quadratic";
    case ModelKind::logistic: return "logistic";
    case ModelKind::nonconvex_logistic: return "nonconvex_logistic";
    case ModelKind::mlp: return "mlp";
  }
  return "?";
}

std::unique_ptr<LossModel> make_model(ModelKind kind, const Dataset& ds,
                                      int hidden, double lambda) {
  switch (kind) {
    case ModelKind::quadratic: return std::make_unique<QuadraticModel>(ds);
    case ModelKind::logistic: return std::make_unique<LogisticModel>(ds);
    case ModelKind::nonconvex_logistic:
      return std::make_unique<NonconvexLogisticModel>(ds, lambda);
    case ModelKind::mlp: return std::make_unique<MlpModel>(ds, hidden);
  }
  throw std::invalid_argument("make_model: unknown kind");
}

}  // namespace gtsim
