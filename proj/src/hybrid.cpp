#include "gtsim/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gtsim/vecmath.hpp"

namespace gtsim {

HybridAssignment partition_hybrid(std::size_t n_samples, int n_agents,
                                  int patches, std::uint64_t seed) {
  if (n_agents < 1) throw std::invalid_argument("partition_hybrid: n_agents must be positive");
  if (patches != 1 && patches != 2)
    throw std::invalid_argument("partition_hybrid: patches must be 1 or 2");
  if (n_samples % static_cast<std::size_t>(n_agents) != 0)
    throw std::invalid_argument("partition_hybrid: n_agents must divide n_samples");

  Rng rng = derive_stream(seed, StreamKind::partition, 2);
  std::vector<std::size_t> order(n_samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n_samples; i > 1; --i) {
    std::size_t j = rng.next_below(i);
    std::swap(order[i - 1], order[j]);
  }

  HybridAssignment a;
  a.n_agents = n_agents;
  a.patches = patches;
  a.n_samples = n_samples;
  a.patch_owner.assign(n_samples * static_cast<std::size_t>(patches), -1);
  a.local_samples.resize(n_agents);

  const std::size_t subset = static_cast<std::size_t>(n_agents);
  for (std::size_t pos = 0; pos < n_samples; ++pos) {
    std::size_t sample = order[pos];
    int k = static_cast<int>(pos % subset);
    int fwd = k;                 // first patch, forward order
    int rev = n_agents - 1 - k;  // second patch, inverted order
    a.patch_owner[sample * patches + 0] = fwd;
    if (patches == 2) a.patch_owner[sample * patches + 1] = rev;
  }
  for (std::size_t i = 0; i < n_samples; ++i)
    for (int p = 0; p < patches; ++p) {
      int owner = a.patch_owner[i * patches + p];
      a.local_samples[owner].push_back(i);
    }
  for (auto& v : a.local_samples) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    if (v.empty())
      throw std::runtime_error("partition_hybrid: agent received no samples");
  }
  return a;
}

HybridGradients hybrid_gradients(const HybridProblem& hp,
                                 std::span<const double> theta,
                                 std::span<const double> z_all,
                                 std::span<const std::size_t> batch,
                                 int agent) {
  if (batch.empty())
    throw std::invalid_argument("hybrid_gradients: empty batch");
  if (theta.size() != hp.theta_dim() ||
      z_all.size() != hp.n_samples() * hp.z_dim())
    throw std::invalid_argument("hybrid_gradients: dimension mismatch");

  const std::size_t m = hp.z_dim();
  HybridGradients out;
  out.g_theta.assign(hp.theta_dim(), 0.0);
  out.g_x.assign(hp.x_dim(), 0.0);
  std::vector<double> gz(m);

  const double w_theta =
      1.0 / (static_cast<double>(hp.n_agents()) * static_cast<double>(batch.size()));
  const double w_x = 1.0 / static_cast<double>(batch.size());
  for (std::size_t xi : batch) {
    std::span<const double> z(z_all.data() + xi * m, m);
    hp.add_grad_theta(z, theta, xi, w_theta, out.g_theta);
    hp.grad_z(z, theta, xi, gz);
    hp.apply_map_transpose(agent, xi, gz, w_x, out.g_x);
  }
  return out;
}

void full_coupling(const HybridProblem& hp, std::size_t sample,
                   std::span<const double> x, std::span<double> out_z) {
  fill_zero(out_z);
  std::vector<double> part(hp.z_dim());
  for (int n = 0; n < hp.n_agents(); ++n) {
    if (!hp.owns(n, sample)) continue;
    hp.apply_map(n, sample, x, part);
    for (std::size_t k = 0; k < part.size(); ++k) out_z[k] += part[k];
  }
}

// --- BlockHybridBase -------------------------------------------------------

BlockHybridBase::BlockHybridBase(const Dataset& ds, HybridAssignment assignment,
                                 std::size_t z_dim)
    : ds_(ds), assignment_(std::move(assignment)), m_(z_dim) {
  if (assignment_.n_samples != ds.n_samples)
    throw std::invalid_argument("hybrid: assignment does not match dataset");
  if (ds.n_features % static_cast<std::size_t>(assignment_.patches) != 0)
    throw std::invalid_argument("hybrid: patches must divide feature count");
}

std::pair<std::size_t, std::size_t> BlockHybridBase::patch_dims(int patch) const {
  std::size_t width = ds_.n_features / static_cast<std::size_t>(assignment_.patches);
  return {static_cast<std::size_t>(patch) * width,
          static_cast<std::size_t>(patch + 1) * width};
}

bool BlockHybridBase::owns(int agent, std::size_t sample) const {
  for (int p = 0; p < assignment_.patches; ++p)
    if (assignment_.owner(sample, p) == agent) return true;
  return false;
}

void BlockHybridBase::apply_map(int agent, std::size_t sample,
                                std::span<const double> x,
                                std::span<double> out_z) const {
  fill_zero(out_z);
  const double* feat = ds_.row(sample);
  for (int p = 0; p < assignment_.patches; ++p) {
    if (assignment_.owner(sample, p) != agent) continue;
    auto [lo, hi] = patch_dims(p);
    for (std::size_t j = lo; j < hi; ++j) {
      const double fj = feat[j];
      if (fj == 0.0) continue;
      const double* row = x.data() + j * m_;
      for (std::size_t k = 0; k < m_; ++k) out_z[k] += fj * row[k];
    }
  }
}

void BlockHybridBase::apply_map_transpose(int agent, std::size_t sample,
                                          std::span<const double> gz,
                                          double weight,
                                          std::span<double> out_x) const {
  const double* feat = ds_.row(sample);
  for (int p = 0; p < assignment_.patches; ++p) {
    if (assignment_.owner(sample, p) != agent) continue;
    auto [lo, hi] = patch_dims(p);
    for (std::size_t j = lo; j < hi; ++j) {
      const double wf = weight * feat[j];
      if (wf == 0.0) continue;
      double* row = out_x.data() + j * m_;
      for (std::size_t k = 0; k < m_; ++k) row[k] += wf * gz[k];
    }
  }
}

// --- MlpHybridProblem -------------------------------------------------------

MlpHybridProblem::MlpHybridProblem(const Dataset& ds,
                                   HybridAssignment assignment, int hidden)
    : BlockHybridBase(ds, std::move(assignment), static_cast<std::size_t>(hidden)),
      h_(static_cast<std::size_t>(hidden)),
      c_(static_cast<std::size_t>(ds.n_classes)) {
  if (hidden < 1) throw std::invalid_argument("MlpHybridProblem: hidden must be positive");
}

namespace {

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

void MlpHybridProblem::output_probs(std::span<const double> z,
                                    std::span<const double> theta,
                                    double* probs) const {
  const double* b1 = theta.data();
  const double* w2 = theta.data() + h_;
  const double* b2 = theta.data() + h_ + h_ * c_;
  for (std::size_t k = 0; k < c_; ++k) probs[k] = b2[k];
  for (std::size_t h = 0; h < h_; ++h) {
    double pre = z[h] + b1[h];
    double act = pre > 0.0 ? pre : 0.0;
    if (act == 0.0) continue;
    const double* row = w2 + h * c_;
    for (std::size_t k = 0; k < c_; ++k) probs[k] += act * row[k];
  }
  softmax_inplace(probs, c_);
}

double MlpHybridProblem::loss(std::span<const double> z,
                              std::span<const double> theta,
                              std::size_t sample) const {
  std::vector<double> probs(c_);
  output_probs(z, theta, probs.data());
  double py = probs[static_cast<std::size_t>(ds_.labels[sample])];
  return -std::log(std::max(py, 1e-300));
}

void MlpHybridProblem::add_grad_theta(std::span<const double> z,
                                      std::span<const double> theta,
                                      std::size_t sample, double weight,
                                      std::span<double> out) const {
  std::vector<double> probs(c_);
  output_probs(z, theta, probs.data());
  probs[static_cast<std::size_t>(ds_.labels[sample])] -= 1.0;

  const double* b1 = theta.data();
  const double* w2 = theta.data() + h_;
  double* gb1 = out.data();
  double* gw2 = out.data() + h_;
  double* gb2 = out.data() + h_ + h_ * c_;

  for (std::size_t h = 0; h < h_; ++h) {
    double pre = z[h] + b1[h];
    double act = pre > 0.0 ? pre : 0.0;
    const double* w2row = w2 + h * c_;
    double* gw2row = gw2 + h * c_;
    double dh = 0.0;
    for (std::size_t k = 0; k < c_; ++k) {
      gw2row[k] += weight * act * probs[k];
      dh += w2row[k] * probs[k];
    }
    gb1[h] += weight * (pre > 0.0 ? dh : 0.0);
  }
  for (std::size_t k = 0; k < c_; ++k) gb2[k] += weight * probs[k];
}

void MlpHybridProblem::grad_z(std::span<const double> z,
                              std::span<const double> theta,
                              std::size_t sample,
                              std::span<double> out_z) const {
  std::vector<double> probs(c_);
  output_probs(z, theta, probs.data());
  probs[static_cast<std::size_t>(ds_.labels[sample])] -= 1.0;

  const double* b1 = theta.data();
  const double* w2 = theta.data() + h_;
  for (std::size_t h = 0; h < h_; ++h) {
    double pre = z[h] + b1[h];
    if (pre > 0.0) {
      const double* row = w2 + h * c_;
      double dh = 0.0;
      for (std::size_t k = 0; k < c_; ++k) dh += row[k] * probs[k];
      out_z[h] = dh;
    } else {
      out_z[h] = 0.0;
    }
  }
}

void MlpHybridProblem::init_theta(std::span<double> out, Rng& rng) const {
  double s2 = std::sqrt(2.0 / static_cast<double>(h_));
  for (std::size_t k = 0; k < h_; ++k) out[k] = 0.0;
  for (std::size_t k = h_; k < h_ + h_ * c_; ++k) out[k] = s2 * rng.next_gaussian();
  for (std::size_t k = h_ + h_ * c_; k < theta_dim(); ++k) out[k] = 0.0;
}

void MlpHybridProblem::init_x(std::span<double> out, Rng& rng) const {
  double s1 = std::sqrt(2.0 / static_cast<double>(ds_.n_features));
  for (double& v : out) v = s1 * rng.next_gaussian();
}

int MlpHybridProblem::predict(std::span<const double> z,
                              std::span<const double> theta,
                              std::size_t sample) const {
  (void)sample;
  std::vector<double> probs(c_);
  output_probs(z, theta, probs.data());
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) -
                          probs.begin());
}

// --- QuadraticHybridProblem ---------------------------------------------

QuadraticHybridProblem::QuadraticHybridProblem(const Dataset& ds,
                                               HybridAssignment assignment,
                                               std::size_t z_dim,
                                               std::size_t theta_dim,
                                               double lambda,
                                               std::uint64_t seed)
    : BlockHybridBase(ds, std::move(assignment), z_dim),
      k_(theta_dim),
      lambda_(lambda) {
  Rng rng = derive_stream(seed, StreamKind::dataset, 99);
  p_mat_.resize(m_ * k_);
  for (double& v : p_mat_) v = rng.next_gaussian();
  targets_.resize(ds_.n_samples * m_);
  for (double& v : targets_) v = rng.next_gaussian();
}

void QuadraticHybridProblem::residual(std::span<const double> z,
                                      std::span<const double> theta,
                                      std::size_t sample, double* out) const {
  const double* c = &targets_[sample * m_];
  for (std::size_t i = 0; i < m_; ++i) {
    double pi = 0.0;
    const double* prow = &p_mat_[i * k_];
    for (std::size_t j = 0; j < k_; ++j) pi += prow[j] * theta[j];
    out[i] = z[i] + pi - c[i];
  }
}

double QuadraticHybridProblem::loss(std::span<const double> z,
                                    std::span<const double> theta,
                                    std::size_t sample) const {
  std::vector<double> r(m_);
  residual(z, theta, sample, r.data());
  double s = 0.0;
  for (double v : r) s += v * v;
  double tn = 0.0;
  for (double v : theta) tn += v * v;
  return 0.5 * s + 0.5 * lambda_ * tn;
}

void QuadraticHybridProblem::add_grad_theta(std::span<const double> z,
                                            std::span<const double> theta,
                                            std::size_t sample, double weight,
                                            std::span<double> out) const {
  std::vector<double> r(m_);
  residual(z, theta, sample, r.data());
  for (std::size_t j = 0; j < k_; ++j) {
    double s = lambda_ * theta[j];
    for (std::size_t i = 0; i < m_; ++i) s += p_mat_[i * k_ + j] * r[i];
    out[j] += weight * s;
  }
}

void QuadraticHybridProblem::grad_z(std::span<const double> z,
                                    std::span<const double> theta,
                                    std::size_t sample,
                                    std::span<double> out_z) const {
  residual(z, theta, sample, out_z.data());
}

void QuadraticHybridProblem::init_theta(std::span<double> out, Rng& rng) const {
  for (double& v : out) v = rng.next_gaussian();
}

void QuadraticHybridProblem::init_x(std::span<double> out, Rng& rng) const {
  for (double& v : out) v = rng.next_gaussian();
}

}  // namespace gtsim
