#include "gtsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gtsim/vecmath.hpp"

namespace gtsim {

double stationarity_gap(const std::vector<AgentState>& states,
                        const LossModel& model, const Partition& partition) {
  if (states.empty()) throw std::invalid_argument("stationarity_gap: no states");
  const std::size_t dim = model.dim();
  std::vector<double> avg(dim, 0.0);
  for (int n = 0; n < partition.n_agents(); ++n) {
    std::vector<double> g = full_gradient(model, states[n].y, partition.agent(n));
    axpy(1.0, g, avg);
  }
  double inv_n = 1.0 / static_cast<double>(states.size());
  for (double& v : avg) v *= inv_n;
  return squared_norm(avg);
}

namespace {

double frobenius_deviation(const std::vector<const std::vector<double>*>& rows) {
  if (rows.empty() || rows[0]->empty()) return 0.0;
  const std::size_t dim = rows[0]->size();
  std::vector<double> mean(dim, 0.0);
  for (const auto* r : rows) axpy(1.0, *r, mean);
  double inv_n = 1.0 / static_cast<double>(rows.size());
  for (double& v : mean) v *= inv_n;
  double total = 0.0;
  for (const auto* r : rows) {
    for (std::size_t i = 0; i < dim; ++i) {
      double d = (*r)[i] - mean[i];
      total += d * d;
    }
  }
  return total;
}

}  // namespace

ConsensusErrors consensus_errors(const std::vector<AgentState>& states) {
  ConsensusErrors out;
  std::vector<const std::vector<double>*> ys, vs;
  for (const auto& s : states) {
    ys.push_back(&s.y);
    if (!s.v.empty()) vs.push_back(&s.v);
  }
  out.phi_y = frobenius_deviation(ys);
  out.phi_v = vs.size() == states.size() ? frobenius_deviation(vs) : 0.0;
  return out;
}

MustConsensusErrors must_consensus_errors(const std::vector<MustAgentState>& states) {
  MustConsensusErrors out;
  std::vector<const std::vector<double>*> rows;
  auto collect = [&](auto member) {
    rows.clear();
    for (const auto& s : states) rows.push_back(&(s.*member));
    return frobenius_deviation(rows);
  };
  out.phi_theta = collect(&MustAgentState::theta);
  out.phi_x = collect(&MustAgentState::x);
  out.phi_z = collect(&MustAgentState::z);
  out.phi_u = collect(&MustAgentState::u);
  return out;
}

double tracking_conservation_residual(const std::vector<AgentState>& states) {
  if (states.empty()) return 0.0;
  const std::size_t dim = states[0].v.size();
  std::vector<double> sum_v(dim, 0.0), sum_g(dim, 0.0);
  for (const auto& s : states) {
    axpy(1.0, s.v, sum_v);
    axpy(1.0, s.g_last, sum_g);
  }
  double num = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    double d = sum_v[i] - sum_g[i];
    num += d * d;
  }
  return std::sqrt(num);
}

MustConservation must_conservation(const std::vector<MustAgentState>& states,
                                   const HybridProblem& hp) {
  MustConservation out;
  const std::size_t m = hp.z_dim();
  const std::size_t s_count = hp.n_samples();
  const int n_agents = static_cast<int>(states.size());
  std::vector<double> zbar(m), bsum(m), bz(m);
  for (std::size_t i = 0; i < s_count; ++i) {
    fill_zero(zbar);
    fill_zero(bsum);
    for (int n = 0; n < n_agents; ++n) {
      const double* zrow = &states[n].z[i * m];
      for (std::size_t k = 0; k < m; ++k) zbar[k] += zrow[k];
      if (hp.owns(n, i)) {
        hp.apply_map(n, i, states[n].x, bz);
        for (std::size_t k = 0; k < m; ++k) bsum[k] += bz[k];
      }
    }
    double inv_n = 1.0 / static_cast<double>(n_agents);
    double r = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      double d = zbar[k] * inv_n - bsum[k];
      r += d * d;
    }
    out.z_residual_max = std::max(out.z_residual_max, std::sqrt(r));
  }
  std::vector<double> du(hp.x_dim(), 0.0);
  for (const auto& st : states)
    for (std::size_t k = 0; k < du.size(); ++k)
      du[k] += st.u[k] - st.g_x_last[k];
  double inv_n = 1.0 / static_cast<double>(n_agents);
  for (double& v : du) v *= inv_n;
  out.u_residual = norm(du);
  return out;
}

double must_stationarity_gap(const std::vector<MustAgentState>& states,
                             const HybridProblem& hp) {
  const int n_agents = static_cast<int>(states.size());
  const std::size_t m = hp.z_dim();
  const std::size_t s_count = hp.n_samples();
  const double w = 1.0 / (static_cast<double>(n_agents) * static_cast<double>(s_count));

  double total = 0.0;
  std::vector<double> zi(m), gz(m);
  for (int n = 0; n < n_agents; ++n) {
    std::vector<double> g_theta(hp.theta_dim(), 0.0);
    std::vector<double> g_x(hp.x_dim(), 0.0);
    for (std::size_t i = 0; i < s_count; ++i) {
      full_coupling(hp, i, states[n].x, zi);
      hp.add_grad_theta(zi, states[n].theta, i, w, g_theta);
      hp.grad_z(zi, states[n].theta, i, gz);
      for (int t = 0; t < n_agents; ++t)
        if (hp.owns(t, i)) hp.apply_map_transpose(t, i, gz, w, g_x);
    }
    total += squared_norm(g_theta) + squared_norm(g_x);
  }
  return total / static_cast<double>(n_agents);
}

// --- theoretical rate evaluators -------------------------------------------

namespace {

void require_nonneg(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string("bound evaluator: ") + name +
                                " must be finite and non-negative");
}

}  // namespace

double theorem1_rhs(const TheoryConstants& tc) {
  require_nonneg(tc.smoothness, "L");
  require_nonneg(tc.sigma2, "sigma2");
  require_nonneg(tc.f0_minus_flb, "f0_minus_flb");
  require_nonneg(tc.phi_v0, "phi_v0");
  require_nonneg(tc.lambda_w, "lambda_w");
  if (tc.lambda_w >= 1.0)
    throw std::invalid_argument("theorem1_rhs: lambda_w must be < 1");
  if (!(tc.gamma > 0.0) || tc.gamma >= 1.0)
    throw std::invalid_argument("theorem1_rhs: gamma must be in (0, 1)");
  if (!(tc.n_agents >= 1.0) || !(tc.local_updates >= 1.0) ||
      !(tc.rounds >= 1.0) || !(tc.batch_size >= 1.0))
    throw std::invalid_argument("theorem1_rhs: N, E, T, |I| must be >= 1");

  const double lw2 = tc.lambda_w * tc.lambda_w;
  const double one_minus = 1.0 - lw2;
  const double net_coeff = (1.0 + 7.0 * lw2) * (1.0 + 7.0 * lw2) /
                           (one_minus * one_minus * one_minus * one_minus);
  const double term1 =
      4.0 * tc.f0_minus_flb / (tc.gamma * tc.local_updates * tc.rounds);
  const double term2 = 40.0 * tc.smoothness * tc.gamma * tc.sigma2 /
                       (tc.n_agents * tc.batch_size);
  const double decentral =
      16.0 * net_coeff * tc.local_updates * tc.local_updates * tc.smoothness *
      tc.smoothness * tc.gamma * tc.gamma *
      (2577.0 * tc.n_agents * tc.sigma2 / tc.batch_size +
       111.0 * tc.phi_v0 / tc.rounds);
  return term1 + term2 + decentral;
}

BoundWithFlag corollary1_rhs(TheoryConstants tc) {
  require_nonneg(tc.smoothness, "L");
  require_nonneg(tc.sigma2, "sigma2");
  require_nonneg(tc.f0_minus_flb, "f0_minus_flb");
  require_nonneg(tc.phi_v0, "phi_v0");
  if (tc.lambda_w < 0.0 || tc.lambda_w >= 1.0)
    throw std::invalid_argument("corollary1_rhs: lambda_w must be in [0, 1)");
  if (!(tc.n_agents >= 1.0) || !(tc.local_updates >= 1.0) ||
      !(tc.rounds >= 1.0) || !(tc.batch_size >= 1.0))
    throw std::invalid_argument("corollary1_rhs: N, E, T, |I| must be >= 1");

  BoundWithFlag out;
  out.e_condition_ok =
      tc.local_updates <=
      std::cbrt(tc.rounds / std::pow(tc.n_agents, 5)) + 1e-12;

  // The prescribed-stepsize bound is its own four-term expression (a
  // further-relaxed form of the general bound, valid under the flagged
  // E-condition), not a plain substitution into theorem1_rhs.
  const double lw2 = tc.lambda_w * tc.lambda_w;
  const double one_minus = 1.0 - lw2;
  const double sqrt_net =
      std::sqrt(tc.n_agents * tc.local_updates * tc.rounds);
  const double net_coeff = (1.0 + 7.0 * lw2) * (1.0 + 7.0 * lw2) /
                           (one_minus * one_minus * one_minus * one_minus);
  const double term1 = 4.0 * tc.f0_minus_flb / sqrt_net;
  const double term2 =
      40.0 * tc.smoothness * tc.sigma2 / (sqrt_net * tc.batch_size);
  const double term34 =
      16.0 * net_coeff * tc.smoothness * tc.smoothness / sqrt_net *
      (2577.0 * tc.sigma2 / tc.batch_size +
       111.0 * tc.phi_v0 / (tc.n_agents * tc.rounds));
  out.value = term1 + term2 + term34;
  return out;
}

BoundWithFlag theorem2_rhs(const MustTheoryConstants& tc) {
  require_nonneg(tc.smoothness, "L");
  require_nonneg(tc.sigma2, "sigma2");
  require_nonneg(tc.f0_minus_flb, "f0_minus_flb");
  require_nonneg(tc.phi_z0, "phi_z0");
  require_nonneg(tc.phi_u0, "phi_u0");
  require_nonneg(tc.b_max, "b_max");
  if (tc.lambda_w < 0.0 || tc.lambda_w >= 1.0)
    throw std::invalid_argument("theorem2_rhs: lambda_w must be in [0, 1)");
  if (!(tc.n_agents >= 1.0) || !(tc.local_updates >= 1.0) ||
      !(tc.rounds >= 1.0) || !(tc.batch_size >= 1.0) || !(tc.n_samples >= 1.0))
    throw std::invalid_argument("theorem2_rhs: N, E, T, |I|, S must be >= 1");

  BoundWithFlag out;
  out.e_condition_ok =
      tc.local_updates <=
      std::cbrt(tc.rounds) / std::pow(tc.n_agents, 3) + 1e-12;

  const double lw2 = tc.lambda_w * tc.lambda_w;
  const double one_minus = 1.0 - lw2;
  const double sqrt_net = std::sqrt(tc.n_agents * tc.local_updates * tc.rounds);
  const double l2b2 = tc.smoothness * tc.smoothness * tc.b_max * tc.b_max;
  const double om4 = one_minus * one_minus * one_minus * one_minus;
  const double om6 = om4 * one_minus * one_minus;

  const double term1 = 1000.0 * tc.f0_minus_flb / sqrt_net;
  const double term2 = 14.0 * tc.smoothness * tc.sigma2 / (sqrt_net * tc.batch_size);
  const double term3 = 222.0 * tc.smoothness * tc.smoothness *
                       (1.0 + 7.0 * lw2) * (1.0 + 7.0 * lw2) * tc.b_max *
                       tc.b_max * tc.sigma2 /
                       (sqrt_net * tc.n_agents * om6 * tc.batch_size);
  const double term4 =
      2.0 * l2b2 / (sqrt_net * tc.n_agents * om4) *
      (990.0 * tc.phi_z0 / (tc.n_samples * tc.local_updates * tc.n_agents) +
       59.0 * (1.0 + 7.0 * lw2) * tc.phi_u0 / (one_minus * tc.rounds));
  out.value = term1 + term2 + term3 + term4;
  return out;
}

// --- empirical constant estimation ---------------------------------------

EstimatedConstants estimate_constants(const LossModel& model,
                                      const Partition& partition,
                                      int n_probes, std::size_t batch_size,
                                      std::uint64_t seed) {
  if (n_probes < 2)
    throw std::invalid_argument("estimate_constants: need at least 2 probes");
  const std::size_t dim = model.dim();

  // All sample indices, for the global objective.
  std::vector<std::size_t> all;
  for (int n = 0; n < partition.n_agents(); ++n)
    all.insert(all.end(), partition.agent(n).begin(), partition.agent(n).end());
  std::sort(all.begin(), all.end());

  Rng rng = derive_stream(seed, StreamKind::probe);
  std::vector<std::vector<double>> points(n_probes);
  std::vector<std::vector<double>> grads(n_probes);
  for (int i = 0; i < n_probes; ++i) {
    points[i].resize(dim);
    model.init_params(points[i], rng);
    for (double& v : points[i]) v += rng.next_gaussian();
    grads[i] = full_gradient(model, points[i], all);
  }

  EstimatedConstants out;
  bool any_pair = false;
  for (int i = 0; i < n_probes; ++i) {
    for (int j = i + 1; j < n_probes; ++j) {
      double dist = 0.0, gd = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        double dp = points[i][k] - points[j][k];
        double dg = grads[i][k] - grads[j][k];
        dist += dp * dp;
        gd += dg * dg;
      }
      if (dist <= 0.0) continue;  // degenerate probe pair
      any_pair = true;
      out.smoothness = std::max(out.smoothness, std::sqrt(gd / dist));
    }
  }
  if (!any_pair)
    throw std::runtime_error("estimate_constants: all probe pairs degenerate");

  // Variance probes around the full local gradient, per agent, at the first
  // probe point. Enumerate all batches exactly when feasible.
  double acc = 0.0;
  std::size_t count = 0;
  for (int n = 0; n < partition.n_agents(); ++n) {
    const auto& local = partition.agent(n);
    std::size_t b = std::min(batch_size, local.size());
    std::vector<double> full = full_gradient(model, points[0], local);

    // Number of b-subsets of the local set, saturating.
    double n_batches = 1.0;
    for (std::size_t k = 0; k < b; ++k)
      n_batches *= static_cast<double>(local.size() - k) / static_cast<double>(k + 1);

    auto add_batch = [&](const std::vector<std::size_t>& batch) {
      std::vector<double> g(dim, 0.0);
      double wgt = 1.0 / static_cast<double>(batch.size());
      for (std::size_t idx : batch) model.add_sample_gradient(points[0], idx, wgt, g);
      double d = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        double dv = g[k] - full[k];
        d += dv * dv;
      }
      acc += static_cast<double>(b) * d;
      ++count;
    };

    if (n_batches <= 256.0) {
      // Exact enumeration of all b-subsets.
      std::vector<std::size_t> comb(b);
      for (std::size_t k = 0; k < b; ++k) comb[k] = k;
      for (;;) {
        std::vector<std::size_t> batch(b);
        for (std::size_t k = 0; k < b; ++k) batch[k] = local[comb[k]];
        add_batch(batch);
        std::size_t pos = b;
        while (pos > 0 && comb[pos - 1] == local.size() - b + pos - 1) --pos;
        if (pos == 0) break;
        ++comb[pos - 1];
        for (std::size_t k = pos; k < b; ++k) comb[k] = comb[k - 1] + 1;
      }
    } else {
      for (int t = 0; t < n_probes; ++t) {
        std::vector<std::size_t> pos = draw_batch(local.size(), b, rng);
        std::vector<std::size_t> batch(b);
        for (std::size_t k = 0; k < b; ++k) batch[k] = local[pos[k]];
        add_batch(batch);
      }
    }
  }
  out.sigma2 = count ? acc / static_cast<double>(count) : 0.0;
  return out;
}

}  // namespace gtsim
