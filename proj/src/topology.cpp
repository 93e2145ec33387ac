#include "gtsim/topology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>
#include <set>
#include <stdexcept>

#include "gtsim/rng.hpp"
#include "gtsim/io_util.hpp"

namespace gtsim {

bool Graph::has_edge(int a, int b) const {
  if (a > b) std::swap(a, b);
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(a, b));
}

std::vector<int> Graph::degrees() const {
  std::vector<int> d(n_agents, 0);
  for (const auto& [a, b] : edges) {
    ++d[a];
    ++d[b];
  }
  return d;
}

bool Graph::connected() const {
  if (n_agents <= 0) return false;
  if (n_agents == 1) return true;
  std::vector<std::vector<int>> adj(n_agents);
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> seen(n_agents, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        q.push(v);
      }
    }
  }
  return count == n_agents;
}

void validate_graph(const Graph& g) {
  if (g.n_agents < 1) throw std::invalid_argument("graph: n_agents must be positive");
  std::set<std::pair<int, int>> seen;
  for (const auto& [a, b] : g.edges) {
    if (a < 0 || b < 0 || a >= g.n_agents || b >= g.n_agents)
      throw std::invalid_argument("graph: edge endpoint out of range");
    if (a == b) throw std::invalid_argument("graph: self-loop");
    if (a > b) throw std::invalid_argument("graph: edges must be stored as (a,b) with a<b");
    if (!seen.insert({a, b}).second)
      throw std::invalid_argument("graph: duplicate edge");
  }
}

GraphKind parse_graph_kind(const std::string& s) {
  if (s == "random") return GraphKind::random;
  if (s == "line") return GraphKind::line;
  if (s == "complete") return GraphKind::complete;
  throw std::invalid_argument("unknown graph kind: " + s);
}

std::string to_string(GraphKind k) {
  switch (k) {
    case GraphKind::random: return "random";
    case GraphKind::line: return "line";
    case GraphKind::complete: return "complete";
  }
  return "?";
}

namespace {

Graph erdos_renyi_once(int n, double p, Rng& rng) {
  Graph g;
  g.n_agents = n;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (rng.next_double() < p) g.edges.emplace_back(a, b);
    }
  }
  return g;
}

}  // namespace

Graph gen_graph(GraphKind kind, int n, std::uint64_t seed, double edge_prob) {
  if (n < 2) throw std::invalid_argument("gen_graph: need at least 2 agents");
  Graph g;
  g.n_agents = n;
  switch (kind) {
    case GraphKind::line:
      for (int a = 0; a + 1 < n; ++a) g.edges.emplace_back(a, a + 1);
      return g;
    case GraphKind::complete:
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) g.edges.emplace_back(a, b);
      return g;
    case GraphKind::random: {
      if (!(edge_prob > 0.0) || edge_prob > 1.0)
        throw std::invalid_argument("gen_graph: edge probability must be in (0,1]");
      constexpr int kMaxAttempts = 1000;
      for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng rng = derive_stream(seed, StreamKind::graph,
                                static_cast<std::uint64_t>(attempt));
        Graph cand = erdos_renyi_once(n, edge_prob, rng);
        if (cand.connected()) return cand;
      }
      throw std::runtime_error(
          "gen_graph: no connected graph after 1000 attempts; edge "
          "probability too small for this n");
    }
  }
  throw std::invalid_argument("gen_graph: unknown kind");
}

MixingMatrix max_degree_mixing(const Graph& g) {
  validate_graph(g);
  if (!g.connected())
    throw std::invalid_argument("max_degree_mixing: graph must be connected");
  const int n = g.n_agents;
  std::vector<int> deg = g.degrees();
  int d_max = *std::max_element(deg.begin(), deg.end());
  double off = 1.0 / (d_max + 1);

  MixingMatrix m;
  m.n = n;
  m.w.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (const auto& [a, b] : g.edges) {
    m.w[static_cast<std::size_t>(a) * n + b] = off;
    m.w[static_cast<std::size_t>(b) * n + a] = off;
  }
  for (int a = 0; a < n; ++a)
    m.w[static_cast<std::size_t>(a) * n + a] = 1.0 - deg[a] * off;
  m.lambda_w = spectral_gap(m.w, n);
  return m;
}

namespace {

// y = (W - J) x where J = (1/n) 11^T
void apply_centered(const std::vector<double>& w, int n,
                    const std::vector<double>& x, std::vector<double>& y) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  for (int r = 0; r < n; ++r) {
    const double* row = &w[static_cast<std::size_t>(r) * n];
    double s = 0.0;
    for (int c = 0; c < n; ++c) s += row[c] * x[c];
    y[r] = s - mean;
  }
}

// y = (W - J)^T x
void apply_centered_t(const std::vector<double>& w, int n,
                      const std::vector<double>& x, std::vector<double>& y) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  for (int c = 0; c < n; ++c) y[c] = -mean;
  for (int r = 0; r < n; ++r) {
    const double* row = &w[static_cast<std::size_t>(r) * n];
    for (int c = 0; c < n; ++c) y[c] += row[c] * x[r];
  }
}

double vec_norm(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

double spectral_gap(const std::vector<double>& w, int n) {
  if (n <= 0 || w.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("spectral_gap: matrix must be square");
  if (n == 1) return 0.0;

  constexpr double kRelTol = 1e-10;
  constexpr int kMaxIter = 10000;

  // ||W - J||_F bounds the target singular value from above. When it sits
  // at rounding-noise level (W = J up to floating point), power iteration
  // would only chase noise.
  double fro2 = 0.0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double d = w[static_cast<std::size_t>(r) * n + c] - 1.0 / n;
      fro2 += d * d;
    }
  double fro = std::sqrt(fro2);
  if (fro <= 1e-13 * (1.0 + vec_norm(w))) return fro;

  // Deterministic pseudo-random start vector.
  Rng rng(0x73706563u);
  std::vector<double> x(n), mx(n), bx(n);
  for (double& v : x) v = rng.next_double() - 0.5;
  double nx = vec_norm(x);
  for (double& v : x) v /= nx;

  double prev = -1.0;
  for (int it = 0; it < kMaxIter; ++it) {
    apply_centered(w, n, x, mx);
    apply_centered_t(w, n, mx, bx);
    double lam = 0.0;  // Rayleigh quotient x^T B x with ||x|| = 1
    for (int i = 0; i < n; ++i) lam += x[i] * bx[i];
    double nb = vec_norm(bx);
    if (nb < 1e-300 || lam < 1e-24) return std::sqrt(std::max(lam, 0.0));
    if (prev >= 0.0 && std::abs(lam - prev) <= kRelTol * std::max(lam, 1e-30))
      return std::sqrt(std::max(lam, 0.0));
    prev = lam;
    for (int i = 0; i < n; ++i) x[i] = bx[i] / nb;
  }
  throw std::runtime_error("spectral_gap: power iteration did not converge");
}

double min_eigenvalue_symmetric(const std::vector<double>& w, int n) {
  if (n <= 0 || w.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("min_eigenvalue_symmetric: matrix must be square");
  for (int r = 0; r < n; ++r)
    for (int c = r + 1; c < n; ++c)
      if (std::abs(w[static_cast<std::size_t>(r) * n + c] -
                   w[static_cast<std::size_t>(c) * n + r]) > 1e-12)
        throw std::invalid_argument("min_eigenvalue_symmetric: matrix not symmetric");

  // Power iteration on s*I - W with s = max row sum of |entries|, which
  // makes the shifted matrix PSD; the dominant eigenvalue is s - lambda_min.
  double shift = 0.0;
  for (int r = 0; r < n; ++r) {
    double s = 0.0;
    for (int c = 0; c < n; ++c) s += std::abs(w[static_cast<std::size_t>(r) * n + c]);
    shift = std::max(shift, s);
  }
  shift += 1.0;

  Rng rng(0x6d696e65u);
  std::vector<double> x(n), y(n);
  for (double& v : x) v = rng.next_double() - 0.5;
  double nx = vec_norm(x);
  for (double& v : x) v /= nx;

  double prev = -1.0;
  constexpr int kMaxIter = 20000;
  for (int it = 0; it < kMaxIter; ++it) {
    for (int r = 0; r < n; ++r) {
      double s = shift * x[r];
      const double* row = &w[static_cast<std::size_t>(r) * n];
      for (int c = 0; c < n; ++c) s -= row[c] * x[c];
      y[r] = s;
    }
    double lam = 0.0;
    for (int i = 0; i < n; ++i) lam += x[i] * y[i];
    double ny = vec_norm(y);
    if (ny < 1e-300) return shift;
    if (prev >= 0.0 && std::abs(lam - prev) <= 1e-12 * std::max(lam, 1e-30))
      return shift - lam;
    prev = lam;
    for (int i = 0; i < n; ++i) x[i] = y[i] / ny;
  }
  throw std::runtime_error("min_eigenvalue_symmetric: power iteration did not converge");
}

void save_graph(const Graph& g, const std::string& path) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_graph: cannot open " + path);
  out << g.n_agents << " " << g.edges.size() << "\n";
  for (const auto& [a, b] : g.edges) out << a << " " << b << "\n";
  if (!out) throw std::runtime_error("save_graph: write failed for " + path);
}

Graph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_graph: cannot open " + path);
  Graph g;
  std::size_t n_edges = 0;
  if (!(in >> g.n_agents >> n_edges))
    throw std::runtime_error("load_graph: malformed header in " + path);
  g.edges.reserve(n_edges);
  for (std::size_t i = 0; i < n_edges; ++i) {
    int a, b;
    if (!(in >> a >> b))
      throw std::runtime_error("load_graph: truncated edge list in " + path);
    if (a > b) std::swap(a, b);
    g.edges.emplace_back(a, b);
  }
  std::sort(g.edges.begin(), g.edges.end());
  validate_graph(g);
  return g;
}

}  // namespace gtsim
