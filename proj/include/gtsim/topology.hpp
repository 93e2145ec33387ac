#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gtsim {

// Undirected communication graph over agents 0..n_agents-1.
// Edges are stored as ordered pairs (a, b) with a < b, sorted, no
// duplicates, no self-loops.
struct Graph {
  int n_agents = 0;
  std::vector<std::pair<int, int>> edges;

  bool has_edge(int a, int b) const;
  std::vector<int> degrees() const;
  bool connected() const;  // BFS from node 0
};

// Throws std::invalid_argument if the edge set violates the Graph
// invariants (range, self-loops, duplicates, ordering).
void validate_graph(const Graph& g);

enum class GraphKind { random, line, complete };

GraphKind parse_graph_kind(const std::string& s);
std::string to_string(GraphKind k);

// Generate a graph of the requested family.
//  - random: Erdos-Renyi G(n, p), re-sampled with a derived seed until
//    connected; throws after 1000 attempts (p too small for n).
//  - line: path 0-1-...-(n-1).
//  - complete: all pairs.
// Throws std::invalid_argument for n < 2 or (random) p outside (0, 1].
Graph gen_graph(GraphKind kind, int n, std::uint64_t seed,
                double edge_prob = 0.0);

// Doubly stochastic mixing weights over a graph, with the cached spectral
// gap parameter lambda_w = largest singular value of W - (1/N)11^T.
struct MixingMatrix {
  int n = 0;
  std::vector<double> w;  // n x n, row-major
  double lambda_w = 0.0;

  double at(int row, int col) const { return w[static_cast<std::size_t>(row) * n + col]; }
};

// Max-degree rule: W[n][m] = 1/(d_max+1) on edges,
// W[n][n] = 1 - d_n/(d_max+1). Requires a connected graph.
MixingMatrix max_degree_mixing(const Graph& g);

// Largest singular value of w - (1/N)11^T, by power iteration on
// (w-J)^T (w-J) to relative tolerance 1e-10, at most 10000 iterations.
// Throws std::invalid_argument for non-square input and std::runtime_error
// if the iteration fails to settle.
double spectral_gap(const std::vector<double>& w, int n);

// For a symmetric matrix, the smallest eigenvalue (power iteration on a
// shifted matrix). Used to validate the mixing-matrix condition required
// by the D2 baseline. Throws std::invalid_argument if w is not symmetric
// within 1e-12.
double min_eigenvalue_symmetric(const std::vector<double>& w, int n);

// Edge-list text format: header line "<n_agents> <n_edges>", then one
// "a b" pair per line, 0-based.
void save_graph(const Graph& g, const std::string& path);
Graph load_graph(const std::string& path);

}  // namespace gtsim
