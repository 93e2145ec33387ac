// Test-only reference implementations, kept independent of the library
// code paths they are used to check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace oracles {

// Union-find connectivity, independent of the library's BFS.
inline bool connected_union_find(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  int components = n;
  for (const auto& [a, b] : edges) {
    int ra = find(a), rb = find(b);
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  return components == 1;
}

// Central finite-difference gradient of a scalar function.
inline std::vector<double> fd_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::vector<double> point, double h = 1e-5) {
  std::vector<double> g(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    double orig = point[i];
    point[i] = orig + h;
    double fp = f(point);
    point[i] = orig - h;
    double fm = f(point);
    point[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Directional central difference (f(p + h d) - f(p - h d)) / (2h).
inline double fd_directional(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> point, std::span<const double> dir,
    double h = 1e-5) {
  std::vector<double> p(point.begin(), point.end());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = point[i] + h * dir[i];
  double fp = f(p);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = point[i] - h * dir[i];
  double fm = f(p);
  return (fp - fm) / (2.0 * h);
}

// Brute-force consensus error: sum_n ||row_n - mean||^2 via a double loop.
inline double brute_force_deviation(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return 0.0;
  std::size_t dim = rows[0].size();
  double total = 0.0;
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < dim; ++k) {
      double mean = 0.0;
      for (const auto& q : rows) mean += q[k];
      mean /= static_cast<double>(rows.size());
      double d = r[k] - mean;
      total += d * d;
    }
  }
  return total;
}

// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations,
// returned ascending.
inline std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n) {
  auto at = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r) * n + c]; };
  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (int r = 0; r < n; ++r)
      for (int c = r + 1; c < n; ++c) off += at(r, c) * at(r, c);
    if (off < 1e-26) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(at(p, q)) < 1e-300) continue;
        double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (int i = 0; i < n; ++i) eig[i] = at(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

// All k-subsets of {0, ..., n-1}, for exhaustive batch enumeration.
inline std::vector<std::vector<std::size_t>> all_subsets(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> comb(k);
  for (std::size_t i = 0; i < k; ++i) comb[i] = i;
  for (;;) {
    out.push_back(comb);
    std::size_t pos = k;
    while (pos > 0 && comb[pos - 1] == n - k + pos - 1) --pos;
    if (pos == 0) break;
    ++comb[pos - 1];
    for (std::size_t i = pos; i < k; ++i) comb[i] = comb[i - 1] + 1;
  }
  return out;
}

}  // namespace oracles
