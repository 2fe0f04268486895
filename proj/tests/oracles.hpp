// Brute-force references shared by the unit tests and the acceptance run.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "qgh/finmetric.hpp"

namespace qgh::oracle {

// rho on the m-point cycle: for diagonal algebras the Lipschitz dual is the
// shortest-path metric of the Cayley graph with edge weights l(k).
inline Eigen::MatrixXd cycle_path_metric(int m) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(m, m, 1e300);
  for (int i = 0; i < m; ++i) {
    d(i, i) = 0.0;
    for (int k = 1; k < m; ++k) d(i, (i + k) % m) = 2.0 * M_PI * std::min(k, m - k) / m;
  }
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  return d;
}

// Shortest paths of a random complete graph with integer-ish weights, so
// ties and degenerate triangles show up.
inline FiniteMetricSpace random_space(int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> w(1, 4);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = 0.5 * w(rng);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  return FiniteMetricSpace(d);
}

inline FiniteMetricSpace random_plane(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd pts(n, 2);
  for (int i = 0; i < n; ++i) pts(i, 0) = u(rng), pts(i, 1) = u(rng);
  return euclidean_space(pts);
}

// Every correspondence contains graph(f) u graph(g)^T for some f: X -> Y,
// g: Y -> X, and distortion only grows with the relation, so the minimum over
// such unions is the exact value.
inline double gh_by_map_pairs(const FiniteMetricSpace& x, const FiniteMetricSpace& y) {
  const int n = x.size(), m = y.size();
  auto maps = [](int from, int to) {
    std::vector<std::vector<int>> out;
    std::vector<int> f(static_cast<size_t>(from), 0);
    while (true) {
      out.push_back(f);
      int k = 0;
      while (k < from && ++f[static_cast<size_t>(k)] == to) f[static_cast<size_t>(k++)] = 0;
      if (k == from) break;
    }
    return out;
  };
  const auto fs = maps(n, m), gs = maps(m, n);
  auto dis_f = [&](const std::vector<int>& f) {
    double d = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) d = std::max(d, std::abs(x(a, b) - y(f[size_t(a)], f[size_t(b)])));
    return d;
  };
  auto dis_g = [&](const std::vector<int>& g) {
    double d = 0.0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) d = std::max(d, std::abs(y(a, b) - x(g[size_t(a)], g[size_t(b)])));
    return d;
  };
  std::vector<double> df, dg;
  for (const auto& f : fs) df.push_back(dis_f(f));
  for (const auto& g : gs) dg.push_back(dis_g(g));
  double best = 1e300;
  for (size_t i = 0; i < fs.size(); ++i) {
    if (df[i] >= best) continue;
    for (size_t j = 0; j < gs.size(); ++j) {
      double d = std::max(df[i], dg[j]);
      if (d >= best) continue;
      for (int a = 0; a < n && d < best; ++a)
        for (int b = 0; b < m; ++b)
          d = std::max(d, std::abs(x(a, gs[j][size_t(b)]) - y(fs[i][size_t(a)], b)));
      best = std::min(best, d);
    }
  }
  return 0.5 * best;
}

}  // namespace qgh::oracle
