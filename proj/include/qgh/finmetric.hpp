#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "qgh/errors.hpp"

namespace qgh {

/// Slack for open-ball ties: x is inside the open eps-ball iff d < eps - kTie,
/// and two points are eps-separated iff d > eps + kTie.
inline constexpr double kTie = 1e-12;

inline bool in_open_ball(double d, double eps) { return d < eps - kTie; }
inline bool separated(double d, double eps) { return d > eps + kTie; }

/// Finite metric space given by its distance matrix.
class FiniteMetricSpace {
 public:
  FiniteMetricSpace() = default;
  explicit FiniteMetricSpace(Eigen::MatrixXd d, double tol = 1e-9) : d_(std::move(d)) {
    const Eigen::Index n = d_.rows();
    if (n == 0 || d_.cols() != n) throw DimensionError("FiniteMetricSpace: distance matrix must be square, n >= 1");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(d_(i, i)) > tol) throw DomainError("FiniteMetricSpace: nonzero diagonal");
      d_(i, i) = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!std::isfinite(d_(i, j)) || d_(i, j) < -tol) throw DomainError("FiniteMetricSpace: bad entry");
        if (std::abs(d_(i, j) - d_(j, i)) > tol) throw DomainError("FiniteMetricSpace: not symmetric");
      }
    }
    for (Eigen::Index k = 0; k < n; ++k)
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
          if (d_(i, j) > d_(i, k) + d_(k, j) + tol) throw DomainError("FiniteMetricSpace: triangle inequality fails");
  }

  int size() const { return static_cast<int>(d_.rows()); }
  double operator()(int i, int j) const { return d_(i, j); }
  const Eigen::MatrixXd& matrix() const { return d_; }

  double diameter() const { return d_.maxCoeff(); }
  /// diam / 2, the analogue of r_A.
  double half_diameter() const { return 0.5 * diameter(); }
  /// min_x max_y d(x, y).
  double minimax_radius() const { return d_.rowwise().maxCoeff().minCoeff(); }

  FiniteMetricSpace subspace(const std::vector<int>& idx) const {
    Eigen::MatrixXd s(idx.size(), idx.size());
    for (size_t a = 0; a < idx.size(); ++a)
      for (size_t b = 0; b < idx.size(); ++b) s(a, b) = d_(idx[a], idx[b]);
    return FiniteMetricSpace(s);
  }

  /// CSV: first line n, then n comma-separated rows.
  std::string to_csv() const {
    std::ostringstream os;
    os << size() << "\n" << std::setprecision(17);
    for (int i = 0; i < size(); ++i) {
      for (int j = 0; j < size(); ++j) os << (j ? "," : "") << d_(i, j);
      os << "\n";
    }
    return os.str();
  }

  static FiniteMetricSpace from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    auto next = [&]() {
      while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
      }
      return false;
    };
    if (!next()) throw ParseError("distance CSV: empty input", 0);
    int n = 0;
    try {
      n = std::stoi(line);
    } catch (const std::exception&) {
      throw ParseError("distance CSV: header must be the point count", lineno, "n");
    }
    if (n < 1) throw ParseError("distance CSV: n must be positive", lineno, "n");
    Eigen::MatrixXd d(n, n);
    for (int i = 0; i < n; ++i) {
      if (!next()) throw ParseError("distance CSV: missing row", lineno + 1);
      std::stringstream ls(line);
      std::string cell;
      int j = 0;
      while (std::getline(ls, cell, ',')) {
        if (j >= n) throw ParseError("distance CSV: too many columns", lineno);
        try {
          d(i, j) = std::stod(cell);
        } catch (const std::exception&) {
          throw ParseError("distance CSV: bad number '" + cell + "'", lineno, "col " + std::to_string(j));
        }
        ++j;
      }
      if (j != n) throw ParseError("distance CSV: too few columns", lineno);
    }
    try {
      return FiniteMetricSpace(d);
    } catch (const Error& e) {
      throw ParseError(std::string("distance CSV: ") + e.what(), 0);
    }
  }

 private:
  Eigen::MatrixXd d_;
};

using IndexSet = std::vector<int>;

/// Hausdorff distance between index subsets Y, Z of X.
inline double hausdorff(const FiniteMetricSpace& x, const IndexSet& y, const IndexSet& z) {
  if (y.empty() || z.empty()) throw DomainError("hausdorff: empty set");
  auto one_side = [&](const IndexSet& a, const IndexSet& b) {
    double h = 0.0;
    for (int i : a) {
      double m = std::numeric_limits<double>::infinity();
      for (int j : b) m = std::min(m, x(i, j));
      h = std::max(h, m);
    }
    return h;
  };
  return std::max(one_side(y, z), one_side(z, y));
}

inline IndexSet all_points(const FiniteMetricSpace& x) {
  IndexSet s(static_cast<size_t>(x.size()));
  for (int i = 0; i < x.size(); ++i) s[static_cast<size_t>(i)] = i;
  return s;
}

struct CountResult {
  int value = 0;
  bool exact = false;
  IndexSet points;  // the centers or the separated set attaining value
};

inline constexpr int kExactCountLimit = 12;

/// Greedy cover of the points in `pool` by open eps-balls with centers in
/// `centers_from`; picks the center covering the most uncovered points.
inline IndexSet greedy_cover(const FiniteMetricSpace& x, const IndexSet& pool, const IndexSet& centers_from,
                             double eps) {
  std::vector<char> covered(static_cast<size_t>(x.size()), 1);
  for (int p : pool) covered[static_cast<size_t>(p)] = 0;
  size_t left = pool.size();
  IndexSet centers;
  while (left > 0) {
    int best = -1;
    size_t best_gain = 0;
    for (int c : centers_from) {
      size_t gain = 0;
      for (int p : pool)
        if (!covered[static_cast<size_t>(p)] && in_open_ball(x(c, p), eps)) ++gain;
      if (gain > best_gain) best_gain = gain, best = c;
    }
    if (best < 0) throw DomainError("greedy_cover: some point cannot be covered from the given centers");
    centers.push_back(best);
    for (int p : pool)
      if (!covered[static_cast<size_t>(p)] && in_open_ball(x(best, p), eps)) covered[static_cast<size_t>(p)] = 1, --left;
  }
  return centers;
}

/// Cov(X, eps): fewest open eps-balls centered in X covering X. Exhaustive
/// for n <= 12, greedy (an upper bound) beyond.
inline CountResult covering_number(const FiniteMetricSpace& x, double eps) {
  if (!(eps > 0.0)) throw DomainError("covering_number: eps must be positive");
  const int n = x.size();
  CountResult out;
  if (n > kExactCountLimit) {
    out.points = greedy_cover(x, all_points(x), all_points(x), eps);
    out.value = static_cast<int>(out.points.size());
    return out;
  }
  std::vector<std::uint32_t> ball(static_cast<size_t>(n), 0);
  for (int c = 0; c < n; ++c)
    for (int p = 0; p < n; ++p)
      if (in_open_ball(x(c, p), eps)) ball[static_cast<size_t>(c)] |= (1u << p);
  const std::uint32_t full = (n == 32) ? 0xffffffffu : ((1u << n) - 1u);
  int best = n + 1;
  std::uint32_t best_set = 0;
  for (std::uint32_t s = 1; s <= full; ++s) {
    const int k = __builtin_popcount(s);
    if (k >= best) continue;
    std::uint32_t cov = 0;
    for (int c = 0; c < n; ++c)
      if (s & (1u << c)) cov |= ball[static_cast<size_t>(c)];
    if (cov == full) best = k, best_set = s;
  }
  out.exact = true;
  out.value = best;
  for (int c = 0; c < n; ++c)
    if (best_set & (1u << c)) out.points.push_back(c);
  return out;
}

/// P(X, eps): largest subset with pairwise distances > eps. Branch and bound
/// for n <= 12, greedy maximal set (a lower bound) beyond.
inline CountResult packing_number(const FiniteMetricSpace& x, double eps) {
  if (!(eps > 0.0)) throw DomainError("packing_number: eps must be positive");
  const int n = x.size();
  CountResult out;
  if (n > kExactCountLimit) {
    for (int i = 0; i < n; ++i) {
      bool ok = true;
      for (int j : out.points)
        if (!separated(x(i, j), eps)) {
          ok = false;
          break;
        }
      if (ok) out.points.push_back(i);
    }
    out.value = static_cast<int>(out.points.size());
    return out;
  }
  IndexSet cur, best;
  std::function<void(int)> rec = [&](int i) {
    if (cur.size() > best.size()) best = cur;
    if (i >= n || cur.size() + static_cast<size_t>(n - i) <= best.size()) return;
    bool ok = true;
    for (int j : cur)
      if (!separated(x(i, j), eps)) {
        ok = false;
        break;
      }
    if (ok) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
    rec(i + 1);
  };
  rec(0);
  out.exact = true;
  out.points = best;
  out.value = static_cast<int>(best.size());
  return out;
}

inline constexpr int kGhExactLimit = 7;

/// Exact Gromov-Hausdorff distance for |X|, |Y| <= 7 as half the least
/// distortion of a correspondence. Every correspondence contains the union of
/// the graph of some f: X -> Y and the transposed graph of some g: Y -> X on
/// the points f misses, so the search runs over those, pruned by the best
/// distortion found so far.
inline double gh_exact_small(const FiniteMetricSpace& x, const FiniteMetricSpace& y) {
  const int n = x.size(), m = y.size();
  if (n > kGhExactLimit || m > kGhExactLimit)
    throw DomainError("gh_exact_small: more than 7 points; use gh_lower_bound for larger spaces");
  // Upper bound to start: everything related to everything.
  double best = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < m; ++c)
        for (int d = 0; d < m; ++d) best = std::max(best, std::abs(x(a, b) - y(c, d)));
  std::vector<std::pair<int, int>> rel;
  std::vector<int> hit(static_cast<size_t>(m), 0);
  auto added_cost = [&](int xi, int yj) {
    double c = 0.0;
    for (const auto& [a, b] : rel) c = std::max(c, std::abs(x(xi, a) - y(yj, b)));
    return c;
  };
  std::vector<int> missing;
  std::function<void(size_t, double)> fill_g = [&](size_t k, double cur) {
    if (k == missing.size()) {
      best = std::min(best, cur);
      return;
    }
    const int yj = missing[k];
    for (int xi = 0; xi < n; ++xi) {
      const double c = std::max(cur, added_cost(xi, yj));
      if (c >= best) continue;
      rel.emplace_back(xi, yj);
      fill_g(k + 1, c);
      rel.pop_back();
    }
  };
  std::function<void(int, double)> fill_f = [&](int xi, double cur) {
    if (xi == n) {
      missing.clear();
      for (int j = 0; j < m; ++j)
        if (!hit[static_cast<size_t>(j)]) missing.push_back(j);
      fill_g(0, cur);
      return;
    }
    for (int yj = 0; yj < m; ++yj) {
      const double c = std::max(cur, added_cost(xi, yj));
      if (c >= best) continue;
      rel.emplace_back(xi, yj);
      ++hit[static_cast<size_t>(yj)];
      fill_f(xi + 1, c);
      --hit[static_cast<size_t>(yj)];
      rel.pop_back();
    }
  };
  fill_f(0, 0.0);
  return 0.5 * best;
}

/// One-point space.
inline FiniteMetricSpace point_space() { return FiniteMetricSpace(Eigen::MatrixXd::Zero(1, 1)); }

struct GhBound {
  double value = 0.0;
  double radius_term = 0.0;    // |diam X - diam Y| / 2
  double minimax_term = 0.0;   // |rad X - rad Y| / 2, rad = min_x max_y d
  double packing_term = 0.0;   // eps / 4 where a packing obstruction fires
  bool packing_exact = false;  // packing counts were exact on both sides
};

/// Lower bounds for dist_GH(X, Y). The packing term uses the contrapositive of
/// "dist_GH < eps/4 implies P(X, eps) <= P(Y, eps/2)": a witness needs a lower
/// bound for P(X, eps) and an upper bound for P(Y, eps/2), the latter exact
/// for small Y and otherwise from a greedy cover at eps/4.
inline GhBound gh_lower_bound(const FiniteMetricSpace& x, const FiniteMetricSpace& y) {
  GhBound out;
  out.radius_term = std::abs(x.half_diameter() - y.half_diameter());
  out.minimax_term = 0.5 * std::abs(x.minimax_radius() - y.minimax_radius());
  out.packing_exact = x.size() <= kExactCountLimit && y.size() <= kExactCountLimit;
  const double diam = std::max(x.diameter(), y.diameter());
  auto upper_packing = [](const FiniteMetricSpace& s, double eps) {
    if (s.size() <= kExactCountLimit) return packing_number(s, eps).value;
    return covering_number(s, 0.5 * eps).value;
  };
  if (diam > 0.0) {
    for (int k = 0; k <= 10; ++k) {
      const double eps = diam * std::ldexp(1.0, -k);
      if (0.25 * eps <= out.packing_term) continue;
      const bool fires = packing_number(x, eps).value > upper_packing(y, 0.5 * eps) ||
                         packing_number(y, eps).value > upper_packing(x, 0.5 * eps);
      if (fires) out.packing_term = 0.25 * eps;
    }
  }
  out.value = std::max({out.radius_term, out.minimax_term, out.packing_term});
  return out;
}

/// True iff the open eps-balls centered at Y cover X.
inline bool ball_cover_test(const FiniteMetricSpace& x, const IndexSet& y, double eps) {
  if (y.empty()) throw DomainError("ball_cover_test: empty center set");
  for (int i = 0; i < x.size(); ++i) {
    bool hit = false;
    for (int j : y)
      if (in_open_ball(x(i, j), eps)) {
        hit = true;
        break;
      }
    if (!hit) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Hierarchical embedding into bounded functions on an index tree.

/// Node of the index tree D. Indices that the construction maps to the same
/// center carry identical values and constraints, so only distinct children
/// are stored; `nominal_size` records the full product K_1 ... K_j.
struct EmbedNode {
  int level = 1;    // j, with eps_j = 2^-j
  int parent = -1;  // index into the same space's node list, -1 on level 1
  int point = 0;    // I_X(omega)
};

struct SpaceEmbedding {
  std::vector<EmbedNode> nodes;
  std::vector<int> nodes_per_level;
};

struct EmbeddingReport {
  double R = 0.0;
  int depth = 0;
  std::vector<int> K;                 // K_1 .. K_depth
  std::vector<double> nominal_size;   // |D_j| = K_1 ... K_j
  std::vector<SpaceEmbedding> spaces;
  double max_distortion = 0.0;        // over all spaces and function pairs
  double distortion_bound = 0.0;      // 2 eps_depth: f - g is 2-Lipschitz
  bool all_in_Z = true;
  int z_violations = 0;
  bool ok() const { return all_in_Z && max_distortion <= distortion_bound; }
};

inline double lipschitz_constant(const FiniteMetricSpace& x, const std::vector<double>& f) {
  double l = 0.0;
  for (int i = 0; i < x.size(); ++i)
    for (int j = i + 1; j < x.size(); ++j)
      if (x(i, j) > 0.0) l = std::max(l, std::abs(f[static_cast<size_t>(i)] - f[static_cast<size_t>(j)]) / x(i, j));
  return l;
}

/// Pullback h_X(f)(omega) = f(I_X(omega)) on the stored nodes.
inline std::vector<double> embed_function(const SpaceEmbedding& e, const std::vector<double>& f) {
  std::vector<double> out(e.nodes.size());
  for (size_t k = 0; k < e.nodes.size(); ++k) out[k] = f[static_cast<size_t>(e.nodes[k].point)];
  return out;
}

/// Depth-limited version of the embedding: level 1 covers X by open
/// eps_1-balls, and each level-j center's open eps_j-ball is covered by open
/// eps_{j+1}-balls centered inside it. K_1 = Cov(X, eps_1), K_j = Cov(X,
/// eps_j / 2) maximized over the family (greedy counts), raised when a
/// sub-cover needed more. Checks the constraint set Z and the sup-norm
/// distortion of pulled-back functions.
inline EmbeddingReport universal_embed(const std::vector<FiniteMetricSpace>& family, double R, int depth,
                                       const std::vector<std::vector<std::vector<double>>>& functions) {
  if (family.empty() || depth < 1) throw DomainError("universal_embed: need a space and depth >= 1");
  if (functions.size() != family.size()) throw DimensionError("universal_embed: one function list per space");
  for (size_t s = 0; s < family.size(); ++s)
    for (const auto& f : functions[s]) {
      if (static_cast<int>(f.size()) != family[s].size()) throw DimensionError("universal_embed: function length");
      if (lipschitz_constant(family[s], f) > 1.0 + 1e-12) throw DomainError("universal_embed: function not 1-Lipschitz");
      for (double v : f)
        if (std::abs(v) > R + 1e-12) throw DomainError("universal_embed: function exceeds R in sup norm");
    }
  EmbeddingReport rep;
  rep.R = R;
  rep.depth = depth;
  rep.K.assign(static_cast<size_t>(depth), 1);
  auto eps = [](int j) { return std::ldexp(1.0, -j); };
  for (const auto& x : family) {
    const IndexSet all = all_points(x);
    rep.K[0] = std::max(rep.K[0], static_cast<int>(greedy_cover(x, all, all, eps(1)).size()));
    for (int j = 2; j <= depth; ++j)
      rep.K[static_cast<size_t>(j - 1)] =
          std::max(rep.K[static_cast<size_t>(j - 1)], static_cast<int>(greedy_cover(x, all, all, 0.5 * eps(j)).size()));
  }
  for (const auto& x : family) {
    SpaceEmbedding e;
    e.nodes_per_level.assign(static_cast<size_t>(depth), 0);
    const IndexSet all = all_points(x);
    for (int c : greedy_cover(x, all, all, eps(1))) e.nodes.push_back({1, -1, c});
    size_t level_begin = 0;
    for (int j = 1; j <= depth; ++j) {
      const size_t level_end = e.nodes.size();
      e.nodes_per_level[static_cast<size_t>(j - 1)] = static_cast<int>(level_end - level_begin);
      if (j == depth) break;
      for (size_t k = level_begin; k < level_end; ++k) {
        const int c = e.nodes[k].point;
        IndexSet ball;
        for (int p : all)
          if (in_open_ball(x(c, p), eps(j))) ball.push_back(p);
        const IndexSet sub = greedy_cover(x, ball, ball, eps(j + 1));
        rep.K[static_cast<size_t>(j)] = std::max(rep.K[static_cast<size_t>(j)], static_cast<int>(sub.size()));
        for (int p : sub) e.nodes.push_back({j + 1, static_cast<int>(k), p});
      }
      level_begin = level_end;
    }
    rep.spaces.push_back(std::move(e));
  }
  double prod = 1.0;
  for (int k : rep.K) rep.nominal_size.push_back(prod *= k);
  rep.distortion_bound = 2.0 * eps(depth);
  for (size_t s = 0; s < family.size(); ++s) {
    const SpaceEmbedding& e = rep.spaces[s];
    std::vector<std::vector<double>> img;
    for (const auto& f : functions[s]) {
      img.push_back(embed_function(e, f));
      const auto& h = img.back();
      for (size_t k = 0; k < e.nodes.size(); ++k) {
        const EmbedNode& nd = e.nodes[k];
        const bool ok = nd.level == 1 ? std::abs(h[k]) <= R
                                      : std::abs(h[k] - h[static_cast<size_t>(nd.parent)]) <= eps(nd.level - 1);
        if (!ok) ++rep.z_violations;
      }
    }
    for (size_t a = 0; a < img.size(); ++a)
      for (size_t b = a + 1; b < img.size(); ++b) {
        double dx = 0.0, dd = 0.0;
        for (size_t i = 0; i < functions[s][a].size(); ++i)
          dx = std::max(dx, std::abs(functions[s][a][i] - functions[s][b][i]));
        for (size_t k = 0; k < img[a].size(); ++k) dd = std::max(dd, std::abs(img[a][k] - img[b][k]));
        rep.max_distortion = std::max(rep.max_distortion, std::abs(dd - dx));
      }
  }
  rep.all_in_Z = rep.z_violations == 0;
  return rep;
}

/// Arc-length metric on n equally spaced points of a circle of circumference c.
inline FiniteMetricSpace circle_space(int n, double circumference = 2.0 * M_PI) {
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int k = std::abs(i - j);
      d(i, j) = circumference * std::min(k, n - k) / n;
    }
  return FiniteMetricSpace(d);
}

/// Metric space of points in R^k with the Euclidean distance.
inline FiniteMetricSpace euclidean_space(const Eigen::MatrixXd& pts) {
  const Eigen::Index n = pts.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = (pts.row(i) - pts.row(j)).norm();
  return FiniteMetricSpace(d);
}

}  // namespace qgh
