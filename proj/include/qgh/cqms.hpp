#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qgh/group_action.hpp"
#include "qgh/numerics.hpp"
#include "qgh/parallel.hpp"
#include "qgh/solver.hpp"
#include "qgh/space.hpp"

namespace qgh {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct RadiusEstimate {
  double value = 0.0;
  std::string method = "ascent";
  double cap = 0.0;  // sum_x w_x l(x)
  bool exceeds_cap = false;
  Vec witness;       // element attaining the ratio, scaled to L = 1
  int solver_evaluations = 0;
};

struct BallNet {
  double r = 0.0;
  double epsilon = 0.0;
  int budget = 0;
  std::uint64_t seed = 0;
  std::vector<Vec> points;
  std::vector<CMatrix> matrices;
  double covering_certificate = 0.0;
  double min_separation = kInf;
  int probes = 0;
  bool incomplete = false;
};

struct RadiusOptions {
  int random_starts = 8;
  int top_starts = 2;
  int max_alternations = 6;
  std::uint64_t seed = 7;
  ContinuationOptions solver;
};

class Cqms;

namespace detail {
struct CqmsCache {
  std::mutex mu;
  std::map<std::string, RadiusEstimate> radius;
  std::map<std::string, std::shared_ptr<const BallNet>> nets;
};
}  // namespace detail

/// Order-unit space A with the seminorm L(a) = max_x ||alpha_x(a) - a|| / l(x).
/// Copies share the radius and net caches.
class Cqms {
 public:
  struct Meta {
    std::string family;
    std::map<std::string, double> params;
  };

  Cqms(std::string name, HermitianSpace space, UnitaryAction action, Meta meta = {}, Tolerances tol = {})
      : name_(std::move(name)),
        space_(std::move(space)),
        action_(std::move(action)),
        meta_(std::move(meta)),
        tol_(tol),
        cache_(std::make_shared<detail::CqmsCache>()) {
    if (space_.matrix_dim() != action_.dim()) throw DimensionError("Cqms: space and action dimensions differ");
    if (!space_.is_full()) {
      const SampledGroup& g = action_.group();
      const int stride = std::max(1, g.size() / 64);
      for (int x = 0; x < g.size(); x += stride)
        for (int i = 0; i < space_.size(); ++i) {
          const double res = space_.residual(action_.apply(x, space_.basis_matrix(i)));
          if (res > 1e-8) throw DomainError("Cqms: space not invariant under the action");
        }
    }
    if (lip(space_.unit()) > tol_.numerical) throw DomainError("Cqms: L(e) is not zero");
  }

  const std::string& name() const { return name_; }
  const HermitianSpace& space() const { return space_; }
  const UnitaryAction& action() const { return action_; }
  const Meta& meta() const { return meta_; }
  const Tolerances& tol() const { return tol_; }
  int size() const { return space_.size(); }
  const SampledGroup& group() const { return action_.group(); }

  CMatrix matrix(const Vec& c) const { return space_.to_matrix(c); }
  double lip(const Vec& c) const { return lip_seminorm(action_, space_.to_matrix(c)); }
  double norm(const Vec& c) const { return op_norm(space_.to_matrix(c)); }
  double quotient(const Vec& c) const { return quotient_norm(space_.to_matrix(c)); }

  detail::CqmsCache& cache() const { return *cache_; }

 private:
  std::string name_;
  HermitianSpace space_;
  UnitaryAction action_;
  Meta meta_;
  Tolerances tol_;
  std::shared_ptr<detail::CqmsCache> cache_;
};

/// Minkowski gauge of D_r(A): max(L(d), ||d|| / r).
inline double gauge(const Cqms& q, const Vec& d, double r) {
  const CMatrix m = q.matrix(d);
  const double l = lip_seminorm(q.action(), m);
  if (r == kInf) return l;
  if (r <= 0.0) return op_norm(m) > 0.0 ? kInf : 0.0;
  return std::max(l, op_norm(m) / r);
}

inline bool ball_membership(const Cqms& q, const Vec& a, double r) {
  if (a.size() != q.size()) throw DimensionError("ball_membership: coefficient length");
  const double tol = q.tol().numerical;
  const CMatrix m = q.matrix(a);
  return lip_seminorm(q.action(), m) <= 1.0 + tol && op_norm(m) <= r + tol;
}

/// Matrix form: rejects matrices outside the span.
inline bool ball_membership(const Cqms& q, const HermitianMatrix& a, double r) {
  return ball_membership(q, q.space().element(a.matrix(), q.tol().numerical), r);
}

/// Largest t with t d in D_r(A), by bisection on ball_membership.
inline double boundary_scale(const Cqms& q, const Vec& direction, double r) {
  if (direction.norm() == 0.0) throw DomainError("boundary_scale: zero direction");
  if (r == kInf && q.lip(direction) <= q.tol().numerical * direction.norm())
    throw DomainError("boundary_scale: direction in R e with r = infinity");
  double lo = 0.0, hi = 1.0;
  while (ball_membership(q, Vec(hi * direction), r)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return kInf;
  }
  while (hi - lo > 1e-7 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (ball_membership(q, Vec(mid * direction), r))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

namespace detail {

/// Smoothed gauge max(L(d), ||d||/R) as a log-sum-exp over the spectra of
/// (alpha_x(D) - D)/l(x) and D/R.
class GaugeObjective {
 public:
  GaugeObjective(const Cqms& q, double R) : q_(q), R_(R) {}

  SmoothedValue operator()(const Vec& c, double mu, bool want_grad) const {
    const CMatrix D = q_.matrix(c);
    const auto& elems = q_.action().seminorm_elements();
    const SampledGroup& g = q_.group();
    const size_t np = elems.size() + (R_ < kInf ? 1 : 0);
    pieces.resize(np);
    frob.resize(np);
    order.resize(np);
    for (size_t k = 0; k < elems.size(); ++k) {
      const int x = elems[k];
      q_.action().apply_into(x, D, pieces[k], tmp);
      pieces[k] -= D;
      pieces[k] *= 1.0 / g.lengths[static_cast<size_t>(x)];
      frob[k] = pieces[k].norm();
    }
    if (R_ < kInf) {
      pieces.back() = D / R_;
      frob.back() = pieces.back().norm();
    }
    for (size_t k = 0; k < np; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return frob[a] > frob[b]; });
    double F = 0.0;
    for (size_t k : order) {
      if (frob[k] <= F) break;
      F = std::max(F, op_norm(pieces[k]));
    }
    SmoothedValue out;
    out.exact = F;
    if (mu >= 1.0 && !want_grad) {
      out.smooth = F;
      return out;
    }
    if (F == 0.0) {
      out.smooth = 0.0;
      if (want_grad) out.grad = Vec::Zero(c.size());
      return out;
    }
    const double cutoff = F - 20.0 * mu;
    SpectralLogSumExp acc(F, mu);
    CMatrix G;
    if (want_grad) G = CMatrix::Zero(D.rows(), D.cols());
    for (size_t k : order) {
      if (frob[k] <= cutoff) break;
      CMatrix w = acc.add(pieces[k], want_grad);
      if (!want_grad) continue;
      if (k < elems.size()) {
        const int x = elems[k];
        q_.action().apply_into(g.inverse[static_cast<size_t>(x)], w, adj, tmp);
        G += (adj - w) / g.lengths[static_cast<size_t>(x)];
      } else {
        G += w / R_;
      }
    }
    out.smooth = acc.value();
    if (want_grad) out.grad = q_.space().coefficients(G / acc.z());
    return out;
  }

 private:
  const Cqms& q_;
  double R_;
  // Scratch buffers, reused across evaluations.
  mutable std::vector<CMatrix> pieces;
  mutable std::vector<double> frob;
  mutable std::vector<size_t> order;
  mutable CMatrix tmp, adj;
};

}  // namespace detail

struct SupportResult {
  double value = 0.0;  // sup of <g, a> over D_R(A), certified from below
  Vec maximizer;
  int evaluations = 0;
};

/// sup { <g, a> : a in D_R(A) } by minimizing the gauge on {<g, d> = 1}.
/// The returned value is attained by the returned maximizer, so it is a
/// lower bound on the true supremum.
inline SupportResult support_function(const Cqms& q, const Vec& g, double R, const std::vector<Vec>& starts,
                                      const ContinuationOptions& opt = {}) {
  SupportResult out;
  out.maximizer = Vec::Zero(q.size());
  const double gn2 = g.squaredNorm();
  if (gn2 <= 1e-28) return out;
  const Vec& e = q.space().unit();
  if (R == kInf && std::abs(g.dot(e)) > 1e-10 * std::sqrt(gn2) * e.norm())
    throw DomainError("support_function: unbounded (functional not zero on e with R = infinity)");
  if (R <= 0.0) return out;
  detail::GaugeObjective obj(q, R);
  auto project = [&](const Vec& x) -> Vec { return x - ((g.dot(x) - 1.0) / gn2) * g; };
  std::vector<Vec> all = starts;
  all.push_back(g / gn2);
  double best_gauge = kInf;
  Vec best;
  for (const Vec& s : all) {
    const double gs = g.dot(s);
    if (!(gs > 1e-14 * s.norm() * std::sqrt(gn2))) continue;
    MinimizeResult r = fista_minimize(obj, project, Vec(s / gs), opt);
    out.evaluations += r.evaluations;
    if (r.value < best_gauge) {
      best_gauge = r.value;
      best = r.x;
    }
  }
  if (!(best_gauge < kInf) || best_gauge <= 0.0) return out;
  out.value = g.dot(best) / best_gauge;
  out.maximizer = best / best_gauge;
  return out;
}

namespace detail {
inline std::string key_of(std::initializer_list<double> xs) {
  std::string k;
  char buf[40];
  for (double x : xs) {
    std::snprintf(buf, sizeof buf, "%.17g;", x);
    k += buf;
  }
  return k;
}

inline std::pair<Vec, Vec> extreme_states(const Cqms& q, const Vec& a) {
  const EigResult e = hermitian_eig(q.matrix(a));
  const Eigen::VectorXcd u = e.vectors.col(e.values.size() - 1);
  const Eigen::VectorXcd v = e.vectors.col(0);
  return {q.space().coefficients(u * u.adjoint()), q.space().coefficients(v * v.adjoint())};
}
}  // namespace detail

/// r_A = sup ||a||~ / L(a) by multi-start alternating ascent. From a, take
/// the top and bottom eigenvector states u, v and maximize (u - v) over
/// {L <= 1}. Since that maximizer need not move the extreme states, each step
/// also tries the farthest states from v and from u, found by maximizing
/// (tau - v) and (u - tau) with tau the trace state. The ratio never drops.
inline RadiusEstimate radius(const Cqms& q, const RadiusOptions& opt = {}) {
  const std::string key = detail::key_of({double(opt.random_starts), double(opt.top_starts),
                                          double(opt.max_alternations), double(opt.seed)});
  {
    std::lock_guard<std::mutex> lock(q.cache().mu);
    auto it = q.cache().radius.find(key);
    if (it != q.cache().radius.end()) return it->second;
  }
  RadiusEstimate est;
  est.cap = q.group().mean_length();
  est.witness = Vec::Zero(q.size());
  const HermitianSpace& sp = q.space();
  if (q.size() > 1) {
    std::mt19937_64 rng(opt.seed);
    std::vector<Vec> cands;
    for (int i = 0; i < q.size(); ++i) {
      Vec c = sp.traceless(Vec::Unit(q.size(), i));
      if (c.norm() > 1e-9) cands.push_back(c);
    }
    for (int k = 0; k < opt.random_starts; ++k) cands.push_back(sp.traceless(random_gaussian(q.size(), rng)));
    std::vector<std::pair<double, size_t>> ratios;
    for (size_t i = 0; i < cands.size(); ++i) {
      const double l = q.lip(cands[i]);
      const double qn = q.quotient(cands[i]);
      if (l <= 1e-12 * cands[i].norm())
        throw DomainError("radius: L vanishes off R e (not a Lip-norm; action not ergodic?)");
      ratios.emplace_back(qn / l, i);
    }
    std::stable_sort(ratios.begin(), ratios.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    const Vec tau = sp.coefficients(CMatrix::Identity(sp.matrix_dim(), sp.matrix_dim()) /
                                    static_cast<double>(sp.matrix_dim()));
    // Solves for g, returns (ratio, element scaled to L = 1).
    auto step = [&](const Vec& g, const Vec& start) -> std::pair<double, Vec> {
      const SupportResult s = support_function(q, g, kInf, {start}, opt.solver);
      est.solver_evaluations += s.evaluations;
      const double l = q.lip(s.maximizer);
      if (!(l > 0.0)) return {0.0, Vec()};
      return {q.quotient(s.maximizer) / l, Vec(s.maximizer / l)};
    };
    const size_t tops = std::min(ratios.size(), static_cast<size_t>(std::max(1, opt.top_starts)));
    for (size_t t = 0; t < tops; ++t) {
      Vec a = cands[ratios[t].second];
      double ratio = ratios[t].first;
      a /= q.lip(a);
      if (ratio > est.value) {
        est.value = ratio;
        est.witness = a;
      }
      for (int alt = 0; alt < opt.max_alternations; ++alt) {
        const auto [u, v] = detail::extreme_states(q, a);
        std::pair<double, Vec> bestc = step(u - v, a);
        if (!(bestc.first > ratio * (1.0 + 1e-6))) {
          const auto far_u = step(tau - v, a);
          if (far_u.second.size()) {
            const Vec u2 = detail::extreme_states(q, far_u.second).first;
            if ((u2 - u).norm() > 1e-6) {
              auto c = step(u2 - v, far_u.second);
              if (c.first > bestc.first) bestc = std::move(c);
            }
          }
          const auto far_v = step(u - tau, a);
          if (far_v.second.size()) {
            const Vec v2 = detail::extreme_states(q, far_v.second).second;
            if ((v2 - v).norm() > 1e-6) {
              auto c = step(u - v2, far_v.second);
              if (c.first > bestc.first) bestc = std::move(c);
            }
          }
        }
        if (!bestc.second.size()) break;
        if (bestc.first > est.value) {
          est.value = bestc.first;
          est.witness = bestc.second;
        }
        if (bestc.first <= ratio * (1.0 + 1e-6)) break;
        ratio = bestc.first;
        a = bestc.second;
      }
    }
  }
  est.exceeds_cap = est.value > est.cap + 1e-6;
  std::lock_guard<std::mutex> lock(q.cache().mu);
  q.cache().radius.emplace(key, est);
  return est;
}

/// rho_L(mu, nu) as the support of (mu - nu) on D_R(A), R >= r_A.
inline double state_metric(const Cqms& q, const StateFunctional& mu, const StateFunctional& nu, double R,
                           const BallNet* net = nullptr, const ContinuationOptions& opt = {}) {
  const double rad = radius(q).value;
  if (R < rad * (1.0 - 1e-9) - 1e-12)
    throw DomainError("state_metric: R below the radius estimate " + std::to_string(rad));
  Vec g = q.space().coefficients(mu.density() - nu.density());
  if (g.norm() <= 1e-14) return 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (std::abs(g(i)) > 1e-12) {
      if (g(i) < 0) g = -g;
      break;
    }
  std::vector<Vec> starts;
  if (net && !net->points.empty()) {
    double bestv = 0.0;
    const Vec* bestp = nullptr;
    for (const Vec& p : net->points) {
      const double v = g.dot(p);
      if (v > bestv) bestv = v, bestp = &p;
    }
    if (bestp) starts.push_back(*bestp);
  }
  return support_function(q, g, R, starts, opt).value;
}

/// Max of state_metric over pure-state pairs: extreme eigenvector states of
/// random elements and of the radius witness, then alternating steps that
/// move one end to the farthest state from the other (as in radius()).
/// Lower bound on diam.
inline double state_diameter(const Cqms& q, double R, int sample, std::uint64_t seed = 5,
                             const ContinuationOptions& opt = {}) {
  if (q.size() <= 1) return 0.0;
  std::mt19937_64 rng(seed);
  const HermitianSpace& sp = q.space();
  const Vec tau = sp.coefficients(CMatrix::Identity(sp.matrix_dim(), sp.matrix_dim()) /
                                  static_cast<double>(sp.matrix_dim()));
  double best = 0.0;
  Vec best_u, best_v, best_a;
  auto consider = [&](const Vec& u, const Vec& v, const Vec& start) {
    const SupportResult r = support_function(q, u - v, R, {start}, opt);
    if (r.value > best) best = r.value, best_u = u, best_v = v, best_a = r.maximizer;
  };
  std::vector<Vec> starts;
  const RadiusEstimate rad = radius(q);
  if (rad.witness.size() == q.size() && rad.witness.norm() > 0.0) starts.push_back(rad.witness);
  for (int s = 0; s < sample; ++s) starts.push_back(sp.traceless(random_gaussian(q.size(), rng)));
  for (const Vec& a : starts) {
    const auto [u, v] = detail::extreme_states(q, a);
    consider(u, v, a);
  }
  for (int polish = 0; polish < 6 && best_a.size(); ++polish) {
    const double before = best;
    const Vec u = best_u, v = best_v, a = best_a;
    const auto [u1, v1] = detail::extreme_states(q, a);
    consider(u1, v1, a);
    const SupportResult fu = support_function(q, tau - v, R, {a}, opt);
    if (fu.maximizer.norm() > 0.0) consider(detail::extreme_states(q, fu.maximizer).first, v, fu.maximizer);
    const SupportResult fv = support_function(q, u - tau, R, {a}, opt);
    if (fv.maximizer.norm() > 0.0) consider(u, detail::extreme_states(q, fv.maximizer).second, fv.maximizer);
    if (best <= before * (1.0 + 1e-6)) break;
  }
  return best;
}

namespace detail {

/// Lower bound for ||m||: Frobenius / sqrt(d).
inline double op_lower(const CMatrix& m) { return m.norm() / std::sqrt(static_cast<double>(m.rows())); }

/// min_j ||p - net_j||, skipping net points whose Frobenius bound cannot win.
inline double distance_to_set(const CMatrix& p, const std::vector<CMatrix>& net, double stop_below = -1.0) {
  double best = kInf;
  for (const CMatrix& n : net) {
    const CMatrix diff = p - n;
    if (op_lower(diff) >= best) continue;
    best = std::min(best, op_norm(diff));
    if (best <= stop_below) break;
  }
  return best;
}

template <class Rng>
Vec ball_probe(const Cqms& q, double r, Rng& rng) {
  const Vec u = random_gaussian(q.size(), rng);
  const double gscale = gauge(q, u, r);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double rad = std::pow(unif(rng), 1.0 / q.size());
  return (rad / gscale) * u;
}

}  // namespace detail

/// Greedy farthest-point net of D_r(A) with a probe-based covering certificate.
/// The candidate pool is boundary points along coordinate, unit and random
/// directions together with their radial scalings k/m (step <= eps/2).
inline std::shared_ptr<const BallNet> ball_net_shared(const Cqms& q, double r, double eps, int budget,
                                                      std::uint64_t seed = 11) {
  if (!(r >= 0.0) || !(eps > 0.0) || budget < 1) throw DomainError("ball_net: need r >= 0, eps > 0, budget >= 1");
  const std::string key = detail::key_of({r, eps, double(budget), double(seed)});
  {
    std::lock_guard<std::mutex> lock(q.cache().mu);
    auto it = q.cache().nets.find(key);
    if (it != q.cache().nets.end()) return it->second;
  }
  auto net = std::make_shared<BallNet>();
  net->r = r;
  net->epsilon = eps;
  net->budget = budget;
  net->seed = seed;
  const int n = q.size();
  const int d = q.space().matrix_dim();
  net->points.push_back(Vec::Zero(n));
  net->matrices.push_back(CMatrix::Zero(d, d));
  if (r > 0.0) {
    std::mt19937_64 rng(seed);
    std::vector<Vec> dirs;
    for (int i = 0; i < n; ++i) {
      dirs.push_back(Vec::Unit(n, i));
      dirs.push_back(-Vec::Unit(n, i));
    }
    dirs.push_back(q.space().unit());
    dirs.push_back(-q.space().unit());
    std::vector<Vec> pool;
    const size_t ray_target = static_cast<size_t>(2 * budget);
    size_t next_dir = 0;
    while (pool.size() < ray_target || next_dir < dirs.size()) {
      Vec u = next_dir < dirs.size() ? dirs[next_dir] : random_gaussian(n, rng);
      ++next_dir;
      const Vec b = u / gauge(q, u, r);
      const double len = q.norm(b);
      const int m = std::max(1, static_cast<int>(std::ceil(len / (0.5 * eps))));
      for (int k = 1; k <= m; ++k) pool.push_back((static_cast<double>(k) / m) * b);
      if (next_dir > dirs.size() + 50 * ray_target) break;
    }
    // rays alone leave the interior thin once n > 2
    for (int k = 0; k < 2 * budget; ++k) pool.push_back(detail::ball_probe(q, r, rng));
    std::vector<CMatrix> pm;
    std::vector<double> mind;
    auto absorb = [&](const std::vector<Vec>& pts, size_t from) {
      pm.resize(pts.size());
      mind.resize(pts.size());
      parallel_for(static_cast<int>(pts.size() - from), [&](int j) {
        const size_t i = from + static_cast<size_t>(j);
        pm[i] = q.matrix(pts[i]);
        mind[i] = detail::distance_to_set(pm[i], net->matrices);
      });
    };
    auto greedy = [&]() {
      while (static_cast<int>(net->points.size()) < budget) {
        size_t arg = 0;
        for (size_t i = 1; i < pool.size(); ++i)
          if (mind[i] > mind[arg]) arg = i;
        if (pool.empty() || mind[arg] <= 0.5 * eps) break;
        net->min_separation = std::min(net->min_separation, mind[arg]);
        net->points.push_back(pool[arg]);
        net->matrices.push_back(pm[arg]);
        const CMatrix& added = pm[arg];
        parallel_for(static_cast<int>(pool.size()), [&](int i) {
          const size_t k = static_cast<size_t>(i);
          const CMatrix diff = pm[k] - added;
          if (detail::op_lower(diff) >= mind[k]) return;
          mind[k] = std::min(mind[k], op_norm(diff));
        });
      }
    };
    absorb(pool, 0);
    greedy();
    // Certify with fresh probes; a failing batch joins the pool and a new
    // batch is drawn, so the reported certificate never uses pool points.
    const int probes = std::max(64, budget);
    for (int round = 0;; ++round) {
      net->probes += probes;
      std::vector<Vec> probe_pts;
      for (int p = 0; p < probes; ++p) probe_pts.push_back(detail::ball_probe(q, r, rng));
      std::vector<double> pd(probe_pts.size());
      parallel_for(probes, [&](int i) {
        pd[static_cast<size_t>(i)] =
            detail::distance_to_set(q.matrix(probe_pts[static_cast<size_t>(i)]), net->matrices);
      });
      net->covering_certificate = *std::max_element(pd.begin(), pd.end());
      if (net->covering_certificate <= eps || static_cast<int>(net->points.size()) >= budget || round >= 3) break;
      const size_t from = pool.size();
      pool.insert(pool.end(), probe_pts.begin(), probe_pts.end());
      absorb(pool, from);
      greedy();
    }
  }
  net->incomplete = net->covering_certificate > eps;
  std::lock_guard<std::mutex> lock(q.cache().mu);
  q.cache().nets.emplace(key, net);
  return net;
}

inline BallNet ball_net(const Cqms& q, double r, double eps, int budget, std::uint64_t seed = 11) {
  return *ball_net_shared(q, r, eps, budget, seed);
}

/// Hausdorff distance between two point sets of A in the operator norm.
inline double hausdorff_sets(const std::vector<CMatrix>& a, const std::vector<CMatrix>& b) {
  if (a.empty() || b.empty()) throw DomainError("hausdorff_sets: empty set");
  double h = 0.0;
  for (const auto& p : a) h = std::max(h, detail::distance_to_set(p, b));
  for (const auto& p : b) h = std::max(h, detail::distance_to_set(p, a));
  return h;
}

}  // namespace qgh
