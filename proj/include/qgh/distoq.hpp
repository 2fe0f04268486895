#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "qgh/cqms.hpp"
#include "qgh/examples.hpp"
#include "qgh/finmetric.hpp"
#include "qgh/solver.hpp"

namespace qgh {

/// Linear map phi from a subspace X of A into B. X has an orthonormal basis
/// (columns of Q, coefficient vectors of A) and phi(Q t) = F t.
struct ComparisonMap {
  std::string kind;
  Eigen::MatrixXd Q;      // n_A x k
  Eigen::MatrixXd F;      // n_B x k
  Eigen::MatrixXd F_pinv; // k x n_B, least-squares preimage
  double distortion = 0.0;     // measured sup |(||phi x|| - ||x||)| / ||x||
  bool unit_in_domain = false;
  double unit_defect = 0.0;    // ||phi(e_A) - e_B|| when e_A is in X
  int probes = 0;

  int dim() const { return static_cast<int>(Q.cols()); }
  Vec coords(const Vec& a) const { return Q.transpose() * a; }
  Vec embed(const Vec& t) const { return Q * t; }
  Vec apply(const Vec& t) const { return F * t; }
  /// phi on an element of X given in A-coefficients.
  Vec apply_element(const Vec& a) const { return F * (Q.transpose() * a); }
};

namespace detail {

inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return Eigen::MatrixXd::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const double tol = 1e-12 * std::max(1.0, s.size() ? s(0) : 0.0);
  Vec inv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) inv(i) = s(i) > tol ? 1.0 / s(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace detail

/// Fills F_pinv, the unit defect and the distortion, measured over the X
/// basis, random directions in X and D_R(A) probes projected onto X.
inline ComparisonMap finish_map(const Cqms& A, const Cqms& B, ComparisonMap m, double R, int probes = 200,
                                std::uint64_t seed = 17) {
  if (m.Q.rows() != A.size() || m.F.rows() != B.size() || m.Q.cols() != m.F.cols())
    throw DimensionError("ComparisonMap: shapes do not match the spaces");
  m.F_pinv = detail::pseudo_inverse(m.F);
  const Vec& eA = A.space().unit();
  const Vec te = m.coords(eA);
  m.unit_in_domain = (m.embed(te) - eA).norm() <= 1e-10 * eA.norm();
  if (m.unit_in_domain) m.unit_defect = B.norm(m.apply(te) - B.space().unit());
  std::mt19937_64 rng(seed);
  std::vector<Vec> dirs;
  for (int k = 0; k < m.dim(); ++k) dirs.push_back(Vec::Unit(m.dim(), k));
  if (m.unit_in_domain) dirs.push_back(te);
  for (int s = 0; s < probes; ++s) {
    if (s % 2 == 0 || R <= 0.0 || A.size() == 1)
      dirs.push_back(random_gaussian(m.dim(), rng));
    else
      dirs.push_back(m.coords(detail::ball_probe(A, R, rng)));
  }
  m.probes = static_cast<int>(dirs.size());
  double worst = 0.0;
  for (const Vec& t : dirs) {
    const double nx = A.norm(m.embed(t));
    if (nx <= 1e-14) continue;
    worst = std::max(worst, std::abs(B.norm(m.apply(t)) - nx) / nx);
  }
  m.distortion = worst;
  return m;
}

/// A and B on the same space: phi = id.
inline ComparisonMap identity_map(const Cqms& A, const Cqms& B, double R = 1.0) {
  if (A.size() != B.size() || A.space().labels() != B.space().labels() ||
      A.space().matrix_dim() != B.space().matrix_dim())
    throw DomainError("identity_map: spaces differ");
  ComparisonMap m;
  m.kind = "identity";
  m.Q = Eigen::MatrixXd::Identity(A.size(), A.size());
  m.F = m.Q;
  return finish_map(A, B, m, R);
}

/// Cycle m to cycle k m: f on Z_m goes to its piecewise-linear interpolation
/// on Z_{km} (point i lands on label k i). Sup norm and unit are preserved.
inline ComparisonMap refine_map(const Cqms& A, const Cqms& B, double R = 1.0) {
  if (A.meta().family != "cycle" || B.meta().family != "cycle") throw DomainError("refine_map: needs two cycles");
  const int m = static_cast<int>(A.meta().params.at("m"));
  const int mb = static_cast<int>(B.meta().params.at("m"));
  if (mb % m != 0) throw DomainError("refine_map: target size must be a multiple of the source size");
  const int k = mb / m;
  ComparisonMap c;
  c.kind = "refine";
  c.Q = Eigen::MatrixXd::Identity(m, m);
  c.F = Eigen::MatrixXd::Zero(mb, m);
  for (int j = 0; j < mb; ++j) {
    const int i = j / k;
    const double frac = static_cast<double>(j % k) / k;
    c.F(j, i) += 1.0 - frac;
    if (frac > 0.0) c.F(j, (i + 1) % m) += frac;
  }
  return finish_map(A, B, c, R);
}

/// Tori (or the scalar model): match equal frequency labels, rescaling by
/// sqrt(d_B / d_A) so u_w goes to u_w. X = span of the shared labels.
inline ComparisonMap frequency_map(const Cqms& A, const Cqms& B, double R = 1.0) {
  auto is_torus = [](const Cqms& q) { return q.meta().family == "torus" || q.meta().family == "scalar"; };
  if (!is_torus(A) || !is_torus(B)) throw DomainError("frequency_map: needs torus models");
  const double scale = std::sqrt(static_cast<double>(B.space().matrix_dim()) / A.space().matrix_dim());
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < A.size(); ++i) {
    const int j = B.space().find(A.space().label(i));
    if (j >= 0) pairs.emplace_back(i, j);
  }
  ComparisonMap c;
  c.kind = "frequency";
  c.Q = Eigen::MatrixXd::Zero(A.size(), static_cast<Eigen::Index>(pairs.size()));
  c.F = Eigen::MatrixXd::Zero(B.size(), static_cast<Eigen::Index>(pairs.size()));
  for (size_t k = 0; k < pairs.size(); ++k) {
    c.Q(pairs[k].first, static_cast<Eigen::Index>(k)) = 1.0;
    c.F(pairs[k].second, static_cast<Eigen::Index>(k)) = scale;
  }
  return finish_map(A, B, c, R);
}

/// Spheres on a common grid: phi = sigma_hat_B o sigma_A.
inline ComparisonMap berezin_map(const Cqms& A, const Cqms& B, double R = 1.0) {
  const BerezinMaps ba = berezin_maps(A);
  const BerezinMaps bb = berezin_maps(B);
  if (ba.symbols.rows() != bb.symbols.rows()) throw DomainError("berezin_map: spheres on different grids");
  ComparisonMap c;
  c.kind = "berezin";
  c.Q = Eigen::MatrixXd::Identity(A.size(), A.size());
  Eigen::MatrixXd wa = ba.symbols;
  for (Eigen::Index x = 0; x < wa.rows(); ++x) wa.row(x) *= bb.d * bb.weights[static_cast<size_t>(x)];
  c.F = bb.symbols.transpose() * wa;
  return finish_map(A, B, c, R);
}

/// Spheres: match spherical tensor labels (l, m) up to the smaller top spin,
/// rescaled per l so the m = 0 element keeps its operator norm.
inline ComparisonMap spin_map(const Cqms& A, const Cqms& B, double R = 1.0) {
  if (A.meta().family != "sphere" || B.meta().family != "sphere") throw DomainError("spin_map: needs two spheres");
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < A.size(); ++i) {
    const int j = B.space().find(A.space().label(i));
    if (j >= 0) pairs.emplace_back(i, j);
  }
  auto l_of = [](const std::string& label) { return std::stoi(label.substr(2, label.find(',') - 2)); };
  std::map<int, double> scale;
  for (const auto& [i, j] : pairs) {
    const std::string& lab = A.space().label(i);
    if (lab[0] == 't') scale[l_of(lab)] = A.norm(Vec::Unit(A.size(), i)) / B.norm(Vec::Unit(B.size(), j));
  }
  ComparisonMap c;
  c.kind = "spin";
  c.Q = Eigen::MatrixXd::Zero(A.size(), static_cast<Eigen::Index>(pairs.size()));
  c.F = Eigen::MatrixXd::Zero(B.size(), static_cast<Eigen::Index>(pairs.size()));
  for (size_t k = 0; k < pairs.size(); ++k) {
    c.Q(pairs[k].first, static_cast<Eigen::Index>(k)) = 1.0;
    c.F(pairs[k].second, static_cast<Eigen::Index>(k)) = scale.at(l_of(A.space().label(pairs[k].first)));
  }
  return finish_map(A, B, c, R);
}

/// X = R e_A, phi(e_A) = e_B.
inline ComparisonMap scalar_map(const Cqms& A, const Cqms& B, double R = 1.0) {
  const Vec& eA = A.space().unit();
  ComparisonMap c;
  c.kind = "scalar";
  c.Q = eA / eA.norm();
  c.F = B.space().unit() / eA.norm();
  return finish_map(A, B, c, R);
}

/// Map by kind name: identity, refine, frequency, berezin, spin, scalar.
inline ComparisonMap make_comparison(const std::string& kind, const Cqms& A, const Cqms& B, double R = 1.0) {
  if (kind == "identity") return identity_map(A, B, R);
  if (kind == "refine") return refine_map(A, B, R);
  if (kind == "frequency") return frequency_map(A, B, R);
  if (kind == "berezin") return berezin_map(A, B, R);
  if (kind == "spin") return spin_map(A, B, R);
  if (kind == "scalar") return scalar_map(A, B, R);
  throw DomainError("make_comparison: unknown map kind '" + kind + "'");
}

/// Default map for a pair, chosen from the families.
inline std::string default_map_kind(const Cqms& A, const Cqms& B) {
  const std::string& fa = A.meta().family;
  const std::string& fb = B.meta().family;
  if (A.size() == 1 || fa == "scalar") return fb == "torus" || fb == "scalar" ? "frequency" : "scalar";
  if (fa == fb && A.space().labels() == B.space().labels() && A.space().matrix_dim() == B.space().matrix_dim())
    return "identity";
  if (fa == "cycle" && fb == "cycle") return "refine";
  if (fa == "torus" && (fb == "torus" || fb == "scalar")) return "frequency";
  if (fa == "sphere" && fb == "sphere") return "spin";
  return "scalar";
}

// ---------------------------------------------------------------------------

struct AmalOptions {
  ContinuationOptions solver{{0.02, 0.004, 0.0008}, 40, 1e-10, 1e-5, 5};
  // single evaluations (evaluate / operator()) go down to mu ~ 1e-7 relative
  ContinuationOptions precise{{0.02, 0.004, 0.0008, 1.6e-4, 3.2e-5, 6.4e-6, 1.3e-6, 2.6e-7}, 200, 1e-12, 1e-9, 6};
  int refine_top = 2;  // candidates per point refined by descent in Hausdorff
};

struct NormValue {
  double value = 0.0;
  bool upper_approximation = false;  // value attained at a feasible x, so >= the infimum
  Vec x;                             // minimizer coordinates in X (almost_amal)
  double lambda = 0.0;               // minimizer (bridge seminorm)
};

/// Norm oracle on A (+) B.
class SumNorm {
 public:
  enum class Kind { eps_amalgam, almost_amal, bridge };

  static SumNorm eps_amalgam(const Cqms& A, const Cqms& B, double eps) {
    if (A.space().matrix_dim() != B.space().matrix_dim())
      throw DomainError("eps_amalgam_norm: A and B are not in one matrix space");
    if (!(eps > 0.0 && eps <= 1.0)) throw DomainError("eps_amalgam_norm: need 0 < eps <= 1");
    SumNorm n(Kind::eps_amalgam, A, B);
    n.eps_ = eps;
    return n;
  }

  static SumNorm almost_amal(const Cqms& A, const Cqms& B, std::shared_ptr<const ComparisonMap> phi, double eps,
                             AmalOptions opt = {}) {
    if (!phi) throw DomainError("almost_amal_norm: missing comparison map");
    if (eps < phi->distortion)
      throw DomainError("almost_amal_norm: eps " + std::to_string(eps) + " below the measured distortion " +
                        std::to_string(phi->distortion));
    SumNorm n(Kind::almost_amal, A, B);
    n.eps_ = eps;
    n.phi_ = std::move(phi);
    n.opt_ = std::move(opt);
    n.prepare();
    return n;
  }

  static SumNorm bridge(const Cqms& A, const Cqms& B, std::shared_ptr<const ComparisonMap> phi, double R, double d) {
    if (!(R > 0.0 && d > 0.0)) throw DomainError("bridge_norm: need R, d > 0");
    if (!phi || phi->dim() != A.size()) throw DomainError("bridge_norm: identification must be defined on all of A");
    SumNorm n(Kind::bridge, A, B);
    n.R_ = R;
    n.d_ = d;
    n.phi_ = std::move(phi);
    return n;
  }

  Kind kind() const { return kind_; }
  std::string kind_name() const {
    switch (kind_) {
      case Kind::eps_amalgam: return "eps_amalgam";
      case Kind::almost_amal: return "almost_amal";
      default: return "bridge";
    }
  }
  double eps() const { return eps_; }
  const Cqms& A() const { return *A_; }
  const Cqms& B() const { return *B_; }
  const ComparisonMap* map() const { return phi_.get(); }
  const AmalOptions& options() const { return opt_; }
  /// Restrictions to A and B reproduce their norms (not the case for bridge).
  bool admissible() const { return kind_ != Kind::bridge; }

  /// ||(a, b)|| for coefficient vectors; extra_seeds are points of X (coords).
  NormValue evaluate(const Vec& a, const Vec& b, const std::vector<Vec>& extra_seeds = {}) const {
    if (a.size() != A_->size() || b.size() != B_->size()) throw DimensionError("SumNorm: coefficient lengths");
    NormValue out;
    switch (kind_) {
      case Kind::eps_amalgam: {
        const CMatrix ma = A_->matrix(a), mb = B_->matrix(b);
        out.value = std::max({op_norm(ma + mb), eps_ * op_norm(ma), eps_ * op_norm(mb)});
        return out;
      }
      case Kind::bridge: {
        out.value = std::max({A_->norm(a) / R_, B_->norm(b) / R_, B_->norm(phi_->apply_element(a) - b) / d_});
        return out;
      }
      default: return amal(a, b, extra_seeds, true, true);
    }
  }
  double operator()(const Vec& a, const Vec& b) const { return evaluate(a, b).value; }

  /// Value at a given x in X (almost_amal only); an upper bound for the norm.
  double amal_at(const CMatrix& ma, const CMatrix& mb, const Vec& t) const {
    const CMatrix x = element_x(t);
    return op_norm(ma - x) + op_norm(mb + element_phi(t)) + eps_ * op_norm(x);
  }

  /// N(a, b) = inf_lambda ||(a, b) + lambda (e_A, e_B)||_1 (bridge only), by
  /// golden-section search; the objective is convex in lambda.
  NormValue bridge_seminorm(const Vec& a, const Vec& b) const {
    if (kind_ != Kind::bridge) throw DomainError("bridge_seminorm: not a bridge norm");
    const Vec& eA = A_->space().unit();
    const Vec& eB = B_->space().unit();
    auto f = [&](double lam) { return evaluate(a + lam * eA, b + lam * eB).value; };
    const double v0 = f(0.0);
    double lo = -(R_ * v0 + A_->norm(a)) - 1e-12, hi = -lo;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
      if (f1 <= f2) {
        hi = x2, x2 = x1, f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = f(x1);
      } else {
        lo = x1, x1 = x2, f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = f(x2);
      }
    }
    NormValue out;
    out.lambda = 0.5 * (lo + hi);
    out.value = std::min({f(out.lambda), v0, f1, f2});
    out.upper_approximation = true;
    return out;
  }

  /// Seeds for the almost_amal descent: 0, the projection of a onto X and a
  /// preimage of -b.
  std::vector<Vec> seeds(const Vec& a, const Vec& b) const {
    return {Vec::Zero(phi_->dim()), phi_->coords(a), Vec(-(phi_->F_pinv * b))};
  }

  CMatrix element_x(const Vec& t) const {
    CMatrix m = CMatrix::Zero(A_->space().matrix_dim(), A_->space().matrix_dim());
    for (Eigen::Index k = 0; k < t.size(); ++k)
      if (t(k) != 0.0) m += t(k) * xa_[static_cast<size_t>(k)];
    return m;
  }
  CMatrix element_phi(const Vec& t) const {
    CMatrix m = CMatrix::Zero(B_->space().matrix_dim(), B_->space().matrix_dim());
    for (Eigen::Index k = 0; k < t.size(); ++k)
      if (t(k) != 0.0) m += t(k) * fb_[static_cast<size_t>(k)];
    return m;
  }

  /// Infimum over x in X from the given seeds (best seed only when
  /// all_seeds is false); precise selects the long continuation schedule.
  NormValue amal(const Vec& a, const Vec& b, const std::vector<Vec>& extra, bool all_seeds,
                 bool precise = false) const {
    const CMatrix ma = A_->matrix(a), mb = B_->matrix(b);
    std::vector<Vec> starts = seeds(a, b);
    starts.insert(starts.end(), extra.begin(), extra.end());
    std::vector<std::pair<double, size_t>> vals;
    for (size_t i = 0; i < starts.size(); ++i) vals.emplace_back(amal_at(ma, mb, starts[i]), i);
    std::stable_sort(vals.begin(), vals.end());
    NormValue out;
    out.upper_approximation = true;
    out.value = vals.front().first;
    out.x = starts[vals.front().second];
    if (phi_->dim() == 0 || out.value <= 0.0) return out;
    const size_t runs = all_seeds ? vals.size() : 1;
    for (size_t r = 0; r < runs; ++r) {
      const MinimizeResult res = descend(ma, mb, starts[vals[r].second], precise ? opt_.precise : opt_.solver);
      if (res.value < out.value) out.value = res.value, out.x = res.x;
    }
    return out;
  }

 private:
  SumNorm(Kind k, const Cqms& A, const Cqms& B) : kind_(k), A_(&A), B_(&B) {}

  void prepare() {
    for (int k = 0; k < phi_->dim(); ++k) {
      xa_.push_back(A_->matrix(phi_->Q.col(k)));
      fb_.push_back(B_->matrix(phi_->F.col(k)));
    }
  }

  static double re_inner(const CMatrix& g, const CMatrix& h) { return (g.array() * h.conjugate().array()).real().sum(); }

  MinimizeResult descend(const CMatrix& ma, const CMatrix& mb, const Vec& t0, const ContinuationOptions& copt) const {
    const int k = phi_->dim();
    auto f = [&](const Vec& t, double mu, bool want_grad) {
      const CMatrix x = element_x(t);
      const CMatrix m1 = ma - x, m2 = mb + element_phi(t);
      CMatrix g1, g2, g3;
      SmoothedValue s1 = smoothed_op_norm(m1, mu, want_grad, &g1);
      SmoothedValue s2 = smoothed_op_norm(m2, mu, want_grad, &g2);
      SmoothedValue s3 = smoothed_op_norm(x, mu, want_grad, &g3);
      SmoothedValue out;
      out.exact = s1.exact + s2.exact + eps_ * s3.exact;
      out.smooth = s1.smooth + s2.smooth + eps_ * s3.smooth;
      if (want_grad) {
        out.grad.resize(k);
        for (int i = 0; i < k; ++i)
          out.grad(i) = -re_inner(g1, xa_[static_cast<size_t>(i)]) + re_inner(g2, fb_[static_cast<size_t>(i)]) +
                        eps_ * re_inner(g3, xa_[static_cast<size_t>(i)]);
      }
      return out;
    };
    auto id = [](const Vec& t) { return t; };
    return fista_minimize(f, id, t0, copt);
  }

  Kind kind_;
  const Cqms* A_;
  const Cqms* B_;
  double eps_ = 0.0, R_ = 0.0, d_ = 0.0;
  std::shared_ptr<const ComparisonMap> phi_;
  AmalOptions opt_;
  std::vector<CMatrix> xa_, fb_;
};

inline SumNorm eps_amalgam_norm(const Cqms& A, const Cqms& B, double eps) { return SumNorm::eps_amalgam(A, B, eps); }

inline SumNorm almost_amal_norm(const Cqms& A, const Cqms& B, const ComparisonMap& phi, double eps,
                                AmalOptions opt = {}) {
  return SumNorm::almost_amal(A, B, std::make_shared<const ComparisonMap>(phi), eps, std::move(opt));
}

inline SumNorm bridge_norm(const Cqms& A, const Cqms& B, const ComparisonMap& phi, double R, double d) {
  return SumNorm::bridge(A, B, std::make_shared<const ComparisonMap>(phi), R, d);
}

/// Hausdorff distance between {(a_i, 0)} and {(0, b_j)} under an almost_amal
/// norm, i.e. between the nets through ||(a, -b)||_*. Every pair value is an
/// upper bound (attained at some x), so the result is an upper estimate. Only
/// points that can still set the maximum get refined by descent.
inline double amal_hausdorff(const SumNorm& n, const std::vector<Vec>& pa, const std::vector<Vec>& pb) {
  if (n.kind() != SumNorm::Kind::almost_amal) throw DomainError("amal_hausdorff: needs an almost_amal norm");
  if (pa.empty() || pb.empty()) throw DomainError("amal_hausdorff: empty net");
  const Cqms& A = n.A();
  const Cqms& B = n.B();
  const ComparisonMap& phi = *n.map();
  const size_t na = pa.size(), nb = pb.size();
  std::vector<CMatrix> ma(na), mb(nb), xa(na), pxa(na), yb(nb), pyb(nb);
  std::vector<double> nxa(na), nyb(nb), resa(na), resb(nb);
  parallel_for(static_cast<int>(na), [&](int i) {
    const size_t k = static_cast<size_t>(i);
    ma[k] = A.matrix(pa[k]);
    const Vec t = phi.coords(pa[k]);
    xa[k] = n.element_x(t);
    pxa[k] = n.element_phi(t);
    nxa[k] = op_norm(xa[k]);
    resa[k] = op_norm(ma[k] - xa[k]);
  });
  parallel_for(static_cast<int>(nb), [&](int j) {
    const size_t k = static_cast<size_t>(j);
    mb[k] = B.matrix(pb[k]);
    const Vec t = phi.F_pinv * pb[k];
    yb[k] = n.element_x(t);
    pyb[k] = n.element_phi(t);
    nyb[k] = op_norm(yb[k]);
    resb[k] = op_norm(mb[k] - pyb[k]);
  });
  std::vector<double> norm_a(na), norm_b(nb);
  for (size_t i = 0; i < na; ++i) norm_a[i] = op_norm(ma[i]);
  for (size_t j = 0; j < nb; ++j) norm_b[j] = op_norm(mb[j]);
  // Cheap upper bounds at x = 0, x = P_X a and x = preimage of b.
  Eigen::MatrixXd U(na, nb);
  parallel_for(static_cast<int>(na), [&](int i) {
    const size_t a = static_cast<size_t>(i);
    for (size_t b = 0; b < nb; ++b) {
      double v = norm_a[a] + norm_b[b];
      v = std::min(v, resa[a] + op_norm(pxa[a] - mb[b]) + n.eps() * nxa[a]);
      v = std::min(v, op_norm(ma[a] - yb[b]) + resb[b] + n.eps() * nyb[b]);
      U(i, static_cast<Eigen::Index>(b)) = v;
    }
  });
  auto refine = [&](size_t a, size_t b, double cheap) {
    const NormValue r = n.amal(pa[a], Vec(-pb[b]), {}, false);
    return std::min(cheap, r.value);
  };
  double h = 0.0;
  // Side A: max_i min_j.
  {
    std::vector<std::pair<double, size_t>> order;
    for (size_t i = 0; i < na; ++i) order.emplace_back(U.row(static_cast<Eigen::Index>(i)).minCoeff(), i);
    std::stable_sort(order.begin(), order.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
    for (const auto& [cheap, i] : order) {
      if (cheap <= h) break;
      std::vector<std::pair<double, size_t>> cand;
      for (size_t j = 0; j < nb; ++j) cand.emplace_back(U(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), j);
      std::stable_sort(cand.begin(), cand.end());
      double best = cheap;
      for (int c = 0; c < std::min<int>(n.options().refine_top, static_cast<int>(cand.size())); ++c)
        best = std::min(best, refine(i, cand[static_cast<size_t>(c)].second, cand[static_cast<size_t>(c)].first));
      h = std::max(h, best);
    }
  }
  {
    std::vector<std::pair<double, size_t>> order;
    for (size_t j = 0; j < nb; ++j) order.emplace_back(U.col(static_cast<Eigen::Index>(j)).minCoeff(), j);
    std::stable_sort(order.begin(), order.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
    for (const auto& [cheap, j] : order) {
      if (cheap <= h) break;
      std::vector<std::pair<double, size_t>> cand;
      for (size_t i = 0; i < na; ++i) cand.emplace_back(U(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), i);
      std::stable_sort(cand.begin(), cand.end());
      double best = cheap;
      for (int c = 0; c < std::min<int>(n.options().refine_top, static_cast<int>(cand.size())); ++c)
        best = std::min(best, refine(cand[static_cast<size_t>(c)].second, j, cand[static_cast<size_t>(c)].first));
      h = std::max(h, best);
    }
  }
  return h;
}

// ---------------------------------------------------------------------------

struct DistOqOptions {
  double eps_net = 0.25;
  int budget = 256;
  std::uint64_t seed = 11;
  /// R <= 0: plain dist_oq with D(A) = D_{r_A}(A) and unit term
  /// ||r_A e_A - r_B e_B||. Otherwise the R-variant.
  double R = 0.0;
  /// eps of the almost_amal norm = distortion * (1 + eps_margin) + 1e-9.
  double eps_margin = 0.05;
  AmalOptions amal;
};

struct DistOqReport {
  std::string a_name, b_name, map_kind, variant;  // variant: "plain" or "R"
  double R_A = 0.0, R_B = 0.0;
  double radius_A = 0.0, radius_B = 0.0;
  double distortion = 0.0, eps = 0.0, unit_defect = 0.0;
  double hausdorff = 0.0;   // between the nets
  double unit_term = 0.0;
  double value = 0.0;       // max(hausdorff, unit_term)
  double certificate_A = 0.0, certificate_B = 0.0;
  double slack = 0.0;       // certificate_A + certificate_B
  double upper = 0.0;       // value + slack
  int net_A = 0, net_B = 0;
  bool degraded = false;    // a net certificate exceeds eps_net
};

/// Upper estimate of dist_oq (or dist_oq^R) through an almost_amal norm built
/// from phi, evaluated on ball nets of both sides.
inline DistOqReport dist_oq_upper(const Cqms& A, const Cqms& B, const ComparisonMap& phi,
                                  const DistOqOptions& opt = {}) {
  DistOqReport rep;
  rep.a_name = A.name();
  rep.b_name = B.name();
  rep.map_kind = phi.kind;
  rep.radius_A = radius(A).value;
  rep.radius_B = radius(B).value;
  if (opt.R > 0.0) {
    if (opt.R < std::max(rep.radius_A, rep.radius_B) * (1.0 - 1e-9))
      throw DomainError("dist_oq_upper: R below a radius estimate");
    rep.variant = "R";
    rep.R_A = rep.R_B = opt.R;
  } else {
    rep.variant = "plain";
    rep.R_A = rep.radius_A;
    rep.R_B = rep.radius_B;
  }
  rep.distortion = phi.distortion;
  rep.unit_defect = phi.unit_defect;
  rep.eps = phi.distortion * (1.0 + opt.eps_margin) + 1e-9;
  const SumNorm n = SumNorm::almost_amal(A, B, std::make_shared<const ComparisonMap>(phi), rep.eps, opt.amal);
  const auto na = ball_net_shared(A, rep.R_A, opt.eps_net, opt.budget, opt.seed);
  const auto nb = ball_net_shared(B, rep.R_B, opt.eps_net, opt.budget, opt.seed);
  rep.net_A = static_cast<int>(na->points.size());
  rep.net_B = static_cast<int>(nb->points.size());
  rep.certificate_A = na->covering_certificate;
  rep.certificate_B = nb->covering_certificate;
  rep.degraded = na->incomplete || nb->incomplete;
  rep.hausdorff = amal_hausdorff(n, na->points, nb->points);
  rep.unit_term = n.evaluate(rep.R_A * A.space().unit(), -rep.R_B * B.space().unit()).value;
  rep.value = std::max(rep.hausdorff, rep.unit_term);
  rep.slack = rep.certificate_A + rep.certificate_B;
  rep.upper = rep.value + rep.slack;
  return rep;
}

struct DistOqLowerReport {
  std::string a_name, b_name, variant;
  double radius_gap = 0.0;     // |r_A - r_B| (plain variant only)
  double radius_slack = 0.0;
  double gh_subnet = 0.0;      // gh_lower_bound on the sub-nets
  double subnet_slack = 0.0;   // how far the sub-nets are from the balls
  double value = 0.0;
  int subnet_size = 0;
};

/// Relative tolerance granted to radius estimates when a lower bound uses them.
inline constexpr double kRadiusRelSlack = 0.02;

namespace detail {

/// Metric space on the first k net points (farthest-point order) and the
/// distance from the rest of the net to them plus the net certificate.
inline std::pair<FiniteMetricSpace, double> subnet_space(const BallNet& net, int k) {
  const size_t m = std::min(net.matrices.size(), static_cast<size_t>(std::max(1, k)));
  Eigen::MatrixXd d(m, m);
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < m; ++j) d(i, j) = i == j ? 0.0 : op_norm(net.matrices[i] - net.matrices[j]);
  std::vector<CMatrix> sub(net.matrices.begin(), net.matrices.begin() + static_cast<long>(m));
  double gap = 0.0;
  for (const auto& p : net.matrices) gap = std::max(gap, distance_to_set(p, sub));
  return {FiniteMetricSpace(d, 1e-7), gap + net.covering_certificate};
}

}  // namespace detail

/// Lower estimate of dist_oq (plain) or dist_oq^R: the radius gap and a GH
/// lower bound between small sub-nets of the balls, each minus its slack,
/// floored at 0.
inline DistOqLowerReport dist_oq_lower(const Cqms& A, const Cqms& B, const DistOqOptions& opt = {},
                                       int subnet_size = 10) {
  DistOqLowerReport rep;
  rep.a_name = A.name();
  rep.b_name = B.name();
  const double ra = radius(A).value, rb = radius(B).value;
  double RA = ra, RB = rb;
  if (opt.R > 0.0) {
    rep.variant = "R";
    RA = RB = opt.R;
  } else {
    rep.variant = "plain";
    rep.radius_gap = std::abs(ra - rb);
    rep.radius_slack = kRadiusRelSlack * std::max(ra, rb);
  }
  double best = std::max(0.0, rep.radius_gap - rep.radius_slack);
  if (RA > 0.0 || RB > 0.0) {
    const auto na = ball_net_shared(A, RA, opt.eps_net, opt.budget, opt.seed);
    const auto nb = ball_net_shared(B, RB, opt.eps_net, opt.budget, opt.seed);
    const auto [xa, sa] = detail::subnet_space(*na, subnet_size);
    const auto [xb, sb] = detail::subnet_space(*nb, subnet_size);
    rep.subnet_size = std::min(xa.size(), xb.size());
    rep.gh_subnet = gh_lower_bound(xa, xb).value;
    rep.subnet_slack = sa + sb;
    best = std::max(best, rep.gh_subnet - rep.subnet_slack);
  }
  rep.value = best;
  return rep;
}

// ---------------------------------------------------------------------------

struct AuditCheck {
  std::string name;
  bool pass = false;
  double lhs = 0.0, rhs = 0.0;  // pass iff lhs <= rhs
};

struct AuditInput {
  double radius_A = 0.0, radius_B = 0.0;
  DistOqLowerReport lower_oq, lower_oqR;
  DistOqReport upper_oq, upper_oqR, upper_oq_rB;  // upper_oq_rB: R-variant at R = r_B
};

struct AuditRecord {
  std::vector<AuditCheck> checks;
  double dist_q_low = 0.0, dist_q_high = 0.0;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

/// Consistency of the estimates with the inequalities relating dist_oq,
/// dist_oq^R, the radii and dist_q. Failures are findings, not exceptions.
inline AuditRecord audit_chain(const AuditInput& in) {
  AuditRecord rec;
  auto add = [&](const std::string& name, double lhs, double rhs) {
    rec.checks.push_back({name, lhs <= rhs + 1e-12, lhs, rhs});
  };
  const double gap = std::abs(in.radius_A - in.radius_B);
  const double rslack = kRadiusRelSlack * std::max(in.radius_A, in.radius_B);
  add("lower_oq <= upper_oq", in.lower_oq.value, in.upper_oq.upper);
  add("lower_oqR <= upper_oqR", in.lower_oqR.value, in.upper_oqR.upper);
  add("radius gap <= upper_oq", gap - rslack, in.upper_oq.upper);
  add("upper_oq <= r_A + r_B", in.upper_oq.value, in.radius_A + in.radius_B + in.upper_oq.slack);
  // dist_q interval from dist_oq/3 <= dist_q <= 5 dist_oq.
  const double lo1 = in.lower_oq.value / 3.0, hi1 = 5.0 * in.upper_oq.upper;
  // and from dist_oq^R / 2 <= dist_q <= 5/2 dist_oq^R.
  const double lo2 = in.lower_oqR.value / 2.0, hi2 = 2.5 * in.upper_oqR.upper;
  add("dist_q interval (1/3, 5) nonempty", lo1, hi1);
  add("dist_q interval (1/2, 5/2) nonempty", lo2, hi2);
  rec.dist_q_low = std::max(lo1, lo2);
  rec.dist_q_high = std::min(hi1, hi2);
  add("dist_q combined interval nonempty", rec.dist_q_low, rec.dist_q_high);
  // |dist_oq - dist_oq^{r_B}| <= |r_A - r_B| with the lower end of each
  // interval against the upper end of the other.
  if (in.upper_oq_rB.variant == "R") {
    add("dist_oq vs dist_oq^{r_B} (a)", in.lower_oq.value, in.upper_oq_rB.upper + gap + rslack);
  }
  return rec;
}

/// Runs every estimate the audit needs for one pair.
inline AuditRecord audit_pair(const Cqms& A, const Cqms& B, const ComparisonMap& phi, const DistOqOptions& opt,
                              AuditInput* out = nullptr) {
  AuditInput in;
  in.radius_A = radius(A).value;
  in.radius_B = radius(B).value;
  DistOqOptions plain = opt;
  plain.R = 0.0;
  DistOqOptions rv = opt;
  rv.R = std::max(in.radius_A, in.radius_B);
  in.upper_oq = dist_oq_upper(A, B, phi, plain);
  in.lower_oq = dist_oq_lower(A, B, plain);
  in.upper_oqR = dist_oq_upper(A, B, phi, rv);
  in.lower_oqR = dist_oq_lower(A, B, rv);
  if (in.radius_B >= in.radius_A) {
    in.upper_oq_rB = in.upper_oqR;
  } else {
    in.upper_oq_rB.variant = "";  // R = r_B < r_A is outside the upper estimator's domain
  }
  if (out) *out = in;
  return audit_chain(in);
}

}  // namespace qgh
