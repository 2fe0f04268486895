#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "qgh/numerics.hpp"

namespace qgh {

/// Value of a log-sum-exp smoothing together with the exact nonsmooth value
/// at the same point. grad is empty unless requested.
struct SmoothedValue {
  double smooth = 0.0;
  double exact = 0.0;
  Vec grad;
};

struct ContinuationOptions {
  std::vector<double> mu_factors{0.02, 0.005, 0.0012, 0.0003};
  int max_iters_per_stage = 60;
  double step_tol = 1e-10;
  // A stage ends early once the smoothed value improved by less than
  // stall_tol (relative) over stall_window accepted iterations.
  double stall_tol = 1e-5;
  int stall_window = 6;
};

struct MinimizeResult {
  Vec x;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
};

/// Accelerated projected gradient (FISTA with backtracking and adaptive
/// restart) on a sequence of smoothings. f(x, mu, want_grad) returns a
/// SmoothedValue; project maps onto the affine feasible set. The result is the
/// iterate with the smallest exact value seen.
template <class F, class P>
MinimizeResult fista_minimize(F&& f, P&& project, Vec x0, const ContinuationOptions& opt) {
  MinimizeResult best;
  x0 = project(x0);
  SmoothedValue start = f(x0, 1.0, false);
  ++best.evaluations;
  best.x = x0;
  best.value = start.exact;
  const double scale = std::max(start.exact, 1e-300);
  auto track = [&](const Vec& x, double exact) {
    if (exact < best.value) {
      best.value = exact;
      best.x = x;
    }
  };
  double lip = 1.0;
  for (double factor : opt.mu_factors) {
    const double mu = factor * scale;
    Vec x = best.x;
    Vec y = x;
    double t = 1.0;
    SmoothedValue fx = f(x, mu, false);
    ++best.evaluations;
    lip = std::max(lip, 1e-12);
    std::vector<double> history{fx.smooth};
    for (int it = 0; it < opt.max_iters_per_stage; ++it) {
      SmoothedValue fy = f(y, mu, true);
      ++best.evaluations;
      track(y, fy.exact);
      Vec z;
      SmoothedValue fz;
      double step_norm = 0.0;
      for (int bt = 0; bt < 60; ++bt) {
        z = project(y - fy.grad / lip);
        fz = f(z, mu, false);
        ++best.evaluations;
        const Vec diff = z - y;
        step_norm = diff.norm();
        const double model = fy.smooth + fy.grad.dot(diff) + 0.5 * lip * diff.squaredNorm();
        if (fz.smooth <= model + 1e-14 * std::abs(fy.smooth)) break;
        lip *= 2.0;
      }
      track(z, fz.exact);
      if (fz.smooth > fx.smooth) {
        // Adaptive restart: drop momentum, retry from the last accepted point.
        y = x;
        t = 1.0;
        if (step_norm <= opt.step_tol * (1.0 + x.norm())) break;
        continue;
      }
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = z + ((t - 1.0) / t_next) * (z - x);
      x = std::move(z);
      fx = fz;
      t = t_next;
      lip *= 0.9;
      if (step_norm <= opt.step_tol * (1.0 + x.norm())) break;
      history.push_back(fx.smooth);
      const size_t h = history.size();
      if (h > static_cast<size_t>(opt.stall_window) &&
          history[h - 1 - static_cast<size_t>(opt.stall_window)] - fx.smooth <= opt.stall_tol * std::abs(fx.smooth))
        break;
    }
    lip *= 2.0;
  }
  return best;
}

/// Accumulates mu log sum exp(+-lambda / mu) over the eigenvalues of several
/// Hermitian pieces, shifted by the exact maximum F.
class SpectralLogSumExp {
 public:
  SpectralLogSumExp(double F, double mu) : F_(F), mu_(mu) {}

  /// Adds the piece and returns the gradient weight matrix of this piece
  /// (unnormalized; divide by z() at the end) when want_grad.
  CMatrix add(const CMatrix& m, bool want_grad) {
    if (!want_grad) {
      const Vec ev = hermitian_eigenvalues(m);
      for (Eigen::Index i = 0; i < ev.size(); ++i) z_ += pair_sum(ev(i));
      return CMatrix();
    }
    const EigResult e = hermitian_eig(m);
    const Eigen::Index n = m.rows();
    CMatrix w = CMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < e.values.size(); ++i) {
      const double lam = e.values(i);
      const double ep = std::exp((lam - F_) / mu_);
      const double em = std::exp((-lam - F_) / mu_);
      z_ += ep + em;
      const double om = ep - em;
      if (om == 0.0) continue;
      const cplx* v = e.vectors.data() + i * n;
      for (Eigen::Index c = 0; c < n; ++c) {
        const cplx vc = om * std::conj(v[c]);
        for (Eigen::Index r = 0; r < n; ++r) w(r, c) += v[r] * vc;
      }
    }
    return w;
  }

  double z() const { return z_; }
  double value() const { return F_ + mu_ * std::log(std::max(z_, 1e-300)); }

 private:
  double pair_sum(double lam) const { return std::exp((lam - F_) / mu_) + std::exp((-lam - F_) / mu_); }
  double F_;
  double mu_;
  double z_ = 0.0;
};

/// Smoothed operator norm of one Hermitian matrix: value, exact norm and the
/// gradient matrix (d s / d m).
inline SmoothedValue smoothed_op_norm(const CMatrix& m, double mu, bool want_grad, CMatrix* grad_matrix) {
  SmoothedValue out;
  if (!want_grad) {
    const Vec ev = hermitian_eigenvalues(m);
    const double F = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    double z = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) z += std::exp((ev(i) - F) / mu) + std::exp((-ev(i) - F) / mu);
    out.exact = F;
    out.smooth = F + mu * std::log(z);
    return out;
  }
  const EigResult e = hermitian_eig(m);
  const double F = std::max(std::abs(e.values(0)), std::abs(e.values(e.values.size() - 1)));
  double z = 0.0;
  Vec om(e.values.size());
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    const double ep = std::exp((e.values(i) - F) / mu);
    const double em = std::exp((-e.values(i) - F) / mu);
    z += ep + em;
    om(i) = ep - em;
  }
  out.exact = F;
  out.smooth = F + mu * std::log(z);
  if (grad_matrix) *grad_matrix = e.vectors * (om / z).cast<cplx>().asDiagonal() * e.vectors.adjoint();
  return out;
}

}  // namespace qgh
