#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <utility>
#include <vector>

#include "qgh/errors.hpp"

namespace qgh {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using Vec = Eigen::VectorXd;

/// Structural checks (hermiticity, unitarity, membership) vs numerical equalities.
struct Tolerances {
  double structural = 1e-10;
  double numerical = 1e-8;
};

inline double max_abs_entry(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const CMatrix& m, double tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  if (!m.allFinite()) return false;
  return max_abs_entry(m - m.adjoint()) <= tol * (1.0 + max_abs_entry(m));
}

inline bool is_unitary(const CMatrix& m, double tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  CMatrix id = CMatrix::Identity(m.rows(), m.cols());
  return max_abs_entry(m * m.adjoint() - id) <= tol;
}

/// Checked wrapper: constructing one validates the Hermitian invariant.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(CMatrix m, double tol = 1e-10) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw DimensionError("HermitianMatrix: not square");
    if (!is_hermitian(m_, tol)) throw DomainError("HermitianMatrix: input is not Hermitian");
    m_ = (m_ + m_.adjoint()) * 0.5;
  }
  static HermitianMatrix identity(int d) { return HermitianMatrix(CMatrix::Identity(d, d)); }
  static HermitianMatrix diagonal(const Vec& v) {
    return HermitianMatrix(v.cast<cplx>().asDiagonal().toDenseMatrix());
  }
  int dim() const { return static_cast<int>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  operator const CMatrix&() const { return m_; }

 private:
  CMatrix m_;
};

class UnitaryMatrix {
 public:
  UnitaryMatrix() = default;
  explicit UnitaryMatrix(CMatrix m, double tol = 1e-10) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw DimensionError("UnitaryMatrix: not square");
    if (!is_unitary(m_, tol)) throw DomainError("UnitaryMatrix: U U^* differs from identity");
  }
  static UnitaryMatrix identity(int d) { return UnitaryMatrix(CMatrix::Identity(d, d)); }
  int dim() const { return static_cast<int>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  operator const CMatrix&() const { return m_; }

 private:
  CMatrix m_;
};

struct EigResult {
  Vec values;       // ascending
  CMatrix vectors;  // columns, matching values
};

namespace detail {

constexpr int kJacobiMaxSweeps = 80;

inline double off_diagonal_sq(const CMatrix& a) {
  double s = 0.0;
  const Eigen::Index n = a.rows();
  for (Eigen::Index q = 1; q < n; ++q)
    for (Eigen::Index p = 0; p < q; ++p) s += std::norm(a(p, q));
  return s;
}

// Cyclic complex Jacobi, row-by-row sweep order. On return a is diagonal (up to
// the tolerance) and, when v is given, a_in = v diag(a) v^*.
inline void jacobi_in_place(CMatrix& a, CMatrix* v) {
  const Eigen::Index n = a.rows();
  if (v) *v = CMatrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) a(i, i) = a(i, i).real();
  if (n < 2) return;
  const double total = a.squaredNorm();
  if (total == 0.0) return;
  const double stop = total * 1e-26;
  double off = off_diagonal_sq(a);
  int sweep = 0;
  while (off > stop) {
    if (++sweep > kJacobiMaxSweeps)
      throw NumericalError("hermitian_eig: Jacobi sweeps did not converge", std::sqrt(off / total));
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const cplx z = a(p, q);
        const double b = std::sqrt(z.real() * z.real() + z.imag() * z.imag());
        if (b == 0.0) continue;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        // Skip entries that no longer move the diagonal at double precision.
        if (sweep > 3 && std::abs(app) + 1e3 * b == std::abs(app) &&
            std::abs(aqq) + 1e3 * b == std::abs(aqq)) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const double er = z.real() / b, ei = z.imag() / b;  // e = z / |z|
        const double tau = (aqq - app) / (2.0 * b);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // A <- G^* A G with G = [[c, s], [-s conj(e), c conj(e)]] on (p, q).
        // Off the (p, q) block only columns p, q change; rows follow by symmetry.
        for (Eigen::Index r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const cplx arp = a(r, p), arq = a(r, q);
          // arq * conj(e)
          const double xr = arq.real() * er + arq.imag() * ei;
          const double xi = arq.imag() * er - arq.real() * ei;
          const cplx np(c * arp.real() - s * xr, c * arp.imag() - s * xi);
          const cplx nq(s * arp.real() + c * xr, s * arp.imag() + c * xi);
          a(r, p) = np;
          a(r, q) = nq;
          a(p, r) = std::conj(np);
          a(q, r) = std::conj(nq);
        }
        a(p, q) = a(q, p) = 0.0;
        a(p, p) = app - t * b;
        a(q, q) = aqq + t * b;
        if (v) {
          CMatrix& vv = *v;
          for (Eigen::Index r = 0; r < n; ++r) {
            const cplx vrp = vv(r, p), vrq = vv(r, q);
            const double xr = vrq.real() * er + vrq.imag() * ei;
            const double xi = vrq.imag() * er - vrq.real() * ei;
            vv(r, p) = cplx(c * vrp.real() - s * xr, c * vrp.imag() - s * xi);
            vv(r, q) = cplx(s * vrp.real() + c * xr, s * vrp.imag() + c * xi);
          }
        }
      }
    }
    off = off_diagonal_sq(a);
  }
}

}  // namespace detail

/// Full eigendecomposition, eigenvalues ascending.
inline EigResult hermitian_eig(const CMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("hermitian_eig: matrix not square");
  if (!a.allFinite()) throw DomainError("hermitian_eig: non-finite entry");
  CMatrix w = a;
  CMatrix v;
  detail::jacobi_in_place(w, &v);
  const Eigen::Index n = a.rows();
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return w(x, x).real() < w(y, y).real(); });
  EigResult out{Vec(n), CMatrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = w(order[static_cast<size_t>(k)], order[static_cast<size_t>(k)]).real();
    out.vectors.col(k) = v.col(order[static_cast<size_t>(k)]);
  }
  return out;
}

/// Eigenvalues only (ascending); skips the vector accumulation.
inline Vec hermitian_eigenvalues(const CMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("hermitian_eigenvalues: matrix not square");
  const Eigen::Index n = a.rows();
  Vec out(n);
  if (n == 1) {
    out(0) = a(0, 0).real();
    return out;
  }
  if (n == 2) {
    const double m = 0.5 * (a(0, 0).real() + a(1, 1).real());
    const double h = 0.5 * (a(0, 0).real() - a(1, 1).real());
    const double r = std::sqrt(h * h + std::norm(a(0, 1)));
    out << m - r, m + r;
    return out;
  }
  CMatrix w = a;
  detail::jacobi_in_place(w, nullptr);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = w(i, i).real();
  std::sort(out.data(), out.data() + n);
  return out;
}

inline double op_norm(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  const Vec ev = hermitian_eigenvalues(a);
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

/// min over real lambda of ||a - lambda I||.
inline double quotient_norm(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  const Vec ev = hermitian_eigenvalues(a);
  return 0.5 * (ev(ev.size() - 1) - ev(0));
}

/// exp(i t h) through the eigendecomposition of h.
inline UnitaryMatrix matrix_exp_skew(const CMatrix& h, double t) {
  const EigResult e = hermitian_eig(h);
  Eigen::VectorXcd phases(e.values.size());
  for (Eigen::Index k = 0; k < e.values.size(); ++k) phases(k) = std::polar(1.0, t * e.values(k));
  CMatrix u = e.vectors * phases.asDiagonal() * e.vectors.adjoint();
  return UnitaryMatrix(std::move(u), 1e-9);
}

/// Entries i.i.d. complex Gaussian, then symmetrized.
template <class Rng>
CMatrix random_hermitian(int d, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  CMatrix m(d, d);
  for (int i = 0; i < d; ++i) {
    m(i, i) = g(rng);
    for (int j = i + 1; j < d; ++j) {
      m(i, j) = cplx(g(rng), g(rng)) / std::sqrt(2.0);
      m(j, i) = std::conj(m(i, j));
    }
  }
  return m;
}

template <class Rng>
Vec random_gaussian(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

/// Shortest distance to 0 on the circle, for an angle in radians.
inline double arcdist(double angle) {
  const double two_pi = 2.0 * M_PI;
  double r = std::fmod(std::abs(angle), two_pi);
  return std::min(r, two_pi - r);
}

}  // namespace qgh
