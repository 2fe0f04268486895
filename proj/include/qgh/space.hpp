#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qgh/numerics.hpp"

namespace qgh {

/// Real span of Hermitian matrices containing the identity. Elements are
/// coefficient vectors in a basis orthonormal for <a, b> = Re tr(ab).
class HermitianSpace {
 public:
  struct Entry {
    int row;
    int col;
    cplx value;
  };

  HermitianSpace() = default;

  HermitianSpace(int d, const std::vector<CMatrix>& basis, std::vector<std::string> labels,
                 double tol = 1e-10)
      : d_(d), labels_(std::move(labels)) {
    if (d < 1) throw DimensionError("HermitianSpace: dimension must be positive");
    if (basis.empty()) throw DimensionError("HermitianSpace: empty basis");
    if (basis.size() != labels_.size()) throw DimensionError("HermitianSpace: label count mismatch");
    for (const auto& b : basis) {
      if (b.rows() != d || b.cols() != d) throw DimensionError("HermitianSpace: basis matrix size");
      if (!is_hermitian(b, tol)) throw DomainError("HermitianSpace: basis matrix not Hermitian");
      std::vector<Entry> sparse;
      for (int c = 0; c < d; ++c)
        for (int r = 0; r < d; ++r)
          if (std::abs(b(r, c)) > 1e-15) sparse.push_back({r, c, b(r, c)});
      basis_.push_back(std::move(sparse));
    }
    for (size_t j = 0; j < basis.size(); ++j) {
      const Vec g = coefficients(basis[j]);
      for (size_t i = 0; i < basis.size(); ++i) {
        const double want = (i == j) ? 1.0 : 0.0;
        if (std::abs(g(static_cast<Eigen::Index>(i)) - want) > 1e-8)
          throw DomainError("HermitianSpace: basis not orthonormal at (" + labels_[i] + ", " +
                            labels_[j] + ")");
      }
    }
    for (size_t i = 0; i < labels_.size(); ++i) {
      if (!index_.emplace(labels_[i], static_cast<int>(i)).second)
        throw DomainError("HermitianSpace: duplicate label " + labels_[i]);
    }
    const CMatrix id = CMatrix::Identity(d, d);
    unit_ = coefficients(id);
    if (residual(id) > 1e-8) throw DomainError("HermitianSpace: identity not in span");
    full_ = (size() == d * d);
  }

  /// All d x d Hermitian matrices: diagonal units, then real and imaginary
  /// off-diagonal pairs.
  static HermitianSpace full(int d) {
    std::vector<CMatrix> basis;
    std::vector<std::string> labels;
    for (int i = 0; i < d; ++i) {
      CMatrix m = CMatrix::Zero(d, d);
      m(i, i) = 1.0;
      basis.push_back(m);
      labels.push_back("d:" + std::to_string(i));
    }
    const double s = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        CMatrix re = CMatrix::Zero(d, d);
        re(i, j) = re(j, i) = s;
        CMatrix im = CMatrix::Zero(d, d);
        im(i, j) = cplx(0.0, s);
        im(j, i) = cplx(0.0, -s);
        basis.push_back(re);
        basis.push_back(im);
        labels.push_back("re:" + std::to_string(i) + "," + std::to_string(j));
        labels.push_back("im:" + std::to_string(i) + "," + std::to_string(j));
      }
    return HermitianSpace(d, basis, std::move(labels));
  }

  /// The scalars R e inside M_d.
  static HermitianSpace scalars(int d, const std::string& label = "e") {
    return HermitianSpace(d, {CMatrix::Identity(d, d) / std::sqrt(static_cast<double>(d))}, {label});
  }

  /// Diagonal matrices, i.e. functions on d points.
  static HermitianSpace diagonal(int d) {
    std::vector<CMatrix> basis;
    std::vector<std::string> labels;
    for (int i = 0; i < d; ++i) {
      CMatrix m = CMatrix::Zero(d, d);
      m(i, i) = 1.0;
      basis.push_back(m);
      labels.push_back("delta:" + std::to_string(i));
    }
    return HermitianSpace(d, basis, std::move(labels));
  }

  int matrix_dim() const { return d_; }
  int size() const { return static_cast<int>(basis_.size()); }
  bool is_full() const { return full_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(int i) const { return labels_.at(static_cast<size_t>(i)); }
  int find(const std::string& label) const {
    auto it = index_.find(label);
    return it == index_.end() ? -1 : it->second;
  }
  const std::vector<Entry>& entries(int i) const { return basis_.at(static_cast<size_t>(i)); }
  /// Coefficients of the order unit e.
  const Vec& unit() const { return unit_; }

  CMatrix basis_matrix(int i) const {
    CMatrix m = CMatrix::Zero(d_, d_);
    for (const auto& e : entries(i)) m(e.row, e.col) = e.value;
    return m;
  }

  CMatrix to_matrix(const Vec& c) const {
    if (c.size() != size()) throw DimensionError("HermitianSpace::to_matrix: coefficient length");
    CMatrix m = CMatrix::Zero(d_, d_);
    for (int i = 0; i < size(); ++i) {
      const double ci = c(i);
      if (ci == 0.0) continue;
      for (const auto& e : basis_[static_cast<size_t>(i)]) m(e.row, e.col) += ci * e.value;
    }
    return m;
  }

  /// Orthogonal projection coefficients, Re tr(B_i m).
  Vec coefficients(const CMatrix& m) const {
    if (m.rows() != d_ || m.cols() != d_) throw DimensionError("HermitianSpace::coefficients: size");
    Vec c(size());
    for (int i = 0; i < size(); ++i) {
      double s = 0.0;
      for (const auto& e : basis_[static_cast<size_t>(i)]) s += (e.value * m(e.col, e.row)).real();
      c(i) = s;
    }
    return c;
  }

  /// Frobenius distance from m to the span.
  double residual(const CMatrix& m) const { return (m - to_matrix(coefficients(m))).norm(); }

  /// Coefficients of m, rejecting matrices that are not in the span.
  Vec element(const CMatrix& m, double tol = 1e-8) const {
    if (!is_hermitian(m, tol)) throw DomainError("HermitianSpace::element: matrix not Hermitian");
    const double res = residual(m);
    if (res > tol * (1.0 + m.norm()))
      throw DomainError("HermitianSpace::element: matrix outside the span (residual " +
                        std::to_string(res) + ")");
    return coefficients(m);
  }

  /// Remove the component along e.
  Vec traceless(const Vec& c) const {
    const double nu = unit_.squaredNorm();
    return c - (c.dot(unit_) / nu) * unit_;
  }

 private:
  int d_ = 0;
  std::vector<std::vector<Entry>> basis_;
  std::vector<std::string> labels_;
  std::map<std::string, int> index_;
  Vec unit_;
  bool full_ = false;
};

/// State given by a density matrix, mu(a) = tr(rho a).
class StateFunctional {
 public:
  StateFunctional() = default;
  StateFunctional(CMatrix density, std::string label, double tol = 1e-9)
      : rho_(std::move(density)), label_(std::move(label)) {
    if (!is_hermitian(rho_, 1e-10)) throw DomainError("StateFunctional: density not Hermitian");
    const double tr = rho_.trace().real();
    if (std::abs(tr - 1.0) > tol) throw DomainError("StateFunctional: trace differs from 1");
    if (hermitian_eigenvalues(rho_)(0) < -1e-10)
      throw DomainError("StateFunctional: density not positive semidefinite");
  }

  static StateFunctional pure(const Eigen::VectorXcd& v, std::string label) {
    const Eigen::VectorXcd u = v / v.norm();
    return StateFunctional(u * u.adjoint(), std::move(label));
  }
  static StateFunctional dirac(int d, int i) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d);
    v(i) = 1.0;
    return pure(v, "delta" + std::to_string(i));
  }

  const CMatrix& density() const { return rho_; }
  const std::string& label() const { return label_; }
  double operator()(const CMatrix& a) const { return (rho_ * a).trace().real(); }

 private:
  CMatrix rho_;
  std::string label_;
};

}  // namespace qgh
