#pragma once

#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "qgh/numerics.hpp"
#include "qgh/space.hpp"

namespace qgh {

/// Finite sample of a compact group: quadrature weights, lengths and the
/// inverse permutation. coords holds family-specific parameters (integer
/// coordinates for Z_m^n, Euler angles for SO(3)).
struct SampledGroup {
  std::string descriptor;
  std::vector<std::string> labels;
  std::vector<double> weights;
  std::vector<double> lengths;
  std::vector<std::array<double, 3>> coords;
  int identity = 0;
  std::vector<int> inverse;
  bool is_exact = false;
  std::vector<int> product;  // row-major size x size, only when is_exact

  int size() const { return static_cast<int>(labels.size()); }

  double mean_length() const {
    double s = 0.0;
    for (int x = 0; x < size(); ++x) s += weights[static_cast<size_t>(x)] * lengths[static_cast<size_t>(x)];
    return s;
  }

  int multiply(int x, int y) const {
    if (!is_exact) throw DomainError("SampledGroup: product table only exists for exact groups");
    return product[static_cast<size_t>(x * size() + y)];
  }

  void validate(double tol = 1e-9) const {
    const size_t n = labels.size();
    if (n == 0) throw DomainError("SampledGroup: empty");
    if (weights.size() != n || lengths.size() != n || inverse.size() != n || coords.size() != n)
      throw DimensionError("SampledGroup: field lengths disagree");
    if (identity < 0 || static_cast<size_t>(identity) >= n) throw DomainError("SampledGroup: identity index");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw DomainError("SampledGroup: negative weight");
      total += w;
    }
    if (std::abs(total - 1.0) > tol) throw DomainError("SampledGroup: weights do not sum to 1");
    for (size_t x = 0; x < n; ++x) {
      const int inv = inverse[x];
      if (inv < 0 || static_cast<size_t>(inv) >= n || inverse[static_cast<size_t>(inv)] != static_cast<int>(x))
        throw DomainError("SampledGroup: inverse is not an involution");
      if (std::abs(lengths[x] - lengths[static_cast<size_t>(inv)]) > tol)
        throw DomainError("SampledGroup: length not symmetric under inversion");
      if (static_cast<int>(x) == identity) {
        if (lengths[x] != 0.0) throw DomainError("SampledGroup: nonzero length at identity");
      } else if (!(lengths[x] > 0.0)) {
        throw DomainError("SampledGroup: zero length off the identity at " + labels[x]);
      }
    }
    if (is_exact) {
      if (product.size() != n * n) throw DomainError("SampledGroup: product table size");
      for (size_t x = 0; x < n; ++x) {
        if (product[x * n + static_cast<size_t>(identity)] != static_cast<int>(x))
          throw DomainError("SampledGroup: identity is not neutral");
        if (product[x * n + static_cast<size_t>(inverse[x])] != identity)
          throw DomainError("SampledGroup: inverse table inconsistent with product");
        for (size_t y = 0; y < n; ++y) {
          const int z = product[x * n + y];
          if (z < 0 || static_cast<size_t>(z) >= n) throw DomainError("SampledGroup: product does not close");
        }
      }
    }
  }
};

/// Z_m^n with uniform weights and the flat word length sum_i arcdist(2 pi x_i / m).
/// Element index x = x_0 + m x_1 + ... ; coords carry x_0, x_1 (n <= 3).
inline SampledGroup torus_grid_group(int m, int n) {
  if (m < 2 || n < 1 || n > 3) throw DomainError("torus_grid_group: need m >= 2 and 1 <= n <= 3");
  int size = 1;
  for (int i = 0; i < n; ++i) size *= m;
  SampledGroup g;
  g.descriptor = "Z" + std::to_string(m) + "^" + std::to_string(n);
  g.is_exact = true;
  g.identity = 0;
  auto digits = [&](int x) {
    std::array<int, 3> d{0, 0, 0};
    for (int i = 0; i < n; ++i) {
      d[static_cast<size_t>(i)] = x % m;
      x /= m;
    }
    return d;
  };
  auto encode = [&](const std::array<int, 3>& d) {
    int x = 0;
    for (int i = n - 1; i >= 0; --i) x = x * m + ((d[static_cast<size_t>(i)] % m) + m) % m;
    return x;
  };
  for (int x = 0; x < size; ++x) {
    const auto d = digits(x);
    std::string label = "(";
    double len = 0.0;
    std::array<int, 3> neg{0, 0, 0};
    for (int i = 0; i < n; ++i) {
      const int xi = d[static_cast<size_t>(i)];
      label += (i ? "," : "") + std::to_string(xi);
      len += arcdist(2.0 * M_PI * xi / m);
      neg[static_cast<size_t>(i)] = -xi;
    }
    label += ")";
    g.labels.push_back(label);
    g.weights.push_back(1.0 / size);
    g.lengths.push_back(len);
    g.coords.push_back({static_cast<double>(d[0]), static_cast<double>(d[1]), static_cast<double>(d[2])});
    g.inverse.push_back(encode(neg));
  }
  g.product.resize(static_cast<size_t>(size) * static_cast<size_t>(size));
  for (int x = 0; x < size; ++x)
    for (int y = 0; y < size; ++y) {
      auto a = digits(x), b = digits(y);
      for (int i = 0; i < 3; ++i) a[static_cast<size_t>(i)] += b[static_cast<size_t>(i)];
      g.product[static_cast<size_t>(x * size + y)] = encode(a);
    }
  g.validate();
  return g;
}

inline SampledGroup cyclic_group(int m) {
  SampledGroup g = torus_grid_group(m, 1);
  g.descriptor = "Z" + std::to_string(m);
  for (int k = 0; k < m; ++k) g.labels[static_cast<size_t>(k)] = std::to_string(k);
  return g;
}

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: need at least one node");
  std::vector<double> x(static_cast<size_t>(n)), w(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    x[static_cast<size_t>(n - 1 - i)] = z;
    w[static_cast<size_t>(n - 1 - i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

/// Rotation angle of R_z(a) R_y(b) R_z(c).
inline double so3_rotation_angle(double a, double b, double c) {
  const double v = std::abs(std::cos(0.5 * b) * std::cos(0.5 * (a + c)));
  return 2.0 * std::acos(std::min(1.0, v));
}

inline double wrap_angle(double a) {
  double r = std::fmod(a, 2.0 * M_PI);
  if (r < 0) r += 2.0 * M_PI;
  return r;
}

/// Euler-angle product grid on SO(3): alpha at (i + 1/4) 2 pi / na, beta at
/// Gauss-Legendre nodes in cos(beta), gamma at k 2 pi / ng. The sample is the
/// grid together with the inverses of its points (each half weight) plus the
/// identity at weight 0. The quarter step makes the +-N aliases of the alpha
/// and gamma sums cancel; the inverse copies make the sample closed under
/// inversion. Length is the rotation angle.
inline SampledGroup so3_euler_grid(int na, int nb, int ng) {
  if (na < 2 || nb < 1 || ng < 2) throw DomainError("so3_euler_grid: grid too small");
  const auto [nodes, gw] = gauss_legendre(nb);
  SampledGroup g;
  g.descriptor = "SO3-euler-" + std::to_string(na) + "x" + std::to_string(nb) + "x" + std::to_string(ng);
  g.is_exact = false;
  g.identity = 0;
  g.labels.push_back("e");
  g.weights.push_back(0.0);
  g.lengths.push_back(0.0);
  g.coords.push_back({0.0, 0.0, 0.0});
  g.inverse.push_back(0);
  const int half = na * nb * ng;
  std::vector<std::array<double, 3>> fwd;
  std::vector<double> fw;
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j)
      for (int k = 0; k < ng; ++k) {
        const double a = 2.0 * M_PI * (i + 0.25) / na;
        const double b = std::acos(nodes[static_cast<size_t>(j)]);
        const double c = 2.0 * M_PI * k / ng;
        fwd.push_back({a, b, c});
        fw.push_back(0.5 * gw[static_cast<size_t>(j)] / (2.0 * na * ng));
      }
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < half; ++t) {
      const auto& p = fwd[static_cast<size_t>(t)];
      std::array<double, 3> e = p;
      // R(a,b,c)^{-1} = R(pi - c, b, -a - pi)
      if (s == 1) e = {wrap_angle(M_PI - p[2]), p[1], wrap_angle(-p[0] - M_PI)};
      g.labels.push_back((s ? "inv" : "g") + std::to_string(t));
      g.weights.push_back(fw[static_cast<size_t>(t)]);
      g.lengths.push_back(so3_rotation_angle(p[0], p[1], p[2]));
      g.coords.push_back(e);
      g.inverse.push_back(s == 0 ? 1 + half + t : 1 + t);
    }
  g.validate();
  return g;
}

/// Character chi_gamma on the sampled elements.
struct IrrepCharacter {
  std::string label;
  int dimension = 1;
  std::vector<cplx> values;

  void validate(const SampledGroup& g, double tol = 1e-9) const {
    if (static_cast<int>(values.size()) != g.size()) throw DimensionError("IrrepCharacter: length");
    if (std::abs(values[static_cast<size_t>(g.identity)] - cplx(dimension, 0.0)) > tol)
      throw DomainError("IrrepCharacter: chi(e) differs from the dimension");
    for (const auto& v : values)
      if (std::abs(v) > dimension + tol) throw DomainError("IrrepCharacter: |chi| exceeds dimension");
  }
};

/// Characters of Z_m^n, chi_k(x) = exp(2 pi i k.x / m), labelled "(k0,k1)".
inline std::vector<IrrepCharacter> torus_characters(const SampledGroup& g, int m, int n) {
  int count = 1;
  for (int i = 0; i < n; ++i) count *= m;
  std::vector<IrrepCharacter> out;
  for (int k = 0; k < count; ++k) {
    std::array<int, 3> kd{0, 0, 0};
    int r = k;
    std::string label = "(";
    for (int i = 0; i < n; ++i) {
      kd[static_cast<size_t>(i)] = r % m;
      r /= m;
      label += (i ? "," : "") + std::to_string(kd[static_cast<size_t>(i)]);
    }
    label += ")";
    IrrepCharacter ch{label, 1, {}};
    for (int x = 0; x < g.size(); ++x) {
      double phase = 0.0;
      for (int i = 0; i < n; ++i) phase += kd[static_cast<size_t>(i)] * g.coords[static_cast<size_t>(x)][static_cast<size_t>(i)];
      ch.values.push_back(std::polar(1.0, 2.0 * M_PI * phase / m));
    }
    ch.validate(g);
    out.push_back(std::move(ch));
  }
  return out;
}

/// Spin-l character (integer l) through the rotation angle: 1 + 2 sum cos(k w).
inline IrrepCharacter so3_character(const SampledGroup& g, int l) {
  if (l < 0) throw DomainError("so3_character: negative spin");
  IrrepCharacter ch{"l=" + std::to_string(l), 2 * l + 1, {}};
  for (int x = 0; x < g.size(); ++x) {
    const auto& c = g.coords[static_cast<size_t>(x)];
    const double w = so3_rotation_angle(c[0], c[1], c[2]);
    double s = 1.0;
    for (int k = 1; k <= l; ++k) s += 2.0 * std::cos(k * w);
    ch.values.emplace_back(s, 0.0);
  }
  ch.validate(g);
  return ch;
}

inline std::vector<IrrepCharacter> so3_characters(const SampledGroup& g, int lmax) {
  std::vector<IrrepCharacter> out;
  for (int l = 0; l <= lmax; ++l) out.push_back(so3_character(g, l));
  return out;
}

/// Group sample plus one unitary per element. Monomial implementers
/// (permutation times phases) get an O(d^2) conjugation path.
class UnitaryAction {
 public:
  UnitaryAction() = default;
  UnitaryAction(SampledGroup group, std::vector<CMatrix> implementers, double tol = 1e-10)
      : group_(std::move(group)), u_(std::move(implementers)) {
    group_.validate();
    if (static_cast<int>(u_.size()) != group_.size()) throw DimensionError("UnitaryAction: implementer count");
    d_ = static_cast<int>(u_.front().rows());
    for (const auto& u : u_) {
      if (u.rows() != d_ || u.cols() != d_) throw DimensionError("UnitaryAction: implementer size");
      if (!is_unitary(u, 1e-9)) throw DomainError("UnitaryAction: implementer not unitary");
    }
    if (max_abs_entry(u_[static_cast<size_t>(group_.identity)] - CMatrix::Identity(d_, d_)) > tol)
      throw DomainError("UnitaryAction: implementer at identity is not the identity matrix");
    mono_.resize(u_.size());
    for (size_t x = 0; x < u_.size(); ++x) mono_[x] = detect_monomial(u_[x]);
    if (group_.is_exact) check_homomorphism();
    // alpha_{x^-1} = alpha_x^{-1} makes ||alpha_x(a) - a|| symmetric under
    // inversion, so seminorm sweeps need one element per inverse pair.
    bool symmetric = true;
    for (int x = 0; x < group_.size() && symmetric; ++x) {
      const CMatrix& ui = u_[static_cast<size_t>(group_.inverse[static_cast<size_t>(x)])];
      const CMatrix prod = ui * u_[static_cast<size_t>(x)];
      const cplx c = prod.trace() / static_cast<double>(d_);
      symmetric = std::abs(std::abs(c) - 1.0) <= 1e-8 && max_abs_entry(prod - c * CMatrix::Identity(d_, d_)) <= 1e-8;
    }
    for (int x = 0; x < group_.size(); ++x) {
      if (x == group_.identity) continue;
      if (!symmetric || x <= group_.inverse[static_cast<size_t>(x)]) reps_.push_back(x);
    }
  }

  const SampledGroup& group() const { return group_; }
  int dim() const { return d_; }
  const CMatrix& implementer(int x) const { return u_.at(static_cast<size_t>(x)); }
  /// Non-identity elements that suffice for sup_x ||alpha_x(a) - a|| / l(x).
  const std::vector<int>& seminorm_elements() const { return reps_; }

  /// alpha_x(a) = U_x a U_x^*.
  CMatrix apply(int x, const CMatrix& a) const {
    CMatrix out(d_, d_), tmp;
    apply_into(x, a, out, tmp);
    return out;
  }

  /// Allocation-free variant for hot loops; tmp is scratch space.
  void apply_into(int x, const CMatrix& a, CMatrix& out, CMatrix& tmp) const {
    if (a.rows() != d_ || a.cols() != d_) throw DimensionError("apply: dimension mismatch");
    const Monomial& m = mono_[static_cast<size_t>(x)];
    out.resize(d_, d_);
    if (m.valid) {
      for (int j = 0; j < d_; ++j) {
        const int pj = m.perm[static_cast<size_t>(j)];
        const cplx cj = std::conj(m.phase[static_cast<size_t>(j)]);
        for (int i = 0; i < d_; ++i)
          out(i, j) = m.phase[static_cast<size_t>(i)] * a(m.perm[static_cast<size_t>(i)], pj) * cj;
      }
      return;
    }
    const CMatrix& u = u_[static_cast<size_t>(x)];
    tmp.resize(d_, d_);
    if (d_ > 16) {
      tmp.noalias() = u * a;
      out.noalias() = tmp * u.adjoint();
      return;
    }
    // Plain loops: at these sizes the general product kernels cost more than
    // the arithmetic.
    const int n = d_;
    const cplx* U = u.data();
    const cplx* A = a.data();
    cplx* T = tmp.data();
    cplx* O = out.data();
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        double re = 0.0, im = 0.0;
        for (int k = 0; k < n; ++k) {
          const cplx p = U[i + k * n], q = A[k + j * n];
          re += p.real() * q.real() - p.imag() * q.imag();
          im += p.real() * q.imag() + p.imag() * q.real();
        }
        T[i + j * n] = cplx(re, im);
      }
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        double re = 0.0, im = 0.0;
        for (int k = 0; k < n; ++k) {
          const cplx p = T[i + k * n], q = U[j + k * n];  // tmp(i,k) conj(u(j,k))
          re += p.real() * q.real() + p.imag() * q.imag();
          im += p.imag() * q.real() - p.real() * q.imag();
        }
        O[i + j * n] = cplx(re, im);
      }
  }

  /// Adjoint of alpha_x for <a, b> = Re tr(ab): U^* w U.
  CMatrix apply_adjoint(int x, const CMatrix& w) const { return apply(group_.inverse[static_cast<size_t>(x)], w); }

 private:
  struct Monomial {
    bool valid = false;
    std::vector<int> perm;
    std::vector<cplx> phase;
  };

  static Monomial detect_monomial(const CMatrix& u) {
    Monomial m;
    const int d = static_cast<int>(u.rows());
    m.perm.assign(static_cast<size_t>(d), -1);
    m.phase.assign(static_cast<size_t>(d), 0.0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        if (std::abs(u(i, j)) < 1e-14) continue;
        if (m.perm[static_cast<size_t>(i)] >= 0) return Monomial{};
        m.perm[static_cast<size_t>(i)] = j;
        m.phase[static_cast<size_t>(i)] = u(i, j);
      }
    for (int p : m.perm)
      if (p < 0) return Monomial{};
    m.valid = true;
    return m;
  }

  // U_x U_y = c U_{xy} with |c| = 1, checked on at most ~4096 pairs.
  void check_homomorphism() const {
    const int n = group_.size();
    const long long pairs = static_cast<long long>(n) * n;
    const long long stride = std::max(1LL, pairs / 4096);
    for (long long k = 0; k < pairs; k += stride) {
      const int x = static_cast<int>(k / n), y = static_cast<int>(k % n);
      const CMatrix prod = u_[static_cast<size_t>(x)] * u_[static_cast<size_t>(y)];
      const CMatrix& target = u_[static_cast<size_t>(group_.multiply(x, y))];
      const cplx c = (target.adjoint() * prod).trace() / static_cast<double>(d_);
      if (std::abs(std::abs(c) - 1.0) > 1e-8 || max_abs_entry(prod - c * target) > 1e-8)
        throw DomainError("UnitaryAction: implementers are not a projective representation");
    }
  }

  SampledGroup group_;
  std::vector<CMatrix> u_;
  std::vector<Monomial> mono_;
  std::vector<int> reps_;
  int d_ = 0;
};

inline CMatrix apply(const UnitaryAction& action, int x, const CMatrix& a) { return action.apply(x, a); }

/// max over x != e of ||alpha_x(a) - a|| / l(x). Elements whose Frobenius
/// bound cannot beat the running maximum skip the eigensolve.
inline double lip_seminorm(const UnitaryAction& action, const CMatrix& a) {
  const SampledGroup& g = action.group();
  if (g.size() < 2) throw DomainError("lip_seminorm: group has only the identity");
  double best = 0.0;
  CMatrix m, tmp;
  for (int x : action.seminorm_elements()) {
    const double l = g.lengths[static_cast<size_t>(x)];
    action.apply_into(x, a, m, tmp);
    m -= a;
    const double fro = m.norm();
    if (fro <= best * l) continue;
    best = std::max(best, op_norm(m) / l);
  }
  return best;
}

/// phi_J(x) = sum_gamma dim(gamma) conj(chi_gamma(x)); real for a self-conjugate J.
inline std::vector<double> isotypic_weight(const SampledGroup& g, const std::vector<IrrepCharacter>& chars,
                                           double tol = 1e-9) {
  for (const auto& c : chars) {
    c.validate(g);
    bool found = false;
    for (const auto& o : chars) {
      bool match = o.dimension == c.dimension;
      for (size_t x = 0; match && x < c.values.size(); ++x)
        match = std::abs(o.values[x] - std::conj(c.values[x])) <= tol;
      if (match) {
        found = true;
        break;
      }
    }
    if (!found) throw DomainError("isotypic_project: label set not closed under conjugation (" + c.label + ")");
  }
  std::vector<double> phi(static_cast<size_t>(g.size()), 0.0);
  for (int x = 0; x < g.size(); ++x) {
    cplx s = 0.0;
    for (const auto& c : chars) s += static_cast<double>(c.dimension) * std::conj(c.values[static_cast<size_t>(x)]);
    phi[static_cast<size_t>(x)] = s.real();
  }
  return phi;
}

/// L1 norm of phi_J under the quadrature weights.
inline double isotypic_l1(const SampledGroup& g, const std::vector<IrrepCharacter>& chars) {
  const auto phi = isotypic_weight(g, chars);
  double s = 0.0;
  for (int x = 0; x < g.size(); ++x) s += g.weights[static_cast<size_t>(x)] * std::abs(phi[static_cast<size_t>(x)]);
  return s;
}

inline CMatrix isotypic_project(const UnitaryAction& action, const std::vector<IrrepCharacter>& chars,
                                const CMatrix& a) {
  const SampledGroup& g = action.group();
  const auto phi = isotypic_weight(g, chars);
  CMatrix out = CMatrix::Zero(a.rows(), a.cols());
  for (int x = 0; x < g.size(); ++x) {
    const double c = g.weights[static_cast<size_t>(x)] * phi[static_cast<size_t>(x)];
    if (c == 0.0) continue;
    out += c * action.apply(x, a);
  }
  return (out + out.adjoint()) * 0.5;
}

struct MultiplicityResult {
  int value = 0;
  double raw = 0.0;
  double deviation = 0.0;
};

/// Trace of alpha_x on the (complexified) space: |tr U_x|^2 on full matrix
/// spaces, sum_i <B_i, alpha_x(B_i)> otherwise.
inline std::vector<double> action_traces(const UnitaryAction& action, const HermitianSpace* space) {
  const SampledGroup& g = action.group();
  std::vector<double> tr(static_cast<size_t>(g.size()), 0.0);
  const bool full = space == nullptr || space->is_full();
  if (space && space->matrix_dim() != action.dim()) throw DimensionError("multiplicity: space/action dimension");
  for (int x = 0; x < g.size(); ++x) {
    if (full) {
      tr[static_cast<size_t>(x)] = std::norm(action.implementer(x).trace());
      continue;
    }
    double s = 0.0;
    for (int i = 0; i < space->size(); ++i) {
      const CMatrix m = action.apply(x, space->basis_matrix(i));
      for (const auto& e : space->entries(i)) s += (e.value * m(e.col, e.row)).real();
    }
    tr[static_cast<size_t>(x)] = s;
  }
  return tr;
}

inline MultiplicityResult multiplicity_raw(const UnitaryAction& action, const IrrepCharacter& chi,
                                           const HermitianSpace* space = nullptr) {
  const SampledGroup& g = action.group();
  chi.validate(g);
  const auto tr = action_traces(action, space);
  cplx s = 0.0;
  for (int x = 0; x < g.size(); ++x)
    s += g.weights[static_cast<size_t>(x)] * std::conj(chi.values[static_cast<size_t>(x)]) * tr[static_cast<size_t>(x)];
  MultiplicityResult r;
  r.raw = s.real();
  r.value = static_cast<int>(std::lround(r.raw));
  r.deviation = std::max(std::abs(r.raw - r.value), std::abs(s.imag()));
  return r;
}

/// Integer multiplicity of chi; throws QuadratureError beyond integer_tol.
inline int multiplicity(const UnitaryAction& action, const IrrepCharacter& chi,
                        const HermitianSpace* space = nullptr, double integer_tol = 0.05) {
  const MultiplicityResult r = multiplicity_raw(action, chi, space);
  if (r.deviation > integer_tol || r.value < 0)
    throw QuadratureError("multiplicity of " + chi.label + ": quadrature too coarse", r.raw);
  return r.value;
}

/// Matrix of the Haar average E on the space, E_ij = sum_x w_x <B_i, alpha_x(B_j)>.
inline Eigen::MatrixXd haar_average_matrix(const UnitaryAction& action, const HermitianSpace& space) {
  const SampledGroup& g = action.group();
  const int n = space.size();
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const CMatrix b = space.basis_matrix(j);
    CMatrix avg = CMatrix::Zero(b.rows(), b.cols());
    for (int x = 0; x < g.size(); ++x) {
      const double w = g.weights[static_cast<size_t>(x)];
      if (w == 0.0) continue;
      avg += w * action.apply(x, b);
    }
    e.col(j) = space.coefficients(avg);
  }
  return e;
}

/// Dimension of the fixed subspace: eigenvalues of sym(E) within rank_tol of 1.
inline int fixed_dimension(const UnitaryAction& action, const HermitianSpace& space, double rank_tol = 1e-6) {
  const Eigen::MatrixXd e = haar_average_matrix(action, space);
  const Eigen::MatrixXd s = 0.5 * (e + e.transpose());
  const Vec ev = hermitian_eigenvalues(s.cast<cplx>());
  int count = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > 1.0 - rank_tol) ++count;
  return count;
}

inline bool ergodicity_check(const UnitaryAction& action, const HermitianSpace& space) {
  return fixed_dimension(action, space) == 1;
}

inline bool ergodicity_check(const UnitaryAction& action) {
  return ergodicity_check(action, HermitianSpace::full(action.dim()));
}

}  // namespace qgh
