#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "qgh/cqms.hpp"
#include "qgh/group_action.hpp"
#include "qgh/space.hpp"

namespace qgh {

/// Euler product grid density for SO(3) samples.
struct SphereGrid {
  int na = 12;
  int nb = 12;
  int ng = 12;

  std::string str() const { return std::to_string(na) + "x" + std::to_string(nb) + "x" + std::to_string(ng); }

  static SphereGrid parse(const std::string& s) {
    SphereGrid g;
    char x1 = 0, x2 = 0;
    std::istringstream in(s);
    if (!(in >> g.na >> x1 >> g.nb >> x2 >> g.ng) || x1 != 'x' || x2 != 'x' || !in.eof())
      throw ParseError("grid must look like 12x12x12, got '" + s + "'");
    if (g.na < 2 || g.nb < 1 || g.ng < 2) throw ParseError("grid too small: " + s);
    return g;
  }
  bool operator==(const SphereGrid& o) const { return na == o.na && nb == o.nb && ng == o.ng; }
};

/// One bundled example: "cycle:m", "torus:q:p", "sphere:two_j", "scalar:q".
struct ExampleDescriptor {
  std::string name;
  std::string family;
  int m = 0;
  int q = 0;
  int p = 0;
  int two_j = 0;
  SphereGrid grid;
  std::uint64_t seed = 1;

  void validate() const {
    if (family == "cycle") {
      if (m < 3 || m > 64) throw DomainError("cycle: need 3 <= m <= 64");
    } else if (family == "torus") {
      if (q < 2 || q > 12) throw DomainError("torus: need 2 <= q <= 12");
      if (p < 1 || p >= q) throw DomainError("torus: need 1 <= p < q");
    } else if (family == "sphere") {
      if (two_j < 1 || two_j > 8) throw DomainError("sphere: need 1 <= two_j <= 8");
    } else if (family == "scalar") {
      if (q < 2 || q > 12) throw DomainError("scalar: need 2 <= q <= 12");
    } else {
      throw DomainError("unknown example family '" + family + "'");
    }
  }

  std::string spec() const {
    if (family == "cycle") return "cycle:" + std::to_string(m);
    if (family == "torus") return "torus:" + std::to_string(q) + ":" + std::to_string(p);
    if (family == "sphere") return "sphere:" + std::to_string(two_j);
    return "scalar:" + std::to_string(q);
  }

  static ExampleDescriptor parse(const std::string& s, const SphereGrid& grid = {}) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
      if (c == ':') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    parts.push_back(cur);
    auto num = [&](size_t i) {
      if (i >= parts.size()) throw ParseError("example '" + s + "': missing parameter");
      try {
        size_t used = 0;
        const int v = std::stoi(parts[i], &used);
        if (used != parts[i].size()) throw std::invalid_argument("trailing");
        return v;
      } catch (const std::exception&) {
        throw ParseError("example '" + s + "': parameter '" + parts[i] + "' is not an integer");
      }
    };
    ExampleDescriptor d;
    d.name = s;
    d.family = parts[0];
    d.grid = grid;
    size_t expect = 0;
    if (d.family == "cycle") {
      d.m = num(1);
      expect = 2;
    } else if (d.family == "torus") {
      d.q = num(1);
      d.p = num(2);
      expect = 3;
    } else if (d.family == "sphere") {
      d.two_j = num(1);
      expect = 2;
    } else if (d.family == "scalar") {
      d.q = num(1);
      expect = 2;
    } else {
      throw ParseError("unknown example family '" + d.family + "' in '" + s + "'");
    }
    if (parts.size() != expect) throw ParseError("example '" + s + "': wrong number of parameters");
    try {
      d.validate();
    } catch (const DomainError& e) {
      throw ParseError(e.what());
    }
    return d;
  }
};

/// Diagonal m x m matrices (functions on Z_m) under translation, length =
/// arc distance 2 pi min(k, m-k) / m.
inline Cqms commutative_cycle(int m) {
  if (m < 3) throw DomainError("commutative_cycle: need m >= 3");
  SampledGroup g = cyclic_group(m);
  std::vector<CMatrix> us;
  for (int k = 0; k < m; ++k) {
    CMatrix u = CMatrix::Zero(m, m);
    for (int i = 0; i < m; ++i) u((i + k) % m, i) = 1.0;
    us.push_back(u);
  }
  return Cqms("cycle:" + std::to_string(m), HermitianSpace::diagonal(m), UnitaryAction(g, us),
              {"cycle", {{"m", m}}});
}

namespace torus_detail {

inline int mod(int a, int q) { return ((a % q) + q) % q; }

/// Centered representative in (-q/2, q/2].
inline int centered(int a, int q) {
  int r = mod(a, q);
  if (2 * r > q) r -= q;
  return r;
}

inline int inverse_mod(int p, int q) {
  for (int k = 1; k < q; ++k)
    if (mod(p * k, q) == 1) return k;
  throw DomainError("inverse_mod: not invertible");
}

/// Generators of the model: clock C, shift S with CS = e^{2 pi i p/q} SC on
/// C^q when gcd(p, q) = 1, otherwise the twisted left-regular representation
/// on l^2(Z_q^2).
struct Model {
  int q = 0, p = 0, d = 0;
  bool regular = false;

  // C^{w1} S^{w2} (w taken mod q).
  CMatrix monomial(int w1, int w2) const {
    w1 = mod(w1, q);
    w2 = mod(w2, q);
    CMatrix out = CMatrix::Zero(d, d);
    if (!regular) {
      // (C^a S^b) e_j = zeta^{p a (j+b)} e_{j+b}
      for (int j = 0; j < q; ++j) {
        const int t = mod(j + w2, q);
        out(t, j) = std::polar(1.0, 2.0 * M_PI * p * w1 * t / q);
      }
      return out;
    }
    // (lambda_w xi)(v) = beta(w, v - w) xi(v - w), beta(w, w') = zeta^{-p w2 w'1}
    for (int v1 = 0; v1 < q; ++v1)
      for (int v2 = 0; v2 < q; ++v2) {
        const int u1 = mod(v1 - w1, q), u2 = mod(v2 - w2, q);
        out(v1 + q * v2, u1 + q * u2) = std::polar(1.0, -2.0 * M_PI * p * w2 * u1 / q);
      }
    return out;
  }

  // u_w = e^{-i pi p w1 w2 / q} C^{w1} S^{w2} on centered integers w.
  CMatrix u(int w1, int w2) const { return std::polar(1.0, -M_PI * p * w1 * w2 / q) * monomial(w1, w2); }

  // Implementer of x: alpha_x(u_w) = e^{2 pi i w.x / q} u_w.
  CMatrix implementer(int x1, int x2) const {
    if (!regular) {
      const int pinv = inverse_mod(p, q);
      const int a = mod(-pinv * x1, q), b = mod(pinv * x2, q);
      // S^a C^b
      CMatrix s = CMatrix::Zero(q, q), c = CMatrix::Zero(q, q);
      for (int j = 0; j < q; ++j) {
        s(mod(j + a, q), j) = 1.0;
        c(j, j) = std::polar(1.0, 2.0 * M_PI * p * b * j / q);
      }
      return s * c;
    }
    CMatrix v = CMatrix::Zero(d, d);
    for (int v1 = 0; v1 < q; ++v1)
      for (int v2 = 0; v2 < q; ++v2) v(v1 + q * v2, v1 + q * v2) = std::polar(1.0, 2.0 * M_PI * (v1 * x1 + v2 * x2) / q);
    return v;
  }
};

inline Model make_model(int q, int p) {
  Model m;
  m.q = q;
  m.p = p;
  m.regular = std::gcd(p, q) != 1;
  m.d = m.regular ? q * q : q;
  return m;
}

/// Hermitian basis over frequency classes: "c:w1,w2" = (u_w + u_w^*)/sqrt(2n),
/// "s:w1,w2" = i(u_w - u_w^*)/sqrt(2n), "u:w1,w2" = eta u_w / sqrt(n) for
/// self-conjugate classes (n = tr(1)).
inline void frequency_basis(const Model& mdl, std::vector<CMatrix>& basis, std::vector<std::string>& labels,
                            bool scalars_only = false) {
  const int q = mdl.q;
  const double n = static_cast<double>(mdl.d);
  const int lo = -(q - 1) / 2;
  const int hi = q / 2;
  for (int w1 = lo; w1 <= hi; ++w1)
    for (int w2 = lo; w2 <= hi; ++w2) {
      if (scalars_only && (w1 != 0 || w2 != 0)) continue;
      const int n1 = centered(-w1, q), n2 = centered(-w2, q);
      const std::string tag = std::to_string(w1) + "," + std::to_string(w2);
      const CMatrix uw = mdl.u(w1, w2);
      if (n1 == w1 && n2 == w2) {
        const cplx lam = (uw.adjoint() * uw.adjoint()).trace() / n;
        const cplx eta = std::sqrt(lam);
        basis.push_back(eta * uw / std::sqrt(n));
        labels.push_back("u:" + tag);
        continue;
      }
      if (std::make_pair(w1, w2) < std::make_pair(n1, n2)) continue;
      basis.push_back((uw + uw.adjoint()) / std::sqrt(2.0 * n));
      labels.push_back("c:" + tag);
      basis.push_back(cplx(0.0, 1.0) * (uw - uw.adjoint()) / std::sqrt(2.0 * n));
      labels.push_back("s:" + tag);
    }
}

inline UnitaryAction dual_action(const Model& mdl) {
  SampledGroup g = torus_grid_group(mdl.q, 2);
  std::vector<CMatrix> us;
  for (int x = 0; x < g.size(); ++x) {
    const auto& c = g.coords[static_cast<size_t>(x)];
    us.push_back(mdl.implementer(static_cast<int>(c[0]), static_cast<int>(c[1])));
  }
  return UnitaryAction(g, us);
}

}  // namespace torus_detail

/// Clock C = diag(e^{2 pi i p j / q}) and shift S e_j = e_{j+1}; CS = e^{2 pi i p/q} SC.
inline std::pair<CMatrix, CMatrix> clock_shift(int q, int p) {
  const auto m = torus_detail::make_model(q, p);
  return {m.monomial(1, 0), m.monomial(0, 1)};
}

/// u_w for centered integer frequencies.
inline CMatrix torus_unitary(int q, int p, int w1, int w2) { return torus_detail::make_model(q, p).u(w1, w2); }

/// Fuzzy torus: span of the u_w (the whole of M_q when gcd(p, q) = 1) under
/// the dual action of Z_q x Z_q, flat length sum_i arcdist(2 pi x_i / q).
inline Cqms fuzzy_torus(int q, int p) {
  if (q < 2) throw DomainError("fuzzy_torus: need q >= 2");
  if (p < 1 || p >= q) throw DomainError("fuzzy_torus: need 1 <= p < q");
  const auto mdl = torus_detail::make_model(q, p);
  std::vector<CMatrix> basis;
  std::vector<std::string> labels;
  torus_detail::frequency_basis(mdl, basis, labels);
  return Cqms("torus:" + std::to_string(q) + ":" + std::to_string(p), HermitianSpace(mdl.d, basis, labels),
              torus_detail::dual_action(mdl), {"torus", {{"q", q}, {"p", p}}});
}

/// R e inside the fuzzy torus model of M_q (p = 1), same action.
inline Cqms scalar_torus(int q) {
  const auto mdl = torus_detail::make_model(q, 1);
  std::vector<CMatrix> basis;
  std::vector<std::string> labels;
  torus_detail::frequency_basis(mdl, basis, labels, true);
  return Cqms("scalar:" + std::to_string(q), HermitianSpace(mdl.d, basis, labels), torus_detail::dual_action(mdl),
              {"scalar", {{"q", q}}});
}

/// Spin matrices in the basis |j, m>, m = j, j-1, ..., -j.
struct SpinMatrices {
  CMatrix jz, jy, jx, jplus, jminus;
};

inline SpinMatrices spin_matrices(int two_j) {
  const int d = two_j + 1;
  const double j = 0.5 * two_j;
  SpinMatrices s;
  s.jz = CMatrix::Zero(d, d);
  s.jplus = CMatrix::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const double m = j - k;
    s.jz(k, k) = m;
    if (k > 0) s.jplus(k - 1, k) = std::sqrt(j * (j + 1) - m * (m + 1));
  }
  s.jminus = s.jplus.adjoint();
  s.jx = (s.jplus + s.jminus) * 0.5;
  s.jy = (s.jplus - s.jminus) * cplx(0.0, -0.5);
  return s;
}

/// Hermitian basis of M_{2j+1} from spherical tensor operators T^l_m, built by
/// lowering J_+^l with ad(J_-). Labels "t:l,0", "c:l,m", "s:l,m" (m > 0).
inline HermitianSpace spherical_tensor_space(int two_j) {
  const int d = two_j + 1;
  const SpinMatrices s = spin_matrices(two_j);
  std::vector<CMatrix> basis;
  std::vector<std::string> labels;
  for (int l = 0; l <= two_j; ++l) {
    std::vector<CMatrix> t(static_cast<size_t>(l + 1));  // t[m] for m = l..0
    CMatrix cur = CMatrix::Identity(d, d);
    for (int k = 0; k < l; ++k) cur = cur * s.jplus;
    t[static_cast<size_t>(l)] = cur / cur.norm();
    for (int m = l; m > 0; --m) {
      CMatrix next = s.jminus * t[static_cast<size_t>(m)] - t[static_cast<size_t>(m)] * s.jminus;
      t[static_cast<size_t>(m - 1)] = next / next.norm();
    }
    const std::string ls = std::to_string(l);
    CMatrix t0 = t[0];
    t0 = (t0 + t0.adjoint()) * 0.5;
    if (l == 0) t0 = CMatrix::Identity(d, d);
    basis.push_back(t0 / t0.norm());
    labels.push_back("t:" + ls + ",0");
    for (int m = 1; m <= l; ++m) {
      const CMatrix& tm = t[static_cast<size_t>(m)];
      const CMatrix c = tm + tm.adjoint();
      const CMatrix si = cplx(0.0, 1.0) * (tm - tm.adjoint());
      basis.push_back(c / c.norm());
      labels.push_back("c:" + ls + "," + std::to_string(m));
      basis.push_back(si / si.norm());
      labels.push_back("s:" + ls + "," + std::to_string(m));
    }
  }
  return HermitianSpace(d, basis, labels);
}

/// Spin-j implementers exp(-i a Jz) exp(-i b Jy) exp(-i c Jz) over the SO(3)
/// sample; inverse copies use the adjoint of their partner.
inline UnitaryAction sphere_action(int two_j, const SphereGrid& grid) {
  SampledGroup g = so3_euler_grid(grid.na, grid.nb, grid.ng);
  const SpinMatrices s = spin_matrices(two_j);
  const int d = two_j + 1;
  const int half = (g.size() - 1) / 2;
  std::vector<CMatrix> us(static_cast<size_t>(g.size()));
  us[0] = CMatrix::Identity(d, d);
  std::map<double, CMatrix> ycache;
  for (int t = 0; t < half; ++t) {
    const int x = 1 + t;
    const auto& c = g.coords[static_cast<size_t>(x)];
    auto it = ycache.find(c[1]);
    if (it == ycache.end()) it = ycache.emplace(c[1], matrix_exp_skew(s.jy, -c[1]).matrix()).first;
    const CMatrix& y = it->second;
    CMatrix u(d, d);
    for (int r = 0; r < d; ++r)
      for (int k = 0; k < d; ++k)
        u(r, k) = std::polar(1.0, -c[0] * s.jz(r, r).real()) * y(r, k) * std::polar(1.0, -c[2] * s.jz(k, k).real());
    us[static_cast<size_t>(x)] = u;
    us[static_cast<size_t>(1 + half + t)] = u.adjoint();
  }
  return UnitaryAction(g, us);
}

/// Full matrix space M_{2j+1} under the SO(3) conjugation action, rotation-angle length.
inline Cqms fuzzy_sphere(int two_j, const SphereGrid& grid = {}) {
  if (two_j < 1) throw DomainError("fuzzy_sphere: need two_j >= 1");
  return Cqms("sphere:" + std::to_string(two_j), spherical_tensor_space(two_j), sphere_action(two_j, grid),
              {"sphere", {{"two_j", two_j}, {"na", grid.na}, {"nb", grid.nb}, {"ng", grid.ng}}});
}

inline Cqms build_example(const ExampleDescriptor& d) {
  d.validate();
  Cqms q = d.family == "cycle"    ? commutative_cycle(d.m)
           : d.family == "torus"  ? fuzzy_torus(d.q, d.p)
           : d.family == "sphere" ? fuzzy_sphere(d.two_j, d.grid)
                                  : scalar_torus(d.q);
  return q;
}

/// Berezin covariant symbols sigma_a(x) = tr(a alpha_x(P)) on the SO(3)
/// sample, P the highest-weight projection, and the contravariant map
/// sigma_hat(f) = d sum_x w_x f(x) alpha_x(P).
struct BerezinMaps {
  int two_j = 0;
  int d = 0;
  Eigen::MatrixXd symbols;  // |G| x n, symbols(x, i) = sigma_{B_i}(x)
  std::vector<double> weights;
  const Cqms* sphere = nullptr;

  Vec sigma(const Vec& coeffs) const { return symbols * coeffs; }

  /// Coefficients of sigma_hat(f).
  Vec sigma_hat(const Vec& f) const {
    Vec wf(f.size());
    for (Eigen::Index x = 0; x < f.size(); ++x) wf(x) = d * weights[static_cast<size_t>(x)] * f(x);
    return symbols.transpose() * wf;
  }

  double unital_defect() const {
    const Vec one = Vec::Ones(symbols.rows());
    return op_norm(sphere->matrix(sigma_hat(one)) - CMatrix::Identity(d, d));
  }

  /// Smallest eigenvalue of sigma_hat(f) over random f >= 0 (should be >= 0).
  double positivity_margin(int samples, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = kInf;
    for (int s = 0; s < samples; ++s) {
      Vec f(symbols.rows());
      for (Eigen::Index x = 0; x < f.size(); ++x) f(x) = u(rng) * u(rng);
      worst = std::min(worst, hermitian_eigenvalues(sphere->matrix(sigma_hat(f)))(0));
    }
    return worst;
  }

  /// max || alpha_y(sigma_hat(sigma_b)) - sigma_hat(sigma_{alpha_y b}) || over
  /// sampled y and random b with ||b|| <= 1.
  double equivariance_defect(int samples, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    const auto& act = sphere->action();
    const int n = sphere->size();
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      Vec b = random_gaussian(n, rng);
      b /= sphere->norm(b);
      const int y = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(act.group().size() - 1));
      const CMatrix lhs = act.apply(y, sphere->matrix(sigma_hat(sigma(b))));
      const Vec by = sphere->space().coefficients(act.apply(y, sphere->matrix(b)));
      const CMatrix rhs = sphere->matrix(sigma_hat(sigma(by)));
      worst = std::max(worst, op_norm(lhs - rhs));
    }
    return worst;
  }

  /// Numerical rank of sigma (weighted Gram of the symbol columns).
  int symbol_rank(double rel_tol = 1e-10) const {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(symbols.cols(), symbols.cols());
    for (Eigen::Index x = 0; x < symbols.rows(); ++x)
      gram += weights[static_cast<size_t>(x)] * symbols.row(x).transpose() * symbols.row(x);
    const Vec ev = hermitian_eigenvalues(gram.cast<cplx>());
    int rank = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev(i) > rel_tol * ev(ev.size() - 1)) ++rank;
    return rank;
  }
};

inline BerezinMaps berezin_maps(const Cqms& sphere) {
  if (sphere.meta().family != "sphere") throw DomainError("berezin_maps: not a fuzzy sphere");
  BerezinMaps b;
  b.two_j = static_cast<int>(sphere.meta().params.at("two_j"));
  b.d = b.two_j + 1;
  b.sphere = &sphere;
  const auto& act = sphere.action();
  const auto& g = act.group();
  const int n = sphere.size();
  b.symbols.resize(g.size(), n);
  b.weights = g.weights;
  for (int x = 0; x < g.size(); ++x) {
    const Eigen::VectorXcd psi = act.implementer(x).col(0);
    const CMatrix proj = psi * psi.adjoint();
    b.symbols.row(x) = sphere.space().coefficients(proj).transpose();
  }
  return b;
}

}  // namespace qgh
