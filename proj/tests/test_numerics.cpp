#include <gtest/gtest.h>

#include <random>

#include "qgh/numerics.hpp"
#include "qgh/solver.hpp"
#include "qgh/space.hpp"

using namespace qgh;

namespace {

// Largest |eigenvalue| by power iteration on a^2 (positive semidefinite).
double power_norm(const CMatrix& a, int iters = 4000) {
  const CMatrix a2 = a * a;
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(a.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += cplx(0.01 * i, 0.003 * i * i);
  double lam = 0.0;
  for (int k = 0; k < iters; ++k) {
    Eigen::VectorXcd w = a2 * v;
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    v = w / n;
    lam = n;
  }
  return std::sqrt(lam);
}

// Extreme eigenvalues via power iteration on a + s I and s I - a.
std::pair<double, double> power_extremes(const CMatrix& a) {
  const double s = power_norm(a) + 1.0;
  const CMatrix id = CMatrix::Identity(a.rows(), a.cols());
  auto top = [&](const CMatrix& m) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Ones(m.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += cplx(0.02 * i, -0.01 * i);
    double lam = 0.0;
    for (int k = 0; k < 6000; ++k) {
      Eigen::VectorXcd w = m * v;
      lam = v.dot(w).real() / v.squaredNorm();
      v = w / w.norm();
    }
    return lam;
  };
  return {s - top(s * id - a), top(a + s * id) - s};
}

}  // namespace

TEST(Numerics, EigenvaluesMatchPowerIteration) {
  std::mt19937_64 rng(3);
  for (int d : {2, 3, 5, 8}) {
    for (int rep = 0; rep < 5; ++rep) {
      const CMatrix a = random_hermitian(d, rng);
      const Vec ev = hermitian_eigenvalues(a);
      const auto [lo, hi] = power_extremes(a);
      EXPECT_NEAR(ev(0), lo, 1e-6 * (1.0 + std::abs(lo))) << d;
      EXPECT_NEAR(ev(d - 1), hi, 1e-6 * (1.0 + std::abs(hi))) << d;
      EXPECT_NEAR(op_norm(a), power_norm(a), 1e-6 * (1.0 + op_norm(a)));
    }
  }
}

TEST(Numerics, EigenvectorsReconstruct) {
  std::mt19937_64 rng(4);
  for (int d : {1, 2, 4, 9, 16}) {
    const CMatrix a = random_hermitian(d, rng);
    const EigResult e = hermitian_eig(a);
    EXPECT_TRUE(is_unitary(e.vectors, 1e-9));
    const CMatrix back = e.vectors * e.values.cast<cplx>().asDiagonal() * e.vectors.adjoint();
    EXPECT_LT(max_abs_entry(back - a), 1e-9);
    for (int k = 1; k < d; ++k) EXPECT_LE(e.values(k - 1), e.values(k));
    const Vec ev = hermitian_eigenvalues(a);
    EXPECT_LT((ev - e.values).norm(), 1e-9);
  }
}

TEST(Numerics, DegenerateSpectrum) {
  const CMatrix a = CMatrix::Identity(6, 6) * 2.5;
  const EigResult e = hermitian_eig(a);
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(e.values(k), 2.5, 1e-12);
  EXPECT_NEAR(quotient_norm(a), 0.0, 1e-12);
}

TEST(Numerics, QuotientNormIsHalfSpread) {
  std::mt19937_64 rng(5);
  const CMatrix a = random_hermitian(5, rng);
  const Vec ev = hermitian_eigenvalues(a);
  const double q = quotient_norm(a);
  EXPECT_NEAR(q, 0.5 * (ev(4) - ev(0)), 1e-12);
  // the minimizing shift is the midpoint
  const double mid = 0.5 * (ev(4) + ev(0));
  EXPECT_NEAR(op_norm(a - mid * CMatrix::Identity(5, 5)), q, 1e-9);
  for (double lam : {-1.0, 0.0, 0.3, 2.0}) EXPECT_GE(op_norm(a - lam * CMatrix::Identity(5, 5)) + 1e-12, q);
}

TEST(Numerics, ExpOfHermitianIsUnitary) {
  std::mt19937_64 rng(6);
  const CMatrix h = random_hermitian(4, rng);
  const UnitaryMatrix u = matrix_exp_skew(h, 0.7);
  EXPECT_TRUE(is_unitary(u.matrix(), 1e-10));
  // exp(i t h) exp(-i t h) = I
  EXPECT_LT(max_abs_entry(u.matrix() * matrix_exp_skew(h, -0.7).matrix() - CMatrix::Identity(4, 4)), 1e-10);
  // small t: first-order term
  const CMatrix du = (matrix_exp_skew(h, 1e-6).matrix() - CMatrix::Identity(4, 4)) / 1e-6;
  EXPECT_LT(max_abs_entry(du - cplx(0, 1) * h), 1e-5);
}

TEST(Numerics, CheckedWrappersReject) {
  CMatrix m(2, 2);
  m << 1.0, cplx(0, 1), cplx(0, 1), 2.0;
  EXPECT_THROW(HermitianMatrix{m}, DomainError);
  EXPECT_THROW(HermitianMatrix{CMatrix::Zero(2, 3)}, DimensionError);
  EXPECT_THROW(UnitaryMatrix{CMatrix::Identity(2, 2) * 2.0}, DomainError);
  EXPECT_NO_THROW(HermitianMatrix::identity(3));
  CMatrix nan = CMatrix::Identity(2, 2);
  nan(0, 0) = std::nan("");
  EXPECT_THROW(hermitian_eig(nan), DomainError);
}

TEST(Numerics, SmoothedNormBracketsExact) {
  std::mt19937_64 rng(7);
  const CMatrix a = random_hermitian(6, rng);
  const double exact = op_norm(a);
  for (double mu : {0.5, 0.05, 0.001}) {
    CMatrix g;
    const SmoothedValue s = smoothed_op_norm(a, mu, true, &g);
    EXPECT_NEAR(s.exact, exact, 1e-10);
    EXPECT_GE(s.smooth + 1e-12, exact);
    EXPECT_LE(s.smooth, exact + mu * std::log(2.0 * 6) + 1e-12);
    // gradient: directional derivative by finite difference
    const CMatrix dir = random_hermitian(6, rng);
    const double h = 1e-6;
    const double fd = (smoothed_op_norm(a + h * dir, mu, false, nullptr).smooth -
                       smoothed_op_norm(a - h * dir, mu, false, nullptr).smooth) /
                      (2 * h);
    const double an = (g.array() * dir.conjugate().array()).real().sum();
    EXPECT_NEAR(fd, an, 1e-4 * (1.0 + std::abs(fd)));
  }
}

TEST(Numerics, FistaMinimizesConvexNorm) {
  // min_t ||a - t b|| over real t, compared with a dense scan.
  std::mt19937_64 rng(8);
  const CMatrix a = random_hermitian(4, rng), b = random_hermitian(4, rng);
  auto f = [&](const Vec& t, double mu, bool want_grad) {
    CMatrix g;
    const SmoothedValue s = smoothed_op_norm(a - t(0) * b, mu, want_grad, &g);
    SmoothedValue out = s;
    if (want_grad) {
      out.grad.resize(1);
      out.grad(0) = -(g.array() * b.conjugate().array()).real().sum();
    }
    return out;
  };
  const MinimizeResult r = fista_minimize(f, [](const Vec& x) { return x; }, Vec::Zero(1), ContinuationOptions{});
  double best = 1e300;
  for (int k = -40000; k <= 40000; ++k) best = std::min(best, op_norm(a - (k * 1e-4) * b));
  EXPECT_LE(r.value, best + 1e-4);
  EXPECT_GE(r.value, best - 1e-3);
}

TEST(Space, FullBasisIsOrthonormalAndRoundTrips) {
  for (int d : {1, 2, 3, 5}) {
    const HermitianSpace s = HermitianSpace::full(d);
    EXPECT_EQ(s.size(), d * d);
    EXPECT_TRUE(s.is_full());
    for (int i = 0; i < s.size(); ++i)
      for (int j = 0; j < s.size(); ++j) {
        const double ip = (s.basis_matrix(i).adjoint() * s.basis_matrix(j)).trace().real();
        EXPECT_NEAR(ip, i == j ? 1.0 : 0.0, 1e-12);
      }
    std::mt19937_64 rng(9);
    const CMatrix m = random_hermitian(d, rng);
    EXPECT_LT(max_abs_entry(s.to_matrix(s.coefficients(m)) - m), 1e-12);
    EXPECT_NEAR(op_norm(s.to_matrix(s.unit())), 1.0, 1e-12);
  }
}

TEST(Space, DiagonalSpaceRejectsOffDiagonal) {
  const HermitianSpace s = HermitianSpace::diagonal(4);
  CMatrix m = CMatrix::Zero(4, 4);
  m(0, 1) = m(1, 0) = 1.0;
  EXPECT_GT(s.residual(m), 0.5);
  EXPECT_THROW(s.element(m), DomainError);
  const Vec t = s.traceless(Vec::Ones(4));
  EXPECT_NEAR(s.to_matrix(t).trace().real(), 0.0, 1e-12);
}

TEST(Space, StatesValidate) {
  EXPECT_THROW(StateFunctional(CMatrix::Identity(2, 2), "bad"), DomainError);
  CMatrix neg = CMatrix::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  EXPECT_THROW(StateFunctional(neg, "neg"), DomainError);
  const StateFunctional d = StateFunctional::dirac(3, 1);
  CMatrix a = CMatrix::Zero(3, 3);
  a(1, 1) = 4.0;
  EXPECT_NEAR(d(a), 4.0, 1e-14);
}

TEST(NumericsProperty, ReconstructionOnManyInstances) {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> dim(1, 16);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const CMatrix a = random_hermitian(dim(rng), rng);
    const EigResult e = hermitian_eig(a);
    const CMatrix back = e.vectors * e.values.cast<cplx>().asDiagonal() * e.vectors.adjoint();
    worst = std::max(worst, op_norm(back - a) / (1.0 + op_norm(a)));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(NumericsProperty, NormAxioms) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  for (int rep = 0; rep < 200; ++rep) {
    const int d = 1 + rep % 7;
    const CMatrix a = random_hermitian(d, rng), b = random_hermitian(d, rng);
    EXPECT_LE(op_norm(a + b), op_norm(a) + op_norm(b) + 1e-12);
    const double lam = n01(rng);
    EXPECT_NEAR(op_norm(lam * a), std::abs(lam) * op_norm(a), 1e-10 * (1.0 + op_norm(a)));
    EXPECT_LE(quotient_norm(a), op_norm(a) + 1e-12);
    EXPECT_NEAR(quotient_norm(a + lam * CMatrix::Identity(d, d)), quotient_norm(a), 1e-10 * (1.0 + op_norm(a)));
  }
}

TEST(Numerics, DiagonalExponential) {
  CMatrix h = CMatrix::Zero(2, 2);
  h(0, 0) = M_PI;
  EXPECT_LT(max_abs_entry(matrix_exp_skew(h, 0.0).matrix() - CMatrix::Identity(2, 2)), 1e-14);
  CMatrix want = CMatrix::Identity(2, 2);
  want(0, 0) = -1.0;
  EXPECT_LT(max_abs_entry(matrix_exp_skew(h, 1.0).matrix() - want), 1e-12);
}
