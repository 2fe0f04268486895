#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qgh/cqms.hpp"
#include "qgh/examples.hpp"

using namespace qgh;
using namespace qgh::oracle;

TEST(Cqms, ScalarSpaceIsDegenerate) {
  const Cqms q = scalar_torus(3);
  EXPECT_EQ(q.size(), 1);
  EXPECT_DOUBLE_EQ(radius(q).value, 0.0);
  EXPECT_DOUBLE_EQ(state_diameter(q, 1.0, 4), 0.0);
  const BallNet net = ball_net(q, 0.0, 0.1, 16);
  ASSERT_EQ(net.points.size(), 1u);
  EXPECT_NEAR(net.points[0].norm(), 0.0, 1e-15);
}

TEST(Cqms, CycleStateMetricMatchesPathOracle) {
  const int m = 12;
  const Cqms q = commutative_cycle(m);
  const Eigen::MatrixXd oracle = cycle_path_metric(m);
  const double R = radius(q).value;
  for (int j = 1; j <= m / 2; ++j) {
    const double rho = state_metric(q, StateFunctional::dirac(m, 0), StateFunctional::dirac(m, j), R);
    EXPECT_NEAR(rho, oracle(0, j), 0.02 * oracle(0, j)) << j;
    EXPECT_LE(rho, 2.0 * R + 1e-9);
  }
  EXPECT_NEAR(state_metric(q, StateFunctional::dirac(m, 3), StateFunctional::dirac(m, 3), R), 0.0, 1e-12);
}

TEST(Cqms, StateMetricIsSymmetricAndSaturates) {
  const Cqms q = fuzzy_torus(3, 1);
  std::mt19937_64 rng(3);
  const double R = radius(q).value;
  const auto [u, v] = std::pair{random_hermitian(3, rng), random_hermitian(3, rng)};
  const StateFunctional mu(hermitian_eig(u).vectors.col(0) * hermitian_eig(u).vectors.col(0).adjoint(), "mu");
  const StateFunctional nu(hermitian_eig(v).vectors.col(2) * hermitian_eig(v).vectors.col(2).adjoint(), "nu");
  const double a = state_metric(q, mu, nu, R), b = state_metric(q, nu, mu, R);
  EXPECT_NEAR(a, b, 1e-3 * (1.0 + a));
  // the supremum is reached on D_{r_A}, so a larger R changes nothing
  const double eps_net = 0.3;
  EXPECT_NEAR(state_metric(q, mu, nu, 1.5 * R), a, 2.0 * eps_net);
  EXPECT_THROW(state_metric(q, mu, nu, 0.5 * R), DomainError);
}

TEST(Cqms, CycleRadiusIsHalfMaxArc) {
  for (int m : {3, 6, 9, 12}) {
    const Cqms q = commutative_cycle(m);
    const double want = M_PI * (m / 2) / m;
    const RadiusEstimate r = radius(q);
    EXPECT_NEAR(r.value, want, 0.01 * want) << m;
    EXPECT_FALSE(r.exceeds_cap);
  }
}

TEST(Cqms, CycleDiameter) {
  const Cqms q = commutative_cycle(12);
  EXPECT_NEAR(state_diameter(q, radius(q).value, 12), M_PI, 0.05 * M_PI);
}

TEST(Cqms, RadiusBoundsEveryRatio) {
  // the radius is the best constant in ||a||~ <= r L(a)
  std::mt19937_64 rng(4);
  for (const Cqms& q : {fuzzy_torus(3, 1), fuzzy_torus(4, 1), commutative_cycle(8)}) {
    const double r = radius(q).value;
    EXPECT_LE(r, radius(q).cap + 1e-6);
    for (int rep = 0; rep < 200; ++rep) {
      const Vec a = q.space().traceless(random_gaussian(q.size(), rng));
      EXPECT_LE(q.quotient(a), r * q.lip(a) * (1.0 + 1e-6)) << q.name();
    }
  }
}

TEST(Cqms, RadiusWitnessAttainsTheValue) {
  const Cqms q = fuzzy_torus(4, 1);
  const RadiusEstimate r = radius(q);
  ASSERT_EQ(r.witness.size(), q.size());
  EXPECT_NEAR(q.lip(r.witness), 1.0, 1e-6);
  EXPECT_NEAR(q.quotient(r.witness), r.value, 1e-6 * r.value);
}

TEST(Ball, MembershipBasics) {
  const Cqms q = fuzzy_torus(3, 1);
  std::mt19937_64 rng(5);
  for (double r : {0.0, 0.5, 2.0}) EXPECT_TRUE(ball_membership(q, Vec(Vec::Zero(q.size())), r));
  Vec d = q.space().traceless(random_gaussian(q.size(), rng));
  d /= q.norm(d);
  EXPECT_FALSE(ball_membership(q, Vec(3.0 * d), 2.0));
  CMatrix off = CMatrix::Zero(3, 3);
  off(0, 0) = 1.0;
  EXPECT_NO_THROW(ball_membership(q, HermitianMatrix(off), 1.0));
}

TEST(Ball, MatrixOutsideSpanIsRejected) {
  const Cqms q = commutative_cycle(4);
  CMatrix m = CMatrix::Zero(4, 4);
  m(0, 1) = m(1, 0) = 1.0;
  EXPECT_THROW(ball_membership(q, HermitianMatrix(m), 1.0), DomainError);
}

TEST(Ball, GaugeIdentityAndRayScan) {
  std::mt19937_64 rng(6);
  for (const Cqms& q : {fuzzy_torus(3, 1), fuzzy_sphere(2, {6, 6, 6}), commutative_cycle(7)}) {
    const double r = 1.3;
    for (int rep = 0; rep < 20; ++rep) {
      const Vec d = random_gaussian(q.size(), rng);
      const double t = boundary_scale(q, d, r);
      const double want = 1.0 / std::max(q.lip(d), q.norm(d) / r);
      EXPECT_NEAR(t, want, 1e-6 * want) << q.name();
      EXPECT_TRUE(ball_membership(q, Vec(t * d), r));
      EXPECT_FALSE(ball_membership(q, Vec(1.01 * t * d), r));
    }
    // unit direction: only the norm bound binds
    EXPECT_NEAR(boundary_scale(q, q.space().unit(), r) * q.norm(q.space().unit()), r, 1e-6 * r);
  }
}

TEST(Ball, GaugeScalesWithLipAndNorm) {
  const Cqms q = fuzzy_torus(4, 1);
  std::mt19937_64 rng(7);
  Vec d = q.space().traceless(random_gaussian(q.size(), rng));
  d *= 2.0 / q.lip(d);  // L = 2
  const double r = 4.0 * q.norm(d);  // ||d|| = r/4
  EXPECT_NEAR(boundary_scale(q, d, r), 0.5, 1e-6);
  EXPECT_THROW(boundary_scale(q, Vec(Vec::Zero(q.size())), r), DomainError);
}

TEST(Support, NeverBelowNetPointsAndAttained) {
  const Cqms q = fuzzy_torus(3, 1);
  std::mt19937_64 rng(8);
  const double R = radius(q).value;
  const BallNet net = ball_net(q, R, 0.4, 256);
  for (int rep = 0; rep < 5; ++rep) {
    const Vec g = q.space().traceless(random_gaussian(q.size(), rng));
    const SupportResult s = support_function(q, g, R, {});
    double best = 0.0;
    for (const Vec& p : net.points) best = std::max(best, g.dot(p));
    EXPECT_GE(s.value, best - 1e-3 * (1.0 + best));
    EXPECT_TRUE(ball_membership(q, s.maximizer, R));
    EXPECT_NEAR(g.dot(s.maximizer), s.value, 1e-9 * (1.0 + s.value));
  }
}

TEST(Net, PointsAreInTheBallAndSeparated) {
  for (const Cqms& q : {fuzzy_torus(3, 1), commutative_cycle(6), fuzzy_sphere(1, {6, 6, 6})}) {
    const double r = radius(q).value, eps = 0.4;
    const BallNet net = ball_net(q, r, eps, 256);
    ASSERT_FALSE(net.points.empty());
    for (size_t i = 0; i < net.points.size(); ++i) {
      EXPECT_TRUE(ball_membership(q, net.points[i], r)) << q.name();
      EXPECT_LE(q.lip(net.points[i]), 1.0 + 1e-8);
      EXPECT_LE(q.norm(net.points[i]), r + 1e-8);
    }
    EXPECT_GE(net.min_separation, eps / 2.0 - 1e-12) << q.name();
    if (!net.incomplete) {
      EXPECT_LE(net.covering_certificate, eps);
    }
    // nested balls: every point of the r-net lies in the larger ball
    for (const Vec& p : net.points) EXPECT_TRUE(ball_membership(q, p, 1.5 * r));
  }
}

TEST(Net, CoverageAgainstCoefficientGrid) {
  // real dimension 4: enumerate a coefficient grid of the bounding box and
  // measure the true distance of every grid point of D_r to the net
  const Cqms q = fuzzy_torus(2, 1);
  ASSERT_EQ(q.size(), 4);
  const double r = 1.0;
  const int n = 17;
  const double box = std::sqrt(2.0) * r;  // |c_i| <= ||a||_HS <= sqrt(d) ||a||
  for (double eps : {0.6, 0.4}) {
    const BallNet net = ball_net(q, r, eps, 2048);
    ASSERT_FALSE(net.incomplete) << eps;
    EXPECT_LE(net.covering_certificate, eps);
    double worst = 0.0;
    int inside = 0;
    Vec c(4);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            c << -box + 2 * box * i / (n - 1), -box + 2 * box * j / (n - 1), -box + 2 * box * k / (n - 1),
                -box + 2 * box * l / (n - 1);
            if (!ball_membership(q, c, r)) continue;
            ++inside;
            worst = std::max(worst, detail::distance_to_set(q.matrix(c), net.matrices));
          }
    EXPECT_GT(inside, 1000);
    EXPECT_LE(worst, eps) << eps;
  }
}

TEST(Net, IntervalBallOfScalars) {
  // D_r(R e) = [-r, r] e; a net of step <= 2 eps
  const Cqms q = scalar_torus(4);
  const double r = 1.0, eps = 0.25;
  const BallNet net = ball_net(q, r, eps, 64);
  std::vector<double> xs;
  for (const Vec& p : net.points) xs.push_back(q.norm(p) * (p(0) < 0 ? -1.0 : 1.0));
  std::sort(xs.begin(), xs.end());
  EXPECT_LE(xs.front() + r, eps + 1e-9);
  EXPECT_LE(r - xs.back(), eps + 1e-9);
  for (size_t i = 1; i < xs.size(); ++i) EXPECT_LE(xs[i] - xs[i - 1], 2.0 * eps + 1e-9);
}

TEST(Net, NestedBallsAreCloseInHausdorff) {
  // dist_H(D_R, D_r) <= R - r, up to the two net resolutions
  const Cqms q = fuzzy_torus(3, 1);
  const double R = radius(q).value, r = 0.6 * R, eps = 0.3;
  const BallNet big = ball_net(q, R, eps, 512), small = ball_net(q, r, eps, 512);
  EXPECT_LE(hausdorff_sets(big.matrices, small.matrices),
            R - r + big.covering_certificate + small.covering_certificate + 1e-9);
}

TEST(Net, IsCachedAndDeterministic) {
  const Cqms q = fuzzy_torus(3, 1);
  auto a = ball_net_shared(q, 1.0, 0.4, 128, 3);
  auto b = ball_net_shared(q, 1.0, 0.4, 128, 3);
  EXPECT_EQ(a.get(), b.get());
  const Cqms fresh = fuzzy_torus(3, 1);
  const BallNet c = ball_net(fresh, 1.0, 0.4, 128, 3);
  ASSERT_EQ(c.points.size(), a->points.size());
  for (size_t i = 0; i < c.points.size(); ++i) EXPECT_EQ((c.points[i] - a->points[i]).norm(), 0.0);
  EXPECT_THROW(ball_net(q, 1.0, 0.0, 10), DomainError);
}
