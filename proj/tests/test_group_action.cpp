#include <gtest/gtest.h>

#include <random>

#include "qgh/examples.hpp"
#include "qgh/group_action.hpp"

using namespace qgh;

TEST(SampledGroup, TorusGridIsExact) {
  const SampledGroup g = torus_grid_group(4, 2);
  EXPECT_EQ(g.size(), 16);
  EXPECT_TRUE(g.is_exact);
  EXPECT_NO_THROW(g.validate());
  for (int x = 0; x < g.size(); ++x) {
    EXPECT_EQ(g.multiply(x, g.inverse[static_cast<size_t>(x)]), g.identity);
    EXPECT_NEAR(g.lengths[static_cast<size_t>(x)], g.lengths[static_cast<size_t>(g.inverse[static_cast<size_t>(x)])], 1e-12);
  }
  EXPECT_DOUBLE_EQ(g.lengths[static_cast<size_t>(g.identity)], 0.0);
}

TEST(SampledGroup, So3GridWeightsAndInverses) {
  const SampledGroup g = so3_euler_grid(6, 6, 6);
  EXPECT_NO_THROW(g.validate());
  EXPECT_FALSE(g.is_exact);
  EXPECT_THROW(g.multiply(0, 1), DomainError);
  for (double l : g.lengths) {
    EXPECT_GE(l, 0.0);
    EXPECT_LE(l, M_PI + 1e-12);
  }
}

TEST(SampledGroup, RejectsBadWeights) {
  SampledGroup g = cyclic_group(5);
  g.weights[0] += 0.1;
  EXPECT_THROW(g.validate(), DomainError);
}

TEST(UnitaryAction, ApplyIntoMatchesDirectConjugation) {
  std::mt19937_64 rng(2);
  for (const Cqms& q : {fuzzy_torus(3, 1), fuzzy_torus(4, 2), fuzzy_sphere(2, {6, 6, 6}), commutative_cycle(5)}) {
    const UnitaryAction& act = q.action();
    const CMatrix a = random_hermitian(act.dim(), rng);
    CMatrix out, tmp;
    for (int x = 0; x < act.group().size(); x += 7) {
      const CMatrix& u = act.implementer(x);
      act.apply_into(x, a, out, tmp);
      EXPECT_LT(max_abs_entry(out - u * a * u.adjoint()), 1e-12) << q.name();
    }
  }
}

TEST(UnitaryAction, LipSeminormEqualsFullSweep) {
  std::mt19937_64 rng(3);
  for (const Cqms& q : {fuzzy_torus(3, 1), fuzzy_sphere(1, {6, 6, 6})}) {
    const UnitaryAction& act = q.action();
    for (int rep = 0; rep < 3; ++rep) {
      const CMatrix a = random_hermitian(act.dim(), rng);
      double direct = 0.0;
      for (int x = 0; x < act.group().size(); ++x) {
        if (x == act.group().identity) continue;
        const CMatrix& u = act.implementer(x);
        direct = std::max(direct, op_norm(u * a * u.adjoint() - a) / act.group().lengths[static_cast<size_t>(x)]);
      }
      EXPECT_NEAR(lip_seminorm(act, a), direct, 1e-10 * (1.0 + direct)) << q.name();
    }
  }
}

TEST(UnitaryAction, SeminormVanishesOnScalars) {
  const Cqms q = fuzzy_torus(5, 2);
  EXPECT_NEAR(lip_seminorm(q.action(), CMatrix::Identity(5, 5) * 3.0), 0.0, 1e-12);
}

TEST(UnitaryAction, RejectsNonUnitary) {
  SampledGroup g = cyclic_group(3);
  std::vector<CMatrix> us(3, CMatrix::Identity(2, 2));
  us[1] *= 2.0;
  EXPECT_THROW(UnitaryAction(g, us), DomainError);
}

TEST(UnitaryAction, RejectsNonHomomorphism) {
  SampledGroup g = cyclic_group(3);
  CMatrix s = CMatrix::Zero(2, 2);
  s(0, 1) = s(1, 0) = 1.0;
  std::vector<CMatrix> us{CMatrix::Identity(2, 2), s, s};
  EXPECT_THROW(UnitaryAction(g, us), DomainError);
}

TEST(Multiplicity, TorusCharactersAreExactOnes) {
  for (auto [qq, p] : {std::pair{3, 1}, {4, 1}, {4, 2}, {5, 2}, {6, 1}}) {
    const Cqms q = fuzzy_torus(qq, p);
    for (const auto& c : torus_characters(q.group(), qq, 2)) {
      const MultiplicityResult r = multiplicity_raw(q.action(), c, &q.space());
      EXPECT_EQ(r.value, 1) << q.name() << " " << c.label;
      EXPECT_LT(r.deviation, 1e-9);
    }
  }
}

TEST(Multiplicity, SphereMatchesClebschGordan) {
  // M_{2j+1} = V_j (x) V_j = V_0 + ... + V_{2j}, each once.
  for (int tj = 1; tj <= 4; ++tj) {
    const Cqms q = fuzzy_sphere(tj);
    for (int l = 0; l <= tj + 1; ++l) {
      const MultiplicityResult r = multiplicity_raw(q.action(), so3_character(q.group(), l), &q.space());
      EXPECT_EQ(r.value, l <= tj ? 1 : 0) << "2j=" << tj << " l=" << l;
      EXPECT_LT(r.deviation, 0.05);
    }
  }
}

TEST(Multiplicity, CoarseGridIsReported) {
  const Cqms q = fuzzy_sphere(6, {2, 1, 2});
  EXPECT_THROW(multiplicity(q.action(), so3_character(q.group(), 6), &q.space(), 1e-6), QuadratureError);
}

TEST(Isotypic, ProjectionIsIdempotentAndCommutesWithAction) {
  const Cqms q = fuzzy_torus(3, 1);
  std::mt19937_64 rng(4);
  const CMatrix a = random_hermitian(3, rng);
  auto chars = torus_characters(q.group(), 3, 2);
  // {(1,0), (2,0)} is closed under conjugation
  std::vector<IrrepCharacter> sel{chars[1], chars[2]};
  const CMatrix p = isotypic_project(q.action(), sel, a);
  EXPECT_LT(max_abs_entry(isotypic_project(q.action(), sel, p) - p), 1e-12);
  const int x = 4;
  EXPECT_LT(max_abs_entry(isotypic_project(q.action(), sel, q.action().apply(x, a)) - q.action().apply(x, p)), 1e-12);
  // complementary projections sum to the identity
  std::vector<IrrepCharacter> rest;
  for (size_t k = 0; k < chars.size(); ++k)
    if (chars[k].label != "(0,0)") rest.push_back(chars[k]);
  const CMatrix total = isotypic_project(q.action(), {chars[0]}, a) + isotypic_project(q.action(), rest, a);
  EXPECT_LT(max_abs_entry(total - a), 1e-12);
}

TEST(Isotypic, RejectsLabelSetNotClosedUnderConjugation) {
  const Cqms q = fuzzy_torus(3, 1);
  auto chars = torus_characters(q.group(), 3, 2);
  EXPECT_THROW(isotypic_project(q.action(), {chars[1]}, CMatrix::Identity(3, 3)), DomainError);
}

TEST(Ergodicity, ExamplesAreErgodic) {
  EXPECT_TRUE(ergodicity_check(fuzzy_torus(2, 1).action(), fuzzy_torus(2, 1).space()));
  EXPECT_TRUE(ergodicity_check(fuzzy_torus(4, 2).action(), fuzzy_torus(4, 2).space()));
  EXPECT_TRUE(ergodicity_check(commutative_cycle(6).action(), commutative_cycle(6).space()));
  for (int tj = 1; tj <= 8; ++tj) {
    const Cqms q = fuzzy_sphere(tj, {8, 8, 8});
    EXPECT_TRUE(ergodicity_check(q.action(), q.space())) << tj;
  }
}

TEST(Ergodicity, TrivialActionIsNot) {
  SampledGroup g = cyclic_group(3);
  std::vector<CMatrix> us(3, CMatrix::Identity(2, 2));
  const UnitaryAction act(g, us);
  EXPECT_FALSE(ergodicity_check(act));
  EXPECT_EQ(fixed_dimension(act, HermitianSpace::full(2)), 4);
}

TEST(UnitaryAction, CycleSeminormIsDiscreteLipschitzConstant) {
  const int m = 12;
  const Cqms q = commutative_cycle(m);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n01;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> f(m);
    for (double& v : f) v = rep % 2 ? n01(rng) : double(rng() % 2);
    CMatrix a = CMatrix::Zero(m, m);
    for (int i = 0; i < m; ++i) a(i, i) = f[static_cast<size_t>(i)];
    double brute = 0.0;
    for (int i = 0; i < m; ++i)
      for (int k = 1; k < m; ++k)
        brute = std::max(brute, std::abs(f[static_cast<size_t>((i + k) % m)] - f[static_cast<size_t>(i)]) /
                                    (2.0 * M_PI * std::min(k, m - k) / m));
    EXPECT_NEAR(lip_seminorm(q.action(), a), brute, 1e-12 * (1.0 + brute));
  }
}

TEST(UnitaryAction, ApplyPreservesNormAndIdentity) {
  std::mt19937_64 rng(13);
  const Cqms q = fuzzy_sphere(3, {6, 6, 6});
  const CMatrix a = random_hermitian(4, rng);
  for (int x = 0; x < q.group().size(); x += 5) {
    const CMatrix b = q.action().apply(x, a);
    EXPECT_LT(max_abs_entry(b - b.adjoint()), 1e-12);
    EXPECT_NEAR(op_norm(b), op_norm(a), 1e-9);
    EXPECT_LT(max_abs_entry(q.action().apply(x, CMatrix::Identity(4, 4)) - CMatrix::Identity(4, 4)), 1e-12);
  }
  EXPECT_LT(max_abs_entry(q.action().apply(q.group().identity, a) - a), 1e-14);
}

TEST(Isotypic, TrivialCharacterGivesScalarPart) {
  const Cqms q = fuzzy_torus(4, 1);
  std::mt19937_64 rng(14);
  const CMatrix a = random_hermitian(4, rng);
  auto chars = torus_characters(q.group(), 4, 2);
  const CMatrix p = isotypic_project(q.action(), {chars[0]}, a);
  EXPECT_LT(max_abs_entry(p - (a.trace() / 4.0) * CMatrix::Identity(4, 4)), 1e-12);
}
