#include <gtest/gtest.h>

#include <set>

#include "insh/design.hpp"

using namespace insh;

namespace {

DesignSpace pk_space() { return DesignSpace::box(15, 0.0, 24.0, true, 0.25); }
DesignSpace lr_space(std::size_t rows = 6) { return DesignSpace::box(4 * rows, -1.0, 1.0); }
DesignSpace death_space(std::size_t n, double lo = 0.1) { return DesignSpace::box(n, lo, 10.0, true); }

}  // namespace

TEST(Satisfies, PkSpacingViolation) {
  std::vector<double> v;
  for (int i = 0; i < 15; ++i) v.push_back(1.0 + 0.1 * i);
  EXPECT_FALSE(satisfies(pk_space(), Design{v}));
  for (int i = 0; i < 15; ++i) v[i] = 1.0 + 0.25 * i;
  EXPECT_TRUE(satisfies(pk_space(), Design{v}));
}

TEST(Satisfies, LogisticInterior) {
  auto s = DesignSpace::box(4, -1.0, 1.0);
  EXPECT_TRUE(satisfies(s, Design{{0, 0, 0, 0}}));
  EXPECT_FALSE(satisfies(s, Design{{0, 0, 1.5, 0}}));
}

TEST(Satisfies, OrderingViolated) {
  EXPECT_FALSE(satisfies(death_space(2), Design{{2.8, 0.9}}));
  EXPECT_TRUE(satisfies(death_space(2), Design{{0.9, 2.8}}));
  EXPECT_FALSE(satisfies(death_space(2), Design{{0.9, 0.9}}));
}

TEST(Satisfies, DimensionMismatchThrows) {
  EXPECT_THROW(satisfies(death_space(2), Design{{1.0}}), InputError);
}

TEST(ConstraintSet, Validation) {
  EXPECT_THROW(DesignSpace(1, ConstraintSet{{2.0}, {1.0}, 0.0, false}), InputError);
  EXPECT_THROW(DesignSpace(2, ConstraintSet{{0, 0}, {1, 1}, 0.1, false}), InputError);
  EXPECT_THROW(DesignSpace(2, ConstraintSet{{0}, {1}, 0.0, false}), InputError);
}

TEST(SampleInitial, PkCountAndFeasibility) {
  Rng rng = make_rng(1);
  auto ds = sample_initial(pk_space(), 1200, 0.0, rng);
  ASSERT_EQ(ds.size(), 1200u);
  for (const auto& d : ds) EXPECT_TRUE(satisfies(pk_space(), d));
}

TEST(SampleInitial, LogisticBoundaryMix) {
  Rng rng = make_rng(2);
  auto space = lr_space();
  auto ds = sample_initial(space, 10000, 0.5, rng);
  ASSERT_EQ(ds.size(), 10000u);
  std::size_t boundary = 0;
  for (const auto& d : ds) {
    EXPECT_TRUE(satisfies(space, d));
    bool all = std::all_of(d.values.begin(), d.values.end(), [](double x) { return x == -1.0 || x == 1.0; });
    boundary += all;
  }
  // Binomial(10000, 0.5): 5 sd = 250.
  EXPECT_NEAR(static_cast<double>(boundary), 5000.0, 250.0);
}

TEST(SampleInitial, PointSpace) {
  Rng rng = make_rng(3);
  DesignSpace s(2, ConstraintSet{{0.5, 2.0}, {0.5, 2.0}, 0.0, false});
  auto ds = sample_initial(s, 1, 0.5, rng);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds[0].values, (std::vector<double>{0.5, 2.0}));
}

TEST(SampleInitial, OrderedBoundaryDesignsStayFeasible) {
  Rng rng = make_rng(4);
  auto s = death_space(3);
  auto ds = sample_initial(s, 500, 1.0, rng);
  ASSERT_EQ(ds.size(), 500u);
  for (const auto& d : ds) EXPECT_TRUE(satisfies(s, d));
}

TEST(SampleInitial, InfeasibleSpaceThrows) {
  Rng rng = make_rng(5);
  auto s = DesignSpace::box(15, 0.0, 3.0, true, 0.25);  // needs 3.5 hours
  EXPECT_THROW(sample_initial(s, 1, 0.0, rng), InfeasibleError);
}

TEST(SampleInitial, UniformOrderedSpaceIsUniform) {
  // Order statistics of the shrunken interval: the first of two sorted
  // uniforms on [0,1] has mean 1/3 (no spacing) and the gap is positive.
  Rng rng = make_rng(6);
  auto s = DesignSpace::box(2, 0.0, 1.0, true);
  auto ds = sample_initial(s, 20000, 0.0, rng);
  double m = 0;
  for (const auto& d : ds) m += d.values[0];
  m /= ds.size();
  EXPECT_NEAR(m, 1.0 / 3.0, 5 * std::sqrt(1.0 / 18.0 / 20000));
}

class PerturbProperty : public ::testing::TestWithParam<int> {};

TEST_P(PerturbProperty, TenThousandDrawsFeasible) {
  Rng rng = make_rng(100 + GetParam());
  DesignSpace space;
  PerturbationKernel kernel;
  Design start;
  switch (GetParam()) {
    case 0:  // death, one time
      space = death_space(1, 0.05);
      kernel = PerturbationKernel::isotropic(KernelKind::TruncatedGaussian, 1, 0.1);
      start = Design{{0.06}};
      break;
    case 1:  // death, two times close together
      space = death_space(2, 0.05);
      kernel = PerturbationKernel::isotropic(KernelKind::TruncatedGaussian, 2, 0.1);
      start = Design{{0.9, 0.95}};
      break;
    case 2: {  // PK
      space = pk_space();
      kernel = PerturbationKernel::isotropic(KernelKind::TruncatedGaussian, 15, 0.2);
      std::vector<double> v{0.2, 0.5, 0.75, 1.2, 4, 4.8, 5.3, 6, 6.4, 18.2, 18.9, 19.7, 20.3, 21.5, 22};
      start = Design{v};
      break;
    }
    default:  // logistic, parent on the boundary
      space = lr_space();
      kernel = PerturbationKernel::isotropic(KernelKind::BoundedUniform, 24, 0.2);
      start = Design{std::vector<double>(24, 1.0)};
      break;
  }
  ASSERT_TRUE(satisfies(space, start));
  for (int i = 0; i < 10000; ++i) {
    auto d = perturb(start, kernel, space.constraints(), rng);
    ASSERT_TRUE(satisfies(space, d));
  }
}

INSTANTIATE_TEST_SUITE_P(Models, PerturbProperty, ::testing::Values(0, 1, 2, 3));

TEST(Perturb, GaussianInteriorMean) {
  Rng rng = make_rng(7);
  auto space = DesignSpace::box(3, 0.0, 10.0);
  Design c{{5.0, 4.0, 6.0}};
  auto k = PerturbationKernel::isotropic(KernelKind::TruncatedGaussian, 3, 0.1);
  std::vector<double> sum(3, 0.0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto d = perturb(c, k, space.constraints(), rng);
    for (int j = 0; j < 3; ++j) sum[j] += d.values[j];
  }
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(sum[j] / n, c.values[j], 5 * 0.1 / std::sqrt(double(n)));
}

TEST(Perturb, TinyUniformIsIdentity) {
  Rng rng = make_rng(8);
  auto space = death_space(2);
  Design c{{1.0, 2.0}, 17};
  auto k = PerturbationKernel::isotropic(KernelKind::BoundedUniform, 2, 1e-12);
  auto d = perturb(c, k, space.constraints(), rng);
  EXPECT_NEAR(d.values[0], 1.0, 1e-11);
  EXPECT_NEAR(d.values[1], 2.0, 1e-11);
  EXPECT_EQ(d.parent, 17u);
}

TEST(Perturb, ExhaustedBudgetCarriesAttempts) {
  // Fifteen times squeezed into the minimum feasible span: a wide kernel
  // essentially never lands back on the one feasible configuration.
  Rng rng = make_rng(9);
  auto space = DesignSpace::box(15, 0.0, 3.5, true, 0.25);
  std::vector<double> v;
  for (int i = 0; i < 15; ++i) v.push_back(0.25 * i);
  auto k = PerturbationKernel::isotropic(KernelKind::TruncatedGaussian, 15, 1.0);
  try {
    perturb(Design{v}, k, space.constraints(), rng, 50);
    FAIL() << "expected PerturbationError";
  } catch (const PerturbationError& e) {
    EXPECT_EQ(e.attempts(), 50u);
  }
}

TEST(Perturb, RejectsBadKernel) {
  Rng rng = make_rng(10);
  auto space = death_space(2);
  EXPECT_THROW(perturb(Design{{1, 2}}, PerturbationKernel{KernelKind::TruncatedGaussian, {0.1}}, space.constraints(), rng),
               InputError);
  EXPECT_THROW(perturb(Design{{1, 2}}, PerturbationKernel{KernelKind::TruncatedGaussian, {0.1, 0.0}},
                       space.constraints(), rng),
               InputError);
}

TEST(EnumerateGrid, DeathOneDimensional) {
  auto g = enumerate_grid(death_space(1), 0.1);
  EXPECT_EQ(g.size(), 100u);  // (10 - 0.1)/0.1 + 1
  EXPECT_DOUBLE_EQ(g.front().values[0], 0.1);
  EXPECT_NEAR(g.back().values[0], 10.0, 1e-9);
}

TEST(EnumerateGrid, DeathTwoDimensionalOrdered) {
  auto s = death_space(2);
  auto g = enumerate_grid(s, 0.1);
  EXPECT_EQ(g.size(), 4950u);  // 100 choose 2
  std::set<std::vector<double>> seen;
  for (const auto& d : g) {
    EXPECT_TRUE(satisfies(s, d));
    EXPECT_LT(d.values[0], d.values[1]);
    EXPECT_TRUE(seen.insert(d.values).second);
  }
}

TEST(EnumerateGrid, ExhaustiveSpacingCheck) {
  // Every lattice triple in [0,2] with gaps >= 0.5, counted independently.
  auto s = DesignSpace::box(3, 0.0, 2.0, true, 0.5);
  auto g = enumerate_grid(s, 0.25);
  std::size_t expected = 0;
  for (int a = 0; a <= 8; ++a)
    for (int b = 0; b <= 8; ++b)
      for (int c = 0; c <= 8; ++c)
        if (b - a >= 2 && c - b >= 2) ++expected;
  EXPECT_EQ(g.size(), expected);
  std::set<std::vector<double>> seen;
  for (const auto& d : g) {
    EXPECT_TRUE(satisfies(s, d));
    EXPECT_TRUE(seen.insert(d.values).second);
  }
}

TEST(EnumerateGrid, DegenerateSpacing) {
  auto g = enumerate_grid(death_space(1), 50.0);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g[0].values[0], 0.1);
}

TEST(EnumerateGrid, CapEnforced) {
  EXPECT_THROW(enumerate_grid(DesignSpace::box(3, 0.0, 10.0), 0.1, 1000), SizeLimitError);
  EXPECT_THROW(enumerate_grid(death_space(1), 0.0), InputError);
}

TEST(KernelKind, RoundTrip) {
  for (auto k : {KernelKind::TruncatedGaussian, KernelKind::BoundedUniform})
    EXPECT_EQ(parse_kernel_kind(to_string(k)), k);
  EXPECT_THROW(parse_kernel_kind("cauchy"), InputError);
}
