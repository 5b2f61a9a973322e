#include "attnex/projections.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "attnex/rng.hpp"
#include "attnex/simplex_oracle.hpp"
#include "test_util.hpp"

using namespace attnex;
using attnex::testing::random_vector;

namespace {

void expect_simplex(const SimplexPoint& p, double tol = 1e-12) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_GE(p.p[i], 0.0);
    sum += p.p[i];
  }
  EXPECT_NEAR(sum, 1.0, tol);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(p.p[i] > 0.0,
              std::find(p.support.begin(), p.support.end(), i) !=
                  p.support.end());
  }
}

}  // namespace

TEST(Softmax, SymmetricPair) {
  const SimplexPoint p = softmax(DenseArray::vector({0.0, 0.0}));
  EXPECT_DOUBLE_EQ(p.p[0], 0.5);
  EXPECT_DOUBLE_EQ(p.p[1], 0.5);
  EXPECT_TRUE(p.full_support());
}

TEST(Softmax, ExpRatios) {
  const SimplexPoint p =
      softmax(DenseArray::vector({std::log(1.0), std::log(3.0)}));
  EXPECT_NEAR(p.p[0], 0.25, 1e-15);
  EXPECT_NEAR(p.p[1], 0.75, 1e-15);
}

TEST(Softmax, ShiftInvariance) {
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const DenseArray z = random_vector(rng, 2 + rng.below(7), 3.0);
    const double c = rng.normal() * 10.0;
    DenseArray shifted = z;
    for (std::size_t i = 0; i < z.size(); ++i) shifted[i] += c;
    const SimplexPoint a = softmax(z);
    const SimplexPoint b = softmax(shifted);
    for (std::size_t i = 0; i < z.size(); ++i) {
      EXPECT_NEAR(a.p[i], b.p[i], 1e-12);
    }
  }
}

TEST(Softmax, StrictlyPositiveAndStableAtExtremes) {
  const SimplexPoint p = softmax(DenseArray::vector({1000.0, 0.0, -1000.0}));
  expect_simplex(p, 1e-12);
  EXPECT_TRUE(p.full_support() || p.p[0] > 0.999999);
}

TEST(Softmax, EmptyInputThrows) {
  EXPECT_THROW(softmax(DenseArray::vector({})), std::invalid_argument);
}

TEST(Sparsemax, ThresholdExamples) {
  const SimplexPoint a = sparsemax(DenseArray::vector({2.0, 0.0}));
  EXPECT_DOUBLE_EQ(a.p[0], 1.0);
  EXPECT_DOUBLE_EQ(a.p[1], 0.0);
  EXPECT_EQ(a.support, (std::vector<std::size_t>{0}));

  const SimplexPoint b = sparsemax(DenseArray::vector({0.5, 0.2, -0.1}));
  EXPECT_NEAR(b.p[0], 0.5 + 0.4 / 3.0, 1e-15);
  EXPECT_NEAR(b.p[1], 0.2 + 0.4 / 3.0, 1e-15);
  EXPECT_NEAR(b.p[2], -0.1 + 0.4 / 3.0, 1e-15);
}

TEST(Sparsemax, IdentityOnSimplexPoints) {
  Rng rng(12);
  for (int rep = 0; rep < 50; ++rep) {
    const SimplexPoint q = softmax(random_vector(rng, 2 + rng.below(6), 2.0));
    const SimplexPoint back = sparsemax(q.p);
    for (std::size_t i = 0; i < q.size(); ++i) {
      EXPECT_NEAR(back.p[i], q.p[i], 1e-12);
    }
  }
}

TEST(Sparsemax, ShiftInvariance) {
  Rng rng(13);
  for (int rep = 0; rep < 50; ++rep) {
    const DenseArray z = random_vector(rng, 2 + rng.below(7), 2.0);
    const double c = rng.normal() * 5.0;
    DenseArray shifted = z;
    for (std::size_t i = 0; i < z.size(); ++i) shifted[i] += c;
    const SimplexPoint a = sparsemax(z);
    const SimplexPoint b = sparsemax(shifted);
    for (std::size_t i = 0; i < z.size(); ++i) {
      EXPECT_NEAR(a.p[i], b.p[i], 1e-10);
    }
  }
}

TEST(Sparsegen, ZeroLambdaIsSparsemax) {
  Rng rng(14);
  for (int rep = 0; rep < 100; ++rep) {
    const DenseArray z = random_vector(rng, 2 + rng.below(7), 2.0);
    const SimplexPoint a = sparsegen(z, 0.0);
    const SimplexPoint b = sparsemax(z);
    for (std::size_t i = 0; i < z.size(); ++i) {
      EXPECT_NEAR(a.p[i], b.p[i], 1e-12);
    }
  }
}

TEST(Sparsegen, ScaledExample) {
  const SimplexPoint p = sparsegen(DenseArray::vector({0.5, 0.2, -0.1}), 0.5);
  EXPECT_NEAR(p.p[0], 0.8, 1e-12);
  EXPECT_NEAR(p.p[1], 0.2, 1e-12);
  EXPECT_DOUBLE_EQ(p.p[2], 0.0);
}

TEST(Sparsegen, SupportSizeNonIncreasingInLambda) {
  Rng rng(15);
  const double lambdas[] = {-10.0, -1.0, 0.0, 0.5, 0.9};
  for (int rep = 0; rep < 50; ++rep) {
    const DenseArray z = random_vector(rng, 2 + rng.below(7), 1.0);
    std::size_t previous = z.size() + 1;
    for (double lambda : lambdas) {
      const std::size_t size = sparsegen(z, lambda).support.size();
      EXPECT_LE(size, previous) << "lambda " << lambda;
      previous = size;
    }
  }
}

TEST(Sparsegen, LambdaAtOrAboveOneRejected) {
  EXPECT_THROW(sparsegen(DenseArray::vector({1.0, 2.0}), 1.0),
               std::invalid_argument);
  EXPECT_THROW(ProjectionKind::sparsegen(1.5), std::invalid_argument);
}

TEST(AllProjections, PermutationEquivariance) {
  Rng rng(16);
  const ProjectionKind kinds[] = {ProjectionKind::softmax(),
                                  ProjectionKind::sparsemax(),
                                  ProjectionKind::sparsegen(0.5),
                                  ProjectionKind::sparsegen(-2.0)};
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t n = 3 + rng.below(5);
    const DenseArray z = random_vector(rng, n, 2.0);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    DenseArray pz({n});
    for (std::size_t i = 0; i < n; ++i) pz[i] = z[perm[i]];
    for (const ProjectionKind& kind : kinds) {
      const SimplexPoint direct = project(kind, pz);
      const SimplexPoint reference = project(kind, z);
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_NEAR(direct.p[i], reference.p[perm[i]], 1e-12);
      }
    }
  }
}

TEST(AllProjections, OutputsAreValidSimplexPoints) {
  Rng rng(17);
  const ProjectionKind kinds[] = {ProjectionKind::softmax(),
                                  ProjectionKind::sparsemax(),
                                  ProjectionKind::sparsegen(0.9),
                                  ProjectionKind::sparsegen(-5.0)};
  for (int rep = 0; rep < 100; ++rep) {
    const DenseArray z = random_vector(rng, 2 + rng.below(7), 5.0);
    for (const ProjectionKind& kind : kinds) {
      expect_simplex(project(kind, z));
    }
  }
}

TEST(QpOracle, MatchesSparsemaxOnRandomInputs) {
  Rng rng(18);
  for (int rep = 0; rep < 200; ++rep) {
    const DenseArray z = random_vector(rng, 2 + rng.below(7), 1.0);
    const SimplexPoint fast = sparsemax(z);
    const SimplexPoint exact = simplex_qp_oracle(z, 0.0);
    for (std::size_t i = 0; i < z.size(); ++i) {
      EXPECT_NEAR(fast.p[i], exact.p[i], 1e-8);
    }
  }
}

TEST(QpOracle, MatchesSparsegenAcrossLambdas) {
  Rng rng(19);
  for (double lambda : {-2.0, 0.0, 0.5}) {
    for (int rep = 0; rep < 100; ++rep) {
      const DenseArray z = random_vector(rng, 2 + rng.below(7), 1.0);
      const SimplexPoint fast = sparsegen(z, lambda);
      const SimplexPoint exact = simplex_qp_oracle(z, lambda);
      for (std::size_t i = 0; i < z.size(); ++i) {
        EXPECT_NEAR(fast.p[i], exact.p[i], 1e-8);
      }
    }
  }
}

TEST(QpOracle, KnownPoint) {
  const SimplexPoint p = simplex_qp_oracle(DenseArray::vector({2.0, 0.0}), 0.0);
  EXPECT_NEAR(p.p[0], 1.0, 1e-12);
  EXPECT_NEAR(p.p[1], 0.0, 1e-12);
}

TEST(QpOracle, RejectsLargeInputs) {
  EXPECT_THROW(simplex_qp_oracle(DenseArray({13}), 0.0),
               std::invalid_argument);
}

TEST(ProjectionVjp, SoftmaxClosedForm) {
  const SimplexPoint p = make_simplex_point(DenseArray::vector({0.5, 0.5}));
  const DenseArray v = DenseArray::vector({1.0, 0.0});
  const DenseArray out = projection_vjp(ProjectionKind::softmax(), p, v);
  EXPECT_NEAR(out[0], 0.25, 1e-15);
  EXPECT_NEAR(out[1], -0.25, 1e-15);
}

TEST(ProjectionVjp, SparsemaxMeanCentersOnSupport) {
  const SimplexPoint p =
      make_simplex_point(DenseArray::vector({0.6, 0.4, 0.0}));
  const DenseArray v = DenseArray::vector({1.0, 0.0, 5.0});
  const DenseArray out = projection_vjp(ProjectionKind::sparsemax(), p, v);
  EXPECT_NEAR(out[0], 0.5, 1e-15);
  EXPECT_NEAR(out[1], -0.5, 1e-15);
  EXPECT_DOUBLE_EQ(out[2], 0.0);
}

TEST(ProjectionVjp, MatchesFiniteDifferencesAtInteriorPoints) {
  Rng rng(20);
  const ProjectionKind kinds[] = {ProjectionKind::softmax(),
                                  ProjectionKind::sparsemax(),
                                  ProjectionKind::sparsegen(0.5),
                                  ProjectionKind::sparsegen(-2.0)};
  const double h = 1e-6;
  for (const ProjectionKind& kind : kinds) {
    int done = 0;
    while (done < 30) {
      const std::size_t n = 3 + rng.below(4);
      const DenseArray z = random_vector(rng, n, 1.0);
      if (attnex::testing::support_margin(kind, z) < 1e-3) continue;
      ++done;
      const SimplexPoint p = project(kind, z);
      const DenseArray v = random_vector(rng, n, 1.0);
      const DenseArray analytic = projection_vjp(kind, p, v, z);

      for (std::size_t j = 0; j < n; ++j) {
        DenseArray up = z, down = z;
        up[j] += h;
        down[j] -= h;
        const SimplexPoint pu = project(kind, up);
        const SimplexPoint pd = project(kind, down);
        double fd = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          fd += v[i] * (pu.p[i] - pd.p[i]) / (2.0 * h);
        }
        EXPECT_NEAR(analytic[j], fd,
                    1e-4 * (std::abs(analytic[j]) + 1e-3))
            << kind.name() << " coord " << j;
      }
    }
  }
}

TEST(ProjectionVjp, OrthogonalToOnes) {
  Rng rng(21);
  const ProjectionKind kinds[] = {ProjectionKind::softmax(),
                                  ProjectionKind::sparsemax(),
                                  ProjectionKind::sparsegen(0.7)};
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng.below(7);
    const DenseArray z = random_vector(rng, n, 2.0);
    const DenseArray v = random_vector(rng, n, 2.0);
    for (const ProjectionKind& kind : kinds) {
      const DenseArray out = projection_vjp(kind, project(kind, z), v, z);
      EXPECT_NEAR(out.sum(), 0.0, 1e-10);
    }
  }
}

TEST(ProjectionVjp, UpstreamLengthMismatch) {
  const SimplexPoint p = softmax(DenseArray::vector({1.0, 2.0}));
  EXPECT_THROW(projection_vjp(ProjectionKind::softmax(), p,
                              DenseArray::vector({1.0, 2.0, 3.0})),
               std::invalid_argument);
}
