#include "attnex/tape.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "attnex/grad_check.hpp"
#include "attnex/rng.hpp"
#include "test_util.hpp"

using namespace attnex;
using attnex::testing::random_matrix;
using attnex::testing::random_vector;

TEST(TapeForward, MatmulHandArithmetic) {
  Tape tape;
  const NodeId a = tape.leaf(DenseArray::matrix(2, 2, {1, 2, 3, 4}));
  const NodeId b = tape.leaf(DenseArray::vector({1, 1}));
  const DenseArray& out = tape.value(tape.matmul(a, b));
  EXPECT_DOUBLE_EQ(out[0], 3.0);
  EXPECT_DOUBLE_EQ(out[1], 7.0);
}

TEST(TapeForward, TanhAtZero) {
  Tape tape;
  const NodeId x = tape.leaf(DenseArray::vector({0.0}));
  EXPECT_DOUBLE_EQ(tape.value(tape.tanh(x))[0], 0.0);
}

TEST(TapeForward, L2NormTriangle) {
  Tape tape;
  const NodeId x = tape.leaf(DenseArray::vector({3.0, 4.0}));
  EXPECT_DOUBLE_EQ(tape.value(tape.l2norm(x))[0], 5.0);
}

TEST(TapeForward, GenericApplyMirrorsTypedOps) {
  Tape tape;
  const NodeId a = tape.leaf(DenseArray::matrix(2, 2, {1, 2, 3, 4}));
  const NodeId b = tape.leaf(DenseArray::vector({1, 1}));
  const NodeId ids[] = {a, b};
  const DenseArray& out = tape.value(tape.apply(OpKind::MatMul, ids));
  EXPECT_DOUBLE_EQ(out[0], 3.0);
  EXPECT_DOUBLE_EQ(out[1], 7.0);
  const NodeId one[] = {b};
  EXPECT_DOUBLE_EQ(tape.value(tape.apply(OpKind::Sum, one))[0], 2.0);
}

TEST(TapeForward, ShapeMismatchThrows) {
  Tape tape;
  const NodeId a = tape.leaf(DenseArray::vector({1, 2}));
  const NodeId b = tape.leaf(DenseArray::vector({1, 2, 3}));
  EXPECT_THROW(tape.add(a, b), std::invalid_argument);
  const NodeId m = tape.leaf(DenseArray::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  EXPECT_THROW(tape.matmul(m, a), std::invalid_argument);
}

TEST(TapeForward, NonFiniteResultThrows) {
  Tape tape;
  const NodeId x = tape.leaf(DenseArray::vector({1000.0}));
  EXPECT_THROW(tape.exp(x), std::runtime_error);
  const NodeId z = tape.leaf(DenseArray::vector({0.0}));
  EXPECT_THROW(tape.log(z), std::runtime_error);
}

TEST(TapeBackward, SquareSum) {
  Tape tape;
  const NodeId x = tape.leaf(DenseArray::vector({1.0, 2.0}));
  const NodeId root = tape.sum(tape.mul(x, x));
  tape.backward(root);
  EXPECT_DOUBLE_EQ(tape.grad(x)[0], 2.0);
  EXPECT_DOUBLE_EQ(tape.grad(x)[1], 4.0);
}

TEST(TapeBackward, SigmoidOfDotAtZeroWeights) {
  Tape tape;
  const NodeId w = tape.leaf(DenseArray::vector({0.0, 0.0}));
  const NodeId x = tape.leaf(DenseArray::vector({0.3, -0.7}));
  const NodeId root = tape.sigmoid(tape.sum(tape.mul(w, x)));
  tape.backward(root);
  EXPECT_NEAR(tape.grad(w)[0], 0.25 * 0.3, 1e-15);
  EXPECT_NEAR(tape.grad(w)[1], 0.25 * -0.7, 1e-15);
}

TEST(TapeBackward, RootMustBeScalar) {
  Tape tape;
  const NodeId x = tape.leaf(DenseArray::vector({1.0, 2.0}));
  EXPECT_THROW(tape.backward(x), std::invalid_argument);
}

TEST(TapeBackward, UntouchedLeafGetsZeroGradient) {
  Tape tape;
  const NodeId x = tape.leaf(DenseArray::vector({1.0, 2.0}));
  const NodeId unused = tape.leaf(DenseArray::vector({5.0}));
  const NodeId root = tape.sum(x);
  tape.backward(root);
  EXPECT_DOUBLE_EQ(tape.grad(unused)[0], 0.0);
}

TEST(TapeBackward, LinearityAcrossSharedLeaves) {
  Rng rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    const DenseArray x0 = random_vector(rng, 4);
    const double a = rng.normal(), b = rng.normal();

    auto f = [](Tape& t, NodeId x) { return t.sum(t.mul(x, x)); };
    auto g = [](Tape& t, NodeId x) { return t.l2norm(t.tanh(x)); };

    Tape t1;
    const NodeId x1 = t1.leaf(x0);
    const NodeId combined =
        t1.add(t1.scale(f(t1, x1), a), t1.scale(g(t1, x1), b));
    t1.backward(combined);

    Tape t2;
    const NodeId x2 = t2.leaf(x0);
    t2.backward(f(t2, x2));
    const DenseArray gf = t2.grad(x2);
    Tape t3;
    const NodeId x3 = t3.leaf(x0);
    t3.backward(g(t3, x3));
    const DenseArray gg = t3.grad(x3);

    for (std::size_t i = 0; i < x0.size(); ++i) {
      EXPECT_NEAR(t1.grad(x1)[i], a * gf[i] + b * gg[i], 1e-12);
    }
  }
}

TEST(TapeBackward, RepeatedBackwardIsIdempotent) {
  Tape tape;
  const NodeId x = tape.leaf(DenseArray::vector({1.0, 2.0}));
  const NodeId root = tape.sum(tape.mul(x, x));
  tape.backward(root);
  const DenseArray first = tape.grad(x);
  tape.backward(root);
  EXPECT_EQ(first, tape.grad(x));
}

TEST(TapeBackward, DeterministicReplay) {
  Rng rng(32);
  const DenseArray w = random_matrix(rng, 3, 3);
  const DenseArray x = random_vector(rng, 3);
  auto run = [&]() {
    Tape tape;
    const NodeId wid = tape.leaf(w);
    const NodeId xid = tape.leaf(x);
    const NodeId root = tape.l2norm(tape.tanh(tape.matmul(wid, xid)));
    tape.backward(root);
    return std::pair<DenseArray, DenseArray>(tape.value(root), tape.grad(wid));
  };
  const auto [v1, g1] = run();
  const auto [v2, g2] = run();
  EXPECT_EQ(v1, v2);
  EXPECT_EQ(g1, g2);
}

// Every primitive against central finite differences at smooth points.
namespace {

double primitive_check(const TracedScalarFn& f, const DenseArray& at,
                       double h = 1e-5) {
  return grad_check(f, at, h);
}

}  // namespace

TEST(PrimitiveGradients, Elementwise) {
  Rng rng(33);
  const DenseArray at = random_vector(rng, 5, 0.8);
  EXPECT_LT(primitive_check(
                [](Tape& t, NodeId x) { return t.sum(t.tanh(x)); }, at),
            1e-6);
  EXPECT_LT(primitive_check(
                [](Tape& t, NodeId x) { return t.sum(t.sigmoid(x)); }, at),
            1e-6);
  EXPECT_LT(primitive_check(
                [](Tape& t, NodeId x) { return t.sum(t.exp(x)); }, at),
            1e-6);
  DenseArray positive = at;
  for (std::size_t i = 0; i < positive.size(); ++i) {
    positive[i] = std::abs(positive[i]) + 0.5;
  }
  EXPECT_LT(primitive_check(
                [](Tape& t, NodeId x) { return t.sum(t.log(x)); }, positive),
            1e-6);
  DenseArray away_from_kink = at;
  for (std::size_t i = 0; i < away_from_kink.size(); ++i) {
    if (std::abs(away_from_kink[i]) < 0.1) away_from_kink[i] = 0.3;
  }
  EXPECT_LT(primitive_check(
                [](Tape& t, NodeId x) { return t.sum(t.relu(x)); },
                away_from_kink),
            1e-6);
  EXPECT_LT(primitive_check(
                [](Tape& t, NodeId x) { return t.scale(t.sum(x), 2.5); }, at),
            1e-6);
}

TEST(PrimitiveGradients, MatmulMulSliceConcat) {
  Rng rng(34);
  const DenseArray at = random_vector(rng, 6);
  EXPECT_LT(primitive_check(
                [](Tape& t, NodeId x) {
                  const NodeId m = t.leaf(DenseArray::matrix(
                      2, 6, {1, -2, 0.5, 3, 1, -1, 2, 0.3, -4, 1, 0.7, 2}));
                  return t.l2norm(t.matmul(m, x));
                },
                at),
            1e-6);
  EXPECT_LT(primitive_check(
                [](Tape& t, NodeId x) {
                  const NodeId a = t.slice(x, 0, 3);
                  const NodeId b = t.slice(x, 3, 6);
                  return t.sum(t.mul(a, b));
                },
                at),
            1e-6);
  EXPECT_LT(primitive_check(
                [](Tape& t, NodeId x) {
                  const NodeId a = t.slice(x, 0, 2);
                  const NodeId b = t.slice(x, 2, 6);
                  return t.l2norm(t.concat(t.tanh(a), b));
                },
                at),
            1e-6);
}

TEST(PrimitiveGradients, MatrixOps) {
  Rng rng(35);
  const DenseArray at = random_matrix(rng, 3, 4);
  auto as_matrix = [](Tape& t, NodeId x) {
    return t.reshape(x, {3, 4});
  };
  EXPECT_LT(primitive_check(
                [&](Tape& t, NodeId x) {
                  const NodeId m = as_matrix(t, x);
                  return t.sum(t.tanh(t.transpose(m)));
                },
                DenseArray::vector({at.data().begin(), at.data().end()})),
            1e-6);
  EXPECT_LT(primitive_check(
                [&](Tape& t, NodeId x) {
                  const NodeId m = as_matrix(t, x);
                  const NodeId b = t.leaf(DenseArray::vector({0.5, -1, 2}));
                  return t.l2norm(t.column(t.colwise_add(m, b), 1));
                },
                DenseArray::vector({at.data().begin(), at.data().end()})),
            1e-6);
  EXPECT_LT(primitive_check(
                [&](Tape& t, NodeId x) {
                  const NodeId m = as_matrix(t, x);
                  return t.sum(t.mul(t.softmax_cols(m), t.softmax_cols(m)));
                },
                DenseArray::vector({at.data().begin(), at.data().end()})),
            1e-6);
  EXPECT_LT(primitive_check(
                [&](Tape& t, NodeId x) {
                  const NodeId m = as_matrix(t, x);
                  const NodeId gamma =
                      t.leaf(DenseArray::vector({1.2, 0.8, 1.0}));
                  const NodeId beta =
                      t.leaf(DenseArray::vector({0.1, -0.2, 0.0}));
                  const NodeId normed = t.layer_norm_cols(m, gamma, beta);
                  return t.l2norm(t.column(t.tanh(normed), 2));
                },
                DenseArray::vector({at.data().begin(), at.data().end()})),
            1e-5);
}

TEST(PrimitiveGradients, GatherAndStack) {
  Rng rng(36);
  const DenseArray at = random_matrix(rng, 3, 5);
  EXPECT_LT(primitive_check(
                [](Tape& t, NodeId x) {
                  const NodeId m = t.reshape(x, {3, 5});
                  // repeated index exercises gradient accumulation
                  const NodeId g = t.gather_cols(m, {1, 4, 1});
                  return t.l2norm(t.tanh(g));
                },
                DenseArray::vector({at.data().begin(), at.data().end()})),
            1e-6);
  EXPECT_LT(primitive_check(
                [](Tape& t, NodeId x) {
                  const NodeId a = t.tanh(t.slice(x, 0, 5));
                  const NodeId b = t.slice(x, 5, 10);
                  const NodeId cols[] = {a, b, a};
                  return t.l2norm(t.stack_cols(cols));
                },
                random_vector(rng, 10)),
            1e-6);
}

TEST(PrimitiveGradients, LossAndDivergenceOps) {
  Rng rng(37);
  EXPECT_LT(primitive_check(
                [](Tape& t, NodeId x) {
                  return t.bce_with_logits(t.sum(x), 1.0);
                },
                random_vector(rng, 3)),
            1e-6);
  EXPECT_LT(primitive_check(
                [](Tape& t, NodeId x) {
                  return t.abs_diff(t.sum(x), 0.25);
                },
                DenseArray::vector({0.4, 0.7, -0.2})),
            1e-6);
  // JSD against a fixed reference, through a softmax so p stays interior.
  const DenseArray ref = softmax(random_vector(rng, 4)).p;
  EXPECT_LT(primitive_check(
                [&](Tape& t, NodeId x) {
                  const NodeId p =
                      t.projection(x, ProjectionKind::softmax());
                  return t.jsd_vs_reference(p, ref);
                },
                random_vector(rng, 4)),
            1e-5);
}

TEST(PrimitiveGradients, ProjectionThroughTape) {
  Rng rng(38);
  const ProjectionKind kinds[] = {ProjectionKind::softmax(),
                                  ProjectionKind::sparsemax(),
                                  ProjectionKind::sparsegen(0.5)};
  for (const ProjectionKind& kind : kinds) {
    int done = 0;
    while (done < 10) {
      const DenseArray z = random_vector(rng, 4, 1.0);
      if (attnex::testing::support_margin(kind, z) < 1e-3) continue;
      ++done;
      const DenseArray weights = random_vector(rng, 4);
      EXPECT_LT(primitive_check(
                    [&](Tape& t, NodeId x) {
                      const NodeId p = t.projection(x, kind);
                      const NodeId w = t.leaf(weights);
                      return t.sum(t.mul(p, w));
                    },
                    z),
                1e-5)
          << kind.name();
    }
  }
}

TEST(PrimitiveGradients, RandomTanhNetworkMatchesFiniteDifferences) {
  Rng rng(39);
  const DenseArray w1 = random_matrix(rng, 4, 5, 0.7);
  const DenseArray w2 = random_matrix(rng, 3, 4, 0.7);
  const DenseArray w3 = random_matrix(rng, 1, 3, 0.7);
  const DenseArray at = random_vector(rng, 5);
  const double err = grad_check(
      [&](Tape& t, NodeId x) {
        const NodeId h1 = t.tanh(t.matmul(t.leaf(w1), x));
        const NodeId h2 = t.tanh(t.matmul(t.leaf(w2), h1));
        return t.sum(t.matmul(t.leaf(w3), h2));
      },
      at, 1e-5);
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, SumHasExactGradient) {
  EXPECT_LT(grad_check([](Tape& t, NodeId x) { return t.sum(x); },
                       DenseArray::vector({1.0, -2.0, 3.5})),
            1e-10);
}

TEST(GradCheck, L2NormGradientIsUnitDirection) {
  Tape tape;
  const NodeId x = tape.leaf(DenseArray::vector({3.0, 4.0}));
  const NodeId root = tape.l2norm(x);
  tape.backward(root);
  EXPECT_NEAR(tape.grad(x)[0], 0.6, 1e-12);
  EXPECT_NEAR(tape.grad(x)[1], 0.8, 1e-12);
}

TEST(GradCheck, NonFiniteForwardValueThrows) {
  EXPECT_THROW(grad_check(
                   [](Tape& t, NodeId x) {
                     return t.sum(t.exp(t.scale(x, 1000.0)));
                   },
                   DenseArray::vector({10.0})),
               std::runtime_error);
}

TEST(GradCheck, L2NormAtZeroVectorThrowsOnBackward) {
  Tape tape;
  const NodeId x = tape.leaf(DenseArray::vector({0.0, 0.0}));
  const NodeId root = tape.l2norm(x);
  EXPECT_THROW(tape.backward(root), std::runtime_error);
}
