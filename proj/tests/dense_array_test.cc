#include "attnex/dense_array.hpp"

#include <gtest/gtest.h>

using namespace attnex;

TEST(DenseArray, ShapeDataInvariant) {
  const DenseArray m = DenseArray::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(m.size(), 6u);
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_DOUBLE_EQ(m.at(1, 2), 6.0);
  EXPECT_THROW(DenseArray({2, 2}, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST(DenseArray, ColumnRoundTrip) {
  DenseArray m = DenseArray::matrix(2, 2, {1, 2, 3, 4});
  const DenseArray c1 = m.column(1);
  EXPECT_DOUBLE_EQ(c1[0], 2.0);
  EXPECT_DOUBLE_EQ(c1[1], 4.0);
  m.set_column(0, DenseArray::vector({9, 8}));
  EXPECT_DOUBLE_EQ(m.at(0, 0), 9.0);
  EXPECT_DOUBLE_EQ(m.at(1, 0), 8.0);
}

TEST(DenseArray, Reductions) {
  const DenseArray v = DenseArray::vector({3.0, 4.0});
  EXPECT_DOUBLE_EQ(v.l2_norm(), 5.0);
  EXPECT_DOUBLE_EQ(v.sum(), 7.0);
  EXPECT_DOUBLE_EQ(v.max(), 4.0);
}

TEST(DenseArray, FiniteCheck) {
  DenseArray v = DenseArray::vector({1.0, 2.0});
  EXPECT_TRUE(v.all_finite());
  v[1] = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(v.all_finite());
  EXPECT_THROW(check_finite(v, "test"), std::runtime_error);
}

TEST(DenseArray, IdentityAndScalar) {
  const DenseArray eye = DenseArray::identity(3);
  EXPECT_DOUBLE_EQ(eye.at(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(eye.at(0, 2), 0.0);
  const DenseArray s = DenseArray::scalar(2.5);
  EXPECT_TRUE(s.is_scalar());
  EXPECT_DOUBLE_EQ(s[0], 2.5);
}
