#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "wsn/nn/layers.hpp"

using namespace wsn::nn;

namespace {

ConvKernels<double> random_kernels(int size, int in, int out, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  ConvKernels<double> k(size, in, out);
  for (Eigen::Index i = 0; i < k.weights.size(); ++i) k.weights.data()[i] = u(rng);
  for (Eigen::Index i = 0; i < k.bias.size(); ++i) k.bias(i) = u(rng);
  return k;
}

double max_rel_diff(const Matrix<double>& a, const Matrix<double>& b) {
  return ((a - b).array().abs() / b.array().abs().max(1.0)).maxCoeff();
}

}  // namespace

TEST(Conv2dSame, ZeroKernelsGiveZeros) {
  std::mt19937_64 rng(1);
  const auto in = oracle::random_tensor(16, 16, 1, rng);
  const ConvKernels<double> k(3, 1, 8);
  EXPECT_TRUE(conv2d_same(in, k).data.isZero(0.0));
}

TEST(Conv2dSame, CenterTapIsIdentity) {
  std::mt19937_64 rng(2);
  const auto in = oracle::random_tensor(16, 16, 1, rng);
  for (int size : {3, 5}) {
    ConvKernels<double> k(size, 1, 1);
    k.weights((size / 2) * size + size / 2, 0) = 1.0;
    const auto out = conv2d_same(in, k);
    EXPECT_EQ(out.data, in.data);
  }
}

TEST(Conv2dSame, MatchesNestedLoopOracle) {
  std::mt19937_64 rng(3);
  const auto in = oracle::random_tensor(16, 16, 1, rng);
  const auto k = random_kernels(3, 1, 8, rng);
  const auto got = conv2d_same(in, k);
  const auto want = oracle::conv(in, k);
  EXPECT_EQ(got.height, 16);
  EXPECT_EQ(got.width, 16);
  EXPECT_EQ(got.channels(), 8);
  EXPECT_LE(max_rel_diff(got.data, want.data), 1e-12);
}

TEST(Conv2dSame, PreservesSpatialSizeForOddKernels) {
  std::mt19937_64 rng(4);
  for (int size : {1, 3, 5, 7})
    for (int side : {4, 8, 16}) {
      const auto in = oracle::random_tensor(side, side, 2, rng);
      const auto out = conv2d_same(in, random_kernels(size, 2, 3, rng));
      EXPECT_EQ(out.height, side);
      EXPECT_EQ(out.width, side);
    }
}

TEST(Conv2dSame, ShapeErrors) {
  std::mt19937_64 rng(5);
  const auto in = oracle::random_tensor(8, 8, 2, rng);
  EXPECT_THROW(conv2d_same(in, ConvKernels<double>(3, 1, 4)), wsn::ShapeError);
  EXPECT_THROW(conv2d_same(in, ConvKernels<double>(4, 2, 4)), wsn::ShapeError);
}

TEST(Col2Im, IsAdjointOfIm2Col) {
  // <im2col(x), y> == <x, col2im(y)> for random x, y.
  std::mt19937_64 rng(6);
  const auto x = oracle::random_tensor(8, 8, 3, rng, -1, 1);
  const auto cols = im2col_same(x, 5);
  Matrix<double> y = Matrix<double>::Random(cols.rows(), cols.cols());
  const double lhs = (cols.array() * y.array()).sum();
  const double rhs = (x.data.array() * col2im_same(y, 8, 8, 3, 5).data.array()).sum();
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(MaxPool2, BlockMax) {
  Tensor3<double> in(2, 2, 1);
  in(0, 0, 0) = 1;
  in(0, 1, 0) = 2;
  in(1, 0, 0) = 3;
  in(1, 1, 0) = 4;
  const auto r = maxpool2(in);
  EXPECT_EQ(r.output(0, 0, 0), 4.0);
  EXPECT_EQ(r.argmax(0, 0), 3);
}

TEST(MaxPool2, ConstantInput) {
  Tensor3<double> in(8, 8, 3);
  in.data.setConstant(0.25);
  EXPECT_TRUE((maxpool2(in).output.data.array() == 0.25).all());
}

TEST(MaxPool2, MatchesOracleExactly) {
  std::mt19937_64 rng(7);
  const auto in = oracle::random_tensor(16, 16, 8, rng, -1, 1);
  const auto r = maxpool2(in);
  EXPECT_EQ(r.output.data, oracle::maxpool(in).data);
  EXPECT_EQ(r.output.height, 8);
}

TEST(MaxPool2, OddDimensionsRejected) {
  EXPECT_THROW(maxpool2(Tensor3<double>(5, 4, 1)), wsn::ShapeError);
}

TEST(MaxPool2, BackwardRoutesToArgmax) {
  std::mt19937_64 rng(8);
  const auto in = oracle::random_tensor(4, 4, 2, rng);
  const auto r = maxpool2(in);
  Tensor3<double> g(2, 2, 2);
  g.data.setOnes();
  const auto back = maxpool2_backward(g, r.argmax, 4, 4);
  EXPECT_EQ(back.data.sum(), 8.0);
  for (int c = 0; c < 2; ++c)
    for (Eigen::Index o = 0; o < 4; ++o) EXPECT_EQ(back.data(r.argmax(o, c), c), 1.0);
}

TEST(Dense, IdentityAndBias) {
  DenseLayer<double> id(4, 4);
  id.weights.setIdentity();
  Vector<double> x(4);
  x << 1, -2, 3, 0.5;
  EXPECT_EQ(dense(x, id), x);

  DenseLayer<double> zero(4, 3);
  zero.bias << 7, 8, 9;
  EXPECT_EQ(dense(x, zero), zero.bias);
  EXPECT_THROW(dense(Vector<double>(Vector<double>::Zero(5)), zero), wsn::ShapeError);
}

TEST(Dense, MatchesOracle) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  DenseLayer<double> layer(256, 64);
  for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = u(rng);
  for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = u(rng);
  Vector<double> x(256);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = u(rng);
  const auto got = dense(x, layer);
  const auto want = oracle::dense(std::span<const double>(x.data(), 256), layer);
  for (int i = 0; i < 64; ++i) EXPECT_NEAR(got(i), want[static_cast<std::size_t>(i)], 1e-12 * std::max(1.0, std::abs(want[static_cast<std::size_t>(i)])));
}

TEST(Softmax, PositiveAndNormalizedForExtremeLogits) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-800, 800);
  for (int i = 0; i < 1000; ++i) {
    Vector<double> z(2);
    z << u(rng), u(rng);
    const auto p = softmax(z);
    EXPECT_GE(p.minCoeff(), 0.0);
    EXPECT_NEAR(p.sum(), 1.0, 1e-9);
  }
  Vector<double> z(2);
  z << 1.0, 1.0;
  EXPECT_EQ(softmax(z)(0), 0.5);
}
