#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "wsn/nn/model.hpp"

using namespace wsn;
using namespace wsn::nn;

namespace {

GrayImage random_image(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> px(0, 255);
  GrayImage im;
  for (int r = 0; r < kImageSide; ++r)
    for (int c = 0; c < kImageSide; ++c) im.pixels(r, c) = static_cast<std::uint8_t>(px(rng));
  return im;
}

const ModelConfig kPresets[] = {ModelConfig::from_preset(Preset::M1), ModelConfig::from_preset(Preset::M2),
                                ModelConfig::from_preset(Preset::M3)};

}  // namespace

TEST(ModelConfig, Presets) {
  EXPECT_EQ(kPresets[0].c2_size, 3);
  EXPECT_EQ(kPresets[0].f1_width, 64);
  EXPECT_EQ(kPresets[1].c2_size, 5);
  EXPECT_EQ(kPresets[1].f1_width, 64);
  EXPECT_EQ(kPresets[2].c2_size, 5);
  EXPECT_EQ(kPresets[2].f1_width, 128);
  EXPECT_EQ(ModelConfig::parse("M3").name(), "M3");
  EXPECT_THROW(ModelConfig::parse("M4"), std::invalid_argument);
}

TEST(ModelParams, ParameterCountsAreFixed) {
  EXPECT_EQ(ModelParams<double>::zeros(kPresets[0]).parameter_count(), 17826u);
  EXPECT_EQ(ModelParams<double>::zeros(kPresets[1]).parameter_count(), 19874u);
  EXPECT_EQ(ModelParams<double>::zeros(kPresets[2]).parameter_count(), 36450u);
  EXPECT_EQ(ModelParams<double>::zeros(kPresets[2]).fc1.outputs(),
            2 * ModelParams<double>::zeros(kPresets[0]).fc1.outputs());
}

TEST(ModelParams, InitBoundsAndZeroBias) {
  const auto p = ModelParams<double>::init(kPresets[1], 5);
  EXPECT_LE(p.conv1.weights.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 9));
  EXPECT_LE(p.conv2.weights.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 200));
  EXPECT_LE(p.fc1.weights.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 256));
  EXPECT_TRUE(p.fc1.bias.isZero(0.0));
  const auto q = ModelParams<double>::init(kPresets[1], 5);
  EXPECT_EQ(p.fc1.weights, q.fc1.weights);
}

TEST(Forward, ZeroParamsGiveEvenOdds) {
  std::mt19937_64 rng(1);
  for (const auto& cfg : kPresets) {
    const auto p = forward(cfg, ModelParams<double>::zeros(cfg), random_image(rng));
    EXPECT_EQ(p(0), 0.5);
    EXPECT_EQ(p(1), 0.5);
  }
}

TEST(Forward, IntermediateShapesFollowArchitecture) {
  std::mt19937_64 rng(2);
  for (const auto& cfg : kPresets) {
    const auto params = ModelParams<double>::init(cfg, 3);
    const auto t = forward_trace(cfg, params, to_input<double>(random_image(rng)));
    EXPECT_EQ(t.c1.height, 16);
    EXPECT_EQ(t.c1.width, 16);
    EXPECT_EQ(t.c1.channels(), 8);
    EXPECT_EQ(t.s1.output.height, 8);
    EXPECT_EQ(t.s1.output.channels(), 8);
    EXPECT_EQ(t.c2.height, 8);
    EXPECT_EQ(t.c2.channels(), 16);
    EXPECT_EQ(t.s2.output.height, 4);
    EXPECT_EQ(t.s2.output.width, 4);
    EXPECT_EQ(t.s2.output.channels(), 16);
    EXPECT_EQ(t.flat.size(), 256);
    EXPECT_EQ(t.f1.size(), cfg.f1_width);
    EXPECT_EQ(t.probs.size(), 2);
  }
}

TEST(Forward, ProbabilitiesSumToOne) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const auto& cfg = kPresets[trial % 3];
    const auto p = forward(cfg, ModelParams<double>::init(cfg, static_cast<std::uint64_t>(trial)), random_image(rng));
    EXPECT_NEAR(p.sum(), 1.0, 1e-9);
    EXPECT_GT(p.minCoeff(), 0.0);
  }
}

TEST(Forward, NonFiniteParamsNameTheLayer) {
  auto p = ModelParams<double>::init(kPresets[0], 1);
  p.conv2.bias(0) = std::numeric_limits<double>::quiet_NaN();
  std::mt19937_64 rng(5);
  try {
    forward(kPresets[0], p, random_image(rng));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("C2"), std::string::npos);
  }
}

TEST(Forward, MismatchedParamsRejected) {
  std::mt19937_64 rng(6);
  EXPECT_THROW(forward(kPresets[0], ModelParams<double>::zeros(kPresets[2]), random_image(rng)), ShapeError);
}

TEST(Predict, TieIsAbnormalAndArgmaxOtherwise) {
  Vector<double> p(2);
  p << 0.9, 0.1;
  EXPECT_EQ(decide<double>(p), Label::normal);
  p << 0.5, 0.5;
  EXPECT_EQ(decide<double>(p), Label::abnormal);
  std::mt19937_64 rng(7);
  EXPECT_EQ(predict(kPresets[0], ModelParams<double>::zeros(kPresets[0]), random_image(rng)), Label::abnormal);
  for (int trial = 0; trial < 50; ++trial) {
    const auto& cfg = kPresets[trial % 3];
    const auto params = ModelParams<double>::init(cfg, 100 + static_cast<std::uint64_t>(trial));
    const auto im = random_image(rng);
    const auto probs = forward(cfg, params, im);
    Eigen::Index arg = 0;
    probs.maxCoeff(&arg);
    const auto expected = probs(0) == probs(1) ? Label::abnormal : static_cast<Label>(arg);
    EXPECT_EQ(predict(cfg, params, im), expected);
  }
}

TEST(LossAndBackward, ConfidentCorrectBatchHasNoLoss) {
  const auto& cfg = kPresets[0];
  auto params = ModelParams<double>::init(cfg, 1);
  params.out.weights.setZero();
  params.out.bias << -50.0, 50.0;
  std::mt19937_64 rng(8);
  std::vector<Example<double>> batch = {{to_input<double>(random_image(rng)), Label::abnormal},
                                        {to_input<double>(random_image(rng)), Label::abnormal}};
  const auto lg = loss_and_backward<double>(cfg, params, batch);
  EXPECT_LT(lg.loss, 1e-40);
  for (auto t : std::as_const(lg.gradient).tensors())
    for (double g : t) EXPECT_LT(std::abs(g), 1e-40);
}

TEST(LossAndBackward, DuplicatingBatchIsInvariant) {
  const auto& cfg = kPresets[1];
  const auto params = ModelParams<double>::init(cfg, 2);
  std::mt19937_64 rng(9);
  std::vector<Example<double>> batch;
  for (int i = 0; i < 3; ++i) batch.push_back({to_input<double>(random_image(rng)), static_cast<Label>(i % 2)});
  auto doubled = batch;
  doubled.insert(doubled.end(), batch.begin(), batch.end());
  const auto a = loss_and_backward<double>(cfg, params, batch);
  const auto b = loss_and_backward<double>(cfg, params, doubled);
  EXPECT_NEAR(a.loss, b.loss, 1e-14);
  const auto ga = std::as_const(a.gradient).tensors();
  const auto gb = std::as_const(b.gradient).tensors();
  for (std::size_t t = 0; t < ga.size(); ++t)
    for (std::size_t i = 0; i < ga[t].size(); ++i) EXPECT_NEAR(ga[t][i], gb[t][i], 1e-14);
}

TEST(LossAndBackward, LossMatchesForwardOracle) {
  const auto& cfg = kPresets[2];
  const auto params = ModelParams<double>::init(cfg, 3);
  std::mt19937_64 rng(10);
  std::vector<Example<double>> batch;
  for (int i = 0; i < 4; ++i) batch.push_back({to_input<double>(random_image(rng)), static_cast<Label>(i % 2)});
  EXPECT_NEAR(loss_and_backward<double>(cfg, params, batch).loss, oracle::batch_loss(cfg, params, batch), 1e-12);
  EXPECT_THROW(loss_and_backward<double>(cfg, params, std::span<const Example<double>>{}), std::invalid_argument);
}

TEST(LossAndBackward, MatchesFiniteDifferencesOnM1) {
  const auto& cfg = kPresets[0];
  auto params = ModelParams<double>::init(cfg, 4);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto t : params.tensors())
    for (auto& v : t)
      if (v == 0.0) v = u(rng);  // non-zero biases exercise every path
  const std::vector<Example<double>> batch = {{oracle::random_tensor(16, 16, 1, rng), Label::abnormal}};
  const auto lg = loss_and_backward<double>(cfg, params, batch);
  const auto check = oracle::finite_difference_check(cfg, params, batch, lg.gradient);
  EXPECT_EQ(check.checked, params.parameter_count());
  EXPECT_LT(check.max_rel_error, 1e-4);
}

TEST(ModelFloat, TemplatesInstantiateForFloat) {
  const auto cfg = kPresets[0];
  const auto pf = ModelParams<float>::init(cfg, 1);
  std::mt19937_64 rng(12);
  const auto probs = forward(cfg, pf, random_image(rng));
  EXPECT_NEAR(probs.sum(), 1.0f, 1e-5f);
}
