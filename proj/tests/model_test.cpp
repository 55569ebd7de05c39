// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "colap/losses.hpp"
#include "colap/model.hpp"
#include "oracles.hpp"

namespace colap {
namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.input_dim = 4;
  c.hidden_dim = 4;
  c.num_layers = 2;
  c.num_labels = 3;
  c.tap_layer = 1;
  return c;
}

TEST(Model, ParameterCountByShape) {
  const ModelConfig c = small_config();
  EXPECT_EQ(c.num_params(), 55);
  EXPECT_EQ(flatten(init_params(c, 1)).size(), 55);
}

TEST(Model, InitIsDeterministicWithZeroBiases) {
  const ModelConfig c = small_config();
  const ModelParams a = init_params(c, 42);
  const ModelParams b = init_params(c, 42);
  EXPECT_TRUE(bit_identical(a, b));
  EXPECT_FALSE(bit_identical(a, init_params(c, 43)));
  for (const auto& layer : a.layers) {
    EXPECT_TRUE((layer.bias.array() == 0.0).all());
    EXPECT_LE(layer.weight.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(4.0));
  }
  EXPECT_TRUE((a.head_bias.array() == 0.0).all());
}

TEST(Model, FlattenRoundTripsBitExactly) {
  ModelConfig c = small_config();
  c.hidden_dim = 5;
  c.num_layers = 3;
  const ModelParams p = init_params(c, 7);
  EXPECT_TRUE(bit_identical(unflatten(flatten(p), c), p));
  EXPECT_THROW(unflatten(Vector::Zero(3), c), Error);
}

TEST(Model, DefaultTapLayer) {
  EXPECT_EQ(ModelConfig::default_tap_layer(12), 10);
  EXPECT_EQ(ModelConfig::default_tap_layer(6), 5);
  EXPECT_EQ(ModelConfig::default_tap_layer(2), 2);
  EXPECT_EQ(ModelConfig::default_tap_layer(1), 1);
}

TEST(Model, ConfigValidation) {
  ModelConfig c = small_config();
  c.tap_layer = 3;
  try {
    c.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LayerOutOfRange);
  }
  c = small_config();
  c.num_labels = 1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Encode, TapAtTopEqualsFinal) {
  ModelConfig c = small_config();
  c.tap_layer = c.num_layers;
  const ModelParams p = init_params(c, 3);
  const Vector x = Vector::LinSpaced(4, -1.0, 1.0);
  const Encoding e = encode(p, c, x);
  EXPECT_EQ(e.final_repr, e.tapped_repr);
}

TEST(Encode, TanhOfZeroInputIsZero) {
  ModelConfig c;
  c.input_dim = c.hidden_dim = 3;
  c.num_layers = 1;
  c.num_labels = 2;
  c.tap_layer = 1;
  ModelParams p = init_params(c, 1);
  p.layers[0].weight = Matrix::Identity(3, 3);
  EXPECT_EQ(encode(p, c, Vector::Zero(3)).final_repr, Vector(Vector::Zero(3)));
}

TEST(Encode, ReluByHand) {
  ModelConfig c;
  c.input_dim = c.hidden_dim = 2;
  c.num_layers = 1;
  c.num_labels = 2;
  c.tap_layer = 1;
  c.activation = Activation::Relu;
  ModelParams p = init_params(c, 1);
  p.layers[0].weight = Matrix::Identity(2, 2);
  p.layers[0].bias = Vector(2);
  p.layers[0].bias << 1.0, -1.0;
  Vector x(2);
  x << 2.0, 0.0;
  const Vector out = encode(p, c, x).final_repr;
  EXPECT_EQ(out[0], 3.0);
  EXPECT_EQ(out[1], 0.0);
}

TEST(Encode, DimensionMismatch) {
  const ModelConfig c = small_config();
  try {
    encode(init_params(c, 1), c, Vector::Zero(5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(ScoreLabels, Examples) {
  ModelConfig c;
  c.input_dim = c.hidden_dim = 2;
  c.num_layers = 1;
  c.num_labels = 2;
  c.tap_layer = 1;
  ModelParams p = init_params(c, 1);
  p.head_weight.setZero();
  p.head_bias << 0.25, -0.75;
  Vector h(2);
  h << 0.5, -0.5;
  EXPECT_EQ(score_labels(p, h), p.head_bias);

  p.head_weight = Matrix::Identity(2, 2);
  p.head_bias.setZero();
  const Vector logits = score_labels(p, h);
  EXPECT_DOUBLE_EQ(logits[0], 0.5);
  EXPECT_DOUBLE_EQ(logits[1], -0.5);
  EXPECT_THROW(score_labels(p, Vector::Zero(3)), Error);
}

TEST(ScoreLabels, ArgmaxInvariantUnderPositiveScaling) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> alpha(0.01, 50.0);
  ModelConfig c = small_config();
  c.num_labels = 5;
  ModelParams p = init_params(c, 2);
  for (int trial = 0; trial < 300; ++trial) {
    const Vector h = oracle::random_matrix(4, 1, rng).col(0);
    EXPECT_EQ(predict_label(score_labels(p, h)), predict_label(score_labels(p, Vector(alpha(rng) * h))));
  }
}

TEST(PredictLabel, TiesGoToLowestIndex) {
  Vector logits(3);
  logits << 1.0, 2.0, 2.0;
  EXPECT_EQ(predict_label(logits), 1);
  logits.setConstant(0.5);
  EXPECT_EQ(predict_label(logits), 0);
}

TEST(AverageCheckpoints, Examples) {
  const ModelConfig c = small_config();
  const ModelParams p = init_params(c, 5);
  EXPECT_TRUE(bit_identical(average_checkpoints({p}), p));
  EXPECT_TRUE(bit_identical(average_checkpoints({p, p, p}), p));

  ModelParams a = p, b = p;
  a.head_bias[0] = 0.2;
  b.head_bias[0] = 0.4;
  EXPECT_NEAR(average_checkpoints({a, b}).head_bias[0], 0.3, 1e-15);
}

TEST(AverageCheckpoints, CommutesWithFlatten) {
  const ModelConfig c = small_config();
  std::vector<ModelParams> cps;
  Vector mean = Vector::Zero(c.num_params());
  for (int s = 0; s < 7; ++s) {
    cps.push_back(init_params(c, static_cast<std::uint64_t>(s)));
    mean += flatten(cps.back());
  }
  mean /= 7.0;
  EXPECT_LT((flatten(average_checkpoints(cps)) - mean).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AverageCheckpoints, Errors) {
  try {
    average_checkpoints({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyList);
  }
  ModelConfig other = small_config();
  other.hidden_dim = 5;
  try {
    average_checkpoints({init_params(small_config(), 1), init_params(other, 1)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

}  // namespace
}  // namespace colap
