// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "colap/gradcheck.hpp"
#include "colap/numerics.hpp"
#include "colap/optim.hpp"
#include "oracles.hpp"

namespace colap {
namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

template <typename Fn>
void expect_error(ErrorCode code, Fn&& fn) {
  try {
    fn();
    FAIL() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

TEST(Cosine, Examples) {
  EXPECT_DOUBLE_EQ(cosine(vec({1, 0}), vec({1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(cosine(vec({1, 0}), vec({0, 1})), 0.0);
  EXPECT_NEAR(cosine(vec({3, 4}), vec({4, 3})), 24.0 / 25.0, 1e-15);
}

TEST(Cosine, Errors) {
  expect_error(ErrorCode::ZeroNormVector, [] { cosine(vec({0, 0}), vec({1, 0})); });
  expect_error(ErrorCode::ZeroNormVector, [] { cosine(vec({1, 0}), vec({1e-13, 0})); });
  expect_error(ErrorCode::DimensionMismatch, [] { cosine(vec({1, 0}), vec({1, 0, 0})); });
}

TEST(Cosine, SymmetryBoundAndScaleInvariance) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Matrix m = oracle::random_matrix(7, 2, rng);
    const Vector u = m.col(0), v = m.col(1);
    const double c = cosine(u, v);
    EXPECT_EQ(c, cosine(v, u));
    EXPECT_LE(std::abs(c), 1.0 + 1e-12);
    EXPECT_NEAR(cosine(Vector(scale(rng) * u), v), c, 1e-14);
    EXPECT_NEAR(c, oracle::naive_cosine(oracle::to_vec(u), oracle::to_vec(v)), 1e-14);
  }
}

TEST(SetSimilarity, Examples) {
  const Vector r = vec({1, 0});
  EXPECT_EQ(set_similarity(r, Matrix(2, 0)), 0.0);
  Matrix twice(2, 2);
  twice << r, r;
  EXPECT_DOUBLE_EQ(set_similarity(r, twice), 2.0);
  const std::vector<Vector> s{vec({0, 1}), vec({1, 0}), vec({-1, 0})};
  EXPECT_DOUBLE_EQ(set_similarity(r, s), 0.0);
}

TEST(SetSimilarity, AdditiveOverDisjointParts) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector r = oracle::random_matrix(5, 1, rng).col(0);
    const Matrix a = oracle::random_matrix(5, 3, rng);
    const Matrix b = oracle::random_matrix(5, 4, rng);
    Matrix both(5, 7);
    both << a, b;
    EXPECT_NEAR(set_similarity(r, both), set_similarity(r, a) + set_similarity(r, b), 1e-13);
  }
}

TEST(Softmax, Examples) {
  const Vector half = softmax(vec({0, 0}));
  EXPECT_DOUBLE_EQ(half[0], 0.5);
  EXPECT_DOUBLE_EQ(half[1], 0.5);

  const Vector third = softmax(vec({1000, 1000, 1000}));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(third[i], 1.0 / 3.0, 1e-15);

  const Vector p = softmax(vec({std::log(1.0), std::log(2.0), std::log(3.0)}));
  EXPECT_NEAR(p[0], 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(p[1], 2.0 / 6.0, 1e-15);
  EXPECT_NEAR(p[2], 3.0 / 6.0, 1e-15);

  expect_error(ErrorCode::EmptyInput, [] { softmax(Vector(0)); });
}

TEST(Softmax, ShiftInvariantAndNormalized) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> shift(-500.0, 500.0);
  for (int trial = 0; trial < 300; ++trial) {
    const Vector logits = oracle::random_matrix(6, 1, rng, 5.0).col(0);
    const Vector p = softmax(logits);
    const Vector q = softmax(Vector(logits.array() + shift(rng)));
    EXPECT_NEAR(p.sum(), 1.0, 1e-9);
    EXPECT_TRUE((p.array() >= 0.0).all());
    EXPECT_LT((p - q).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Adamw, ZeroGradientIsFixedPoint) {
  OptimHyper h;
  h.weight_decay = 0.0;
  const Vector p = vec({0.3, -1.2, 4.0});
  const auto r = adamw_step(p, Vector(Vector::Zero(3)), OptimState::zeros(3), h);
  EXPECT_EQ(r.params, p);
  EXPECT_EQ(r.state.step_count, 1);
}

TEST(Adamw, FirstStepMovesByLearningRate) {
  // m_hat = 1, v_hat = 1 on the first step, so the update is lr / (1 + eps).
  OptimHyper h;
  h.learning_rate = 0.1;
  h.weight_decay = 0.0;
  const auto r = adamw_step(vec({1.0}), vec({1.0}), OptimState::zeros(1), h);
  EXPECT_NEAR(r.params[0], 1.0 - 0.1 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(r.params[0], 0.9, 1e-8);
}

TEST(Adamw, DecoupledDecayActsAlone) {
  OptimHyper h;
  h.learning_rate = 1.0;
  h.weight_decay = 0.1;
  const auto r = adamw_step(vec({1.0}), vec({0.0}), OptimState::zeros(1), h);
  EXPECT_NEAR(r.params[0], 0.9, 1e-15);
}

TEST(Adamw, DefaultsAndDeterminism) {
  const OptimHyper h;
  EXPECT_EQ(h.learning_rate, 2e-5);
  EXPECT_EQ(h.beta1, 0.9);
  EXPECT_EQ(h.beta2, 0.999);
  EXPECT_EQ(h.epsilon, 1e-8);
  EXPECT_EQ(h.weight_decay, 0.01);

  std::mt19937_64 rng(9);
  const Vector p = oracle::random_matrix(20, 1, rng).col(0);
  const Vector g = oracle::random_matrix(20, 1, rng).col(0);
  auto a = adamw_step(p, g, OptimState::zeros(20), h);
  auto b = adamw_step(p, g, OptimState::zeros(20), h);
  for (int step = 0; step < 5; ++step) {
    a = adamw_step(a.params, g, a.state, h);
    b = adamw_step(b.params, g, b.state, h);
  }
  EXPECT_EQ(a.state.step_count, 6);
  EXPECT_EQ(std::memcmp(a.params.data(), b.params.data(), 20 * sizeof(double)), 0);
  EXPECT_EQ(std::memcmp(a.state.second_moment.data(), b.state.second_moment.data(), 20 * sizeof(double)), 0);
}

TEST(Adamw, ShapeMismatch) {
  expect_error(ErrorCode::DimensionMismatch,
               [] { adamw_step(vec({1, 2}), vec({1}), OptimState::zeros(2), OptimHyper{}); });
  expect_error(ErrorCode::DimensionMismatch,
               [] { adamw_step(vec({1, 2}), vec({1, 2}), OptimState::zeros(3), OptimHyper{}); });
}

TEST(FiniteDiff, KnownDerivatives) {
  const auto square = [](const Vector& p) { return p[0] * p[0]; };
  EXPECT_NEAR(finite_diff_grad(square, vec({3.0}))[0], 6.0, 1e-8);

  const auto constant = [](const Vector&) { return 4.2; };
  EXPECT_EQ(finite_diff_grad(constant, vec({1.0, -2.0, 3.0})), Vector(Vector::Zero(3)));

  const auto blowup = [](const Vector& p) { return p[0] > 0 ? std::log(-1.0) : 0.0; };
  expect_error(ErrorCode::NonFiniteEvaluation, [&] { finite_diff_grad(blowup, vec({1.0})); });
}

TEST(FiniteDiff, CompareGradientsUsesRelativeAndAbsoluteRules) {
  EXPECT_TRUE(compare_gradients(vec({1.0, 1e-9}), vec({1.00001, 5e-9})).passed);
  EXPECT_FALSE(compare_gradients(vec({1.0}), vec({1.001})).passed);
  EXPECT_FALSE(compare_gradients(vec({0.0}), vec({5e-8})).passed);
}

}  // namespace
}  // namespace colap
