// SPDX-License-Identifier: Apache-2.0
//
// Feed-forward encoder with an inspectable intermediate ("tap") layer and a
// label-scoring head. Batched routines take one instance per column.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "colap/numerics.hpp"

namespace colap {

enum class Activation { Tanh, Relu };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

struct ModelConfig {
  int input_dim = 0;
  int hidden_dim = 0;
  int num_layers = 1;
  int num_labels = 2;
  int tap_layer = 1;  // 1-based
  Activation activation = Activation::Tanh;

  /// ceil(0.8 * L): the same relative depth as layer 10 of a 12-layer encoder.
  static int default_tap_layer(int num_layers);

  void validate() const;
  Eigen::Index num_params() const;
  bool operator==(const ModelConfig&) const = default;
};

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;
};

struct ModelParams {
  std::vector<DenseLayer> layers;
  Matrix head_weight;  // num_labels x hidden_dim, row v is the score vector of label v
  Vector head_bias;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

/// Layer order, each weight (column-major) followed by its bias, head last.
Vector flatten(const ModelParams& params);
ModelParams unflatten(const Vector& flat, const ModelConfig& config);

/// Throws ShapeMismatch unless the parameter shapes match the config.
void check_shapes(const ModelParams& params, const ModelConfig& config);

struct Encoding {
  Vector final_repr;
  Vector tapped_repr;
};

Encoding encode(const ModelParams& params, const ModelConfig& config, const Vector& x);
Vector score_labels(const ModelParams& params, const Vector& final_repr);

/// Activations of every layer for a batch; activations[0] is the input.
struct ForwardCache {
  std::vector<Matrix> activations;

  const Matrix& final_repr() const { return activations.back(); }
  const Matrix& tapped(int tap_layer) const { return activations.at(tap_layer); }
};

ForwardCache forward(const ModelParams& params, const ModelConfig& config, const Matrix& inputs);
Matrix score_labels_batch(const ModelParams& params, const Matrix& final_reprs);

/// Argmax with ties broken toward the lowest label index.
int predict_label(const Eigen::Ref<const Vector>& logits);

/// Coordinate-wise mean of the flattened checkpoints.
ModelParams average_checkpoints(const std::vector<ModelParams>& checkpoints);

bool bit_identical(const ModelParams& a, const ModelParams& b);

}  // namespace colap
