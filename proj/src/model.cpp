// SPDX-License-Identifier: Apache-2.0
#include "colap/model.hpp"

#include <cmath>
#include <cstring>
#include <random>

namespace colap {

std::string_view to_string(Activation a) {
  return a == Activation::Tanh ? "tanh" : "relu";
}

Activation activation_from_string(std::string_view s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  throw Error(ErrorCode::InvalidConfig, "unknown activation '" + std::string(s) + "'");
}

int ModelConfig::default_tap_layer(int num_layers) {
  return static_cast<int>(std::ceil(0.8 * num_layers));
}

void ModelConfig::validate() const {
  require(input_dim > 0, ErrorCode::InvalidConfig, "input_dim must be positive");
  require(hidden_dim > 0, ErrorCode::InvalidConfig, "hidden_dim must be positive");
  require(num_layers > 0, ErrorCode::InvalidConfig, "num_layers must be positive");
  require(num_labels >= 2, ErrorCode::InvalidConfig, "num_labels must be at least 2");
  if (tap_layer < 1 || tap_layer > num_layers) {
    throw Error(ErrorCode::LayerOutOfRange, "tap_layer " + std::to_string(tap_layer) +
                                                " outside [1, " + std::to_string(num_layers) + "]");
  }
}

Eigen::Index ModelConfig::num_params() const {
  Eigen::Index n = Eigen::Index(hidden_dim) * input_dim + hidden_dim;
  n += Eigen::Index(num_layers - 1) * (Eigen::Index(hidden_dim) * hidden_dim + hidden_dim);
  n += Eigen::Index(num_labels) * hidden_dim + num_labels;
  return n;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  auto draw = [&rng](Eigen::Index rows, Eigen::Index cols) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
    return m;
  };

  ModelParams p;
  int fan_in = config.input_dim;
  for (int l = 0; l < config.num_layers; ++l) {
    p.layers.push_back({draw(config.hidden_dim, fan_in), Vector::Zero(config.hidden_dim)});
    fan_in = config.hidden_dim;
  }
  p.head_weight = draw(config.num_labels, config.hidden_dim);
  p.head_bias = Vector::Zero(config.num_labels);
  return p;
}

namespace {

template <typename Params, typename Fn>
void for_each_block(Params& p, Fn&& fn) {
  for (auto& layer : p.layers) {
    fn(layer.weight.data(), layer.weight.size());
    fn(layer.bias.data(), layer.bias.size());
  }
  fn(p.head_weight.data(), p.head_weight.size());
  fn(p.head_bias.data(), p.head_bias.size());
}

ModelParams zero_params(const ModelConfig& config) {
  ModelParams p;
  int fan_in = config.input_dim;
  for (int l = 0; l < config.num_layers; ++l) {
    p.layers.push_back({Matrix::Zero(config.hidden_dim, fan_in), Vector::Zero(config.hidden_dim)});
    fan_in = config.hidden_dim;
  }
  p.head_weight = Matrix::Zero(config.num_labels, config.hidden_dim);
  p.head_bias = Vector::Zero(config.num_labels);
  return p;
}

}  // namespace

Vector flatten(const ModelParams& params) {
  Eigen::Index total = 0;
  for_each_block(params, [&](const double*, Eigen::Index n) { total += n; });
  Vector flat(total);
  Eigen::Index offset = 0;
  for_each_block(params, [&](const double* data, Eigen::Index n) {
    flat.segment(offset, n) = Eigen::Map<const Vector>(data, n);
    offset += n;
  });
  return flat;
}

ModelParams unflatten(const Vector& flat, const ModelConfig& config) {
  config.validate();
  if (flat.size() != config.num_params()) {
    throw Error(ErrorCode::ShapeMismatch, "flat vector has " + std::to_string(flat.size()) +
                                              " entries, config needs " +
                                              std::to_string(config.num_params()));
  }
  ModelParams p = zero_params(config);
  Eigen::Index offset = 0;
  for_each_block(p, [&](double* data, Eigen::Index n) {
    Eigen::Map<Vector>(data, n) = flat.segment(offset, n);
    offset += n;
  });
  return p;
}

void check_shapes(const ModelParams& params, const ModelConfig& config) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::ShapeMismatch, what); };
  if (params.layers.size() != static_cast<std::size_t>(config.num_layers)) fail("layer count");
  int fan_in = config.input_dim;
  for (const auto& layer : params.layers) {
    if (layer.weight.rows() != config.hidden_dim || layer.weight.cols() != fan_in ||
        layer.bias.size() != config.hidden_dim) {
      fail("layer shape");
    }
    fan_in = config.hidden_dim;
  }
  if (params.head_weight.rows() != config.num_labels ||
      params.head_weight.cols() != config.hidden_dim ||
      params.head_bias.size() != config.num_labels) {
    fail("head shape");
  }
}

ForwardCache forward(const ModelParams& params, const ModelConfig& config, const Matrix& inputs) {
  if (inputs.rows() != config.input_dim) {
    throw Error(ErrorCode::DimensionMismatch, "input dimension " + std::to_string(inputs.rows()) +
                                                  ", model expects " +
                                                  std::to_string(config.input_dim));
  }
  ForwardCache cache;
  cache.activations.reserve(params.layers.size() + 1);
  cache.activations.push_back(inputs);
  for (const auto& layer : params.layers) {
    Matrix z = layer.weight * cache.activations.back();
    z.colwise() += layer.bias;
    if (config.activation == Activation::Tanh) {
      z = z.array().tanh().matrix();
    } else {
      z = z.cwiseMax(0.0);
    }
    cache.activations.push_back(std::move(z));
  }
  return cache;
}

Encoding encode(const ModelParams& params, const ModelConfig& config, const Vector& x) {
  const ForwardCache cache = forward(params, config, x);
  return {cache.final_repr().col(0), cache.tapped(config.tap_layer).col(0)};
}

Matrix score_labels_batch(const ModelParams& params, const Matrix& final_reprs) {
  if (final_reprs.rows() != params.head_weight.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "representation dimension does not match the head");
  }
  Matrix logits = params.head_weight * final_reprs;
  logits.colwise() += params.head_bias;
  return logits;
}

Vector score_labels(const ModelParams& params, const Vector& final_repr) {
  return score_labels_batch(params, final_repr).col(0);
}

int predict_label(const Eigen::Ref<const Vector>& logits) {
  require(logits.size() > 0, ErrorCode::EmptyInput, "predict_label on empty logits");
  int best = 0;
  for (Eigen::Index v = 1; v < logits.size(); ++v) {
    if (logits[v] > logits[best]) best = static_cast<int>(v);
  }
  return best;
}

ModelParams average_checkpoints(const std::vector<ModelParams>& checkpoints) {
  require(!checkpoints.empty(), ErrorCode::EmptyList, "average_checkpoints of an empty list");
  const ModelParams& reference = checkpoints.front();
  auto same_layout = [&reference](const ModelParams& p) {
    if (p.layers.size() != reference.layers.size()) return false;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      if (p.layers[l].weight.rows() != reference.layers[l].weight.rows() ||
          p.layers[l].weight.cols() != reference.layers[l].weight.cols() ||
          p.layers[l].bias.size() != reference.layers[l].bias.size()) {
        return false;
      }
    }
    return p.head_weight.rows() == reference.head_weight.rows() &&
           p.head_weight.cols() == reference.head_weight.cols() &&
           p.head_bias.size() == reference.head_bias.size();
  };

  // Incremental mean: equal inputs reproduce themselves exactly.
  Vector mean = flatten(reference);
  for (std::size_t k = 1; k < checkpoints.size(); ++k) {
    if (!same_layout(checkpoints[k])) {
      throw Error(ErrorCode::ShapeMismatch, "checkpoint " + std::to_string(k) + " differs in shape");
    }
    mean += (flatten(checkpoints[k]) - mean) / static_cast<double>(k + 1);
  }

  ModelParams out = reference;
  Eigen::Index offset = 0;
  for_each_block(out, [&](double* data, Eigen::Index n) {
    Eigen::Map<Vector>(data, n) = mean.segment(offset, n);
    offset += n;
  });
  return out;
}

bool bit_identical(const ModelParams& a, const ModelParams& b) {
  const Vector fa = flatten(a);
  const Vector fb = flatten(b);
  return fa.size() == fb.size() &&
         std::memcmp(fa.data(), fb.data(), sizeof(double) * static_cast<std::size_t>(fa.size())) == 0;
}

}  // namespace colap
