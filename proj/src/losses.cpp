// SPDX-License-Identifier: Apache-2.0
#include "colap/losses.hpp"

#include <cmath>
#include <string>

namespace colap {

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::CeOnly: return "ce_only";
    case Objective::CePlusXrcl: return "ce_plus_xrcl";
    case Objective::CePlusXccl: return "ce_plus_xccl";
  }
  return "?";
}

std::string_view to_string(PhiMode m) { return m == PhiMode::Sum ? "sum" : "mean"; }

std::string_view to_string(DenominatorMode m) {
  return m == DenominatorMode::Paper ? "paper" : "info_nce";
}

PhiMode phi_mode_from_string(std::string_view s) {
  if (s == "sum") return PhiMode::Sum;
  if (s == "mean") return PhiMode::Mean;
  throw Error(ErrorCode::InvalidConfig, "unknown phi_mode '" + std::string(s) + "'");
}

DenominatorMode denominator_mode_from_string(std::string_view s) {
  if (s == "paper") return DenominatorMode::Paper;
  if (s == "info_nce") return DenominatorMode::InfoNce;
  throw Error(ErrorCode::InvalidConfig, "unknown denominator_mode '" + std::string(s) + "'");
}

void LossConfig::validate() const {
  require(temperature > 0.0 && std::isfinite(temperature), ErrorCode::InvalidConfig,
          "temperature must be positive");
}

double cross_entropy(const Eigen::Ref<const Vector>& logits, int label) {
  if (label < 0 || label >= logits.size()) {
    throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(label) + " with " +
                                                std::to_string(logits.size()) + " logits");
  }
  return log_sum_exp(logits) - logits[label];
}

namespace {

struct PairSets {
  std::vector<int> positives;
  std::vector<int> negatives;
};

void check_common(const ContrastiveBatch& batch) {
  if (batch.target_reprs.cols() > 0 && batch.source_reprs.cols() > 0 &&
      batch.target_reprs.rows() != batch.source_reprs.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "target and source representations differ in size");
  }
}

std::vector<PairSets> xrcl_sets(const ContrastiveBatch& batch) {
  check_common(batch);
  if (!batch.pairing) throw Error(ErrorCode::MissingPairing, "XRCL needs a target/source pairing");
  const auto& pairing = *batch.pairing;
  const auto n_target = batch.target_reprs.cols();
  const auto n_source = batch.source_reprs.cols();
  if (static_cast<Eigen::Index>(pairing.size()) != n_target || n_target != n_source) {
    throw Error(ErrorCode::MissingPairing, "pairing is not a bijection between targets and sources");
  }
  std::vector<bool> used(static_cast<std::size_t>(n_source), false);
  for (int j : pairing) {
    if (j < 0 || j >= n_source || used[static_cast<std::size_t>(j)]) {
      throw Error(ErrorCode::MissingPairing, "pairing is not a bijection between targets and sources");
    }
    used[static_cast<std::size_t>(j)] = true;
  }

  std::vector<PairSets> sets(static_cast<std::size_t>(n_target));
  for (Eigen::Index i = 0; i < n_target; ++i) {
    auto& s = sets[static_cast<std::size_t>(i)];
    const int partner = pairing[static_cast<std::size_t>(i)];
    s.positives.push_back(partner);
    for (int j = 0; j < n_source; ++j)
      if (j != partner) s.negatives.push_back(j);
  }
  return sets;
}

std::vector<PairSets> xccl_sets(const ContrastiveBatch& batch) {
  check_common(batch);
  const auto n_target = batch.target_reprs.cols();
  const auto n_source = batch.source_reprs.cols();
  require(static_cast<Eigen::Index>(batch.target_labels.size()) == n_target &&
              static_cast<Eigen::Index>(batch.source_labels.size()) == n_source,
          ErrorCode::ShapeMismatch, "XCCL labels do not match the representation counts");

  std::vector<PairSets> sets(static_cast<std::size_t>(n_target));
  for (Eigen::Index i = 0; i < n_target; ++i) {
    auto& s = sets[static_cast<std::size_t>(i)];
    const int label = batch.target_labels[static_cast<std::size_t>(i)];
    for (int j = 0; j < n_source; ++j) {
      (batch.source_labels[static_cast<std::size_t>(j)] == label ? s.positives : s.negatives)
          .push_back(j);
    }
    if (s.positives.empty()) {
      throw Error(ErrorCode::NoPositiveAvailable,
                  "no source instance with class " + std::to_string(label));
    }
  }
  return sets;
}

// Gradient of cos(t, s) with respect to t is (s_hat - cos * t_hat) / |t|.
void accumulate_cosine_grad(const Eigen::Ref<const Vector>& t, const Eigen::Ref<const Vector>& s,
                            double cos, double coeff, Eigen::Ref<Vector> d_t,
                            Eigen::Ref<Vector> d_s) {
  if (coeff == 0.0) return;
  const double nt = t.norm();
  const double ns = s.norm();
  d_t += coeff * (s / ns - cos * t / nt) / nt;
  d_s += coeff * (t / nt - cos * s / ns) / ns;
}

ContrastiveGrad contrastive(const ContrastiveBatch& batch, const std::vector<PairSets>& sets,
                            const LossConfig& cfg, bool want_grad) {
  cfg.validate();
  const Matrix& targets = batch.target_reprs;
  const Matrix& sources = batch.source_reprs;
  const double tau = cfg.temperature;

  ContrastiveGrad out;
  if (want_grad) {
    out.d_target = Matrix::Zero(targets.rows(), targets.cols());
    out.d_source = Matrix::Zero(sources.rows(), sources.cols());
  }

  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto t = targets.col(static_cast<Eigen::Index>(i));
    const auto& s = sets[i];

    std::vector<double> pos_cos(s.positives.size());
    std::vector<double> neg_cos(s.negatives.size());
    double pos_sum = 0.0;
    for (std::size_t k = 0; k < s.positives.size(); ++k) {
      pos_cos[k] = cosine(t, sources.col(s.positives[k]));
      pos_sum += pos_cos[k];
    }
    double neg_sum = 0.0;
    for (std::size_t k = 0; k < s.negatives.size(); ++k) {
      neg_cos[k] = cosine(t, sources.col(s.negatives[k]));
      neg_sum += neg_cos[k];
    }
    const double pos_weight =
        cfg.phi_mode == PhiMode::Mean ? 1.0 / static_cast<double>(s.positives.size()) : 1.0;
    const double pos = cfg.phi_mode == PhiMode::Mean ? pos_sum * pos_weight : pos_sum;

    // d l_i / d pos and d l_i / d cos(t_i, n) for every negative n.
    double d_pos = 0.0;
    std::vector<double> d_neg(s.negatives.size(), 0.0);
    if (cfg.denominator_mode == DenominatorMode::Paper) {
      out.loss += (neg_sum - pos) / tau;
      d_pos = -1.0 / tau;
      std::fill(d_neg.begin(), d_neg.end(), 1.0 / tau);
    } else {
      Vector scaled(static_cast<Eigen::Index>(s.negatives.size() + 1));
      scaled[0] = pos / tau;
      for (std::size_t k = 0; k < neg_cos.size(); ++k)
        scaled[static_cast<Eigen::Index>(k + 1)] = neg_cos[k] / tau;
      const double lse = log_sum_exp(scaled);
      out.loss += lse - pos / tau;
      if (want_grad) {
        const Vector p = (scaled.array() - lse).exp().matrix();
        d_pos = (p[0] - 1.0) / tau;
        for (std::size_t k = 0; k < d_neg.size(); ++k)
          d_neg[k] = p[static_cast<Eigen::Index>(k + 1)] / tau;
      }
    }

    if (!want_grad) continue;
    auto d_t = out.d_target.col(static_cast<Eigen::Index>(i));
    for (std::size_t k = 0; k < s.positives.size(); ++k) {
      accumulate_cosine_grad(t, sources.col(s.positives[k]), pos_cos[k], d_pos * pos_weight, d_t,
                             out.d_source.col(s.positives[k]));
    }
    for (std::size_t k = 0; k < s.negatives.size(); ++k) {
      accumulate_cosine_grad(t, sources.col(s.negatives[k]), neg_cos[k], d_neg[k], d_t,
                             out.d_source.col(s.negatives[k]));
    }
  }
  return out;
}

}  // namespace

double xrcl_loss(const ContrastiveBatch& batch, const LossConfig& cfg) {
  return contrastive(batch, xrcl_sets(batch), cfg, false).loss;
}

double xccl_loss(const ContrastiveBatch& batch, const LossConfig& cfg) {
  return contrastive(batch, xccl_sets(batch), cfg, false).loss;
}

ContrastiveGrad xrcl_loss_and_grad(const ContrastiveBatch& batch, const LossConfig& cfg) {
  return contrastive(batch, xrcl_sets(batch), cfg, true);
}

ContrastiveGrad xccl_loss_and_grad(const ContrastiveBatch& batch, const LossConfig& cfg) {
  return contrastive(batch, xccl_sets(batch), cfg, true);
}

namespace {

struct BatchForward {
  ForwardCache cache;
  BatchOutputs outputs;
};

BatchForward forward_batch(const ModelParams& params, const ModelConfig& model,
                           const TrainingBatch& batch) {
  const auto n_target = batch.target_features.cols();
  const auto n_source = batch.source_features.cols();
  require(static_cast<Eigen::Index>(batch.target_labels.size()) == n_target &&
              static_cast<Eigen::Index>(batch.source_labels.size()) == n_source,
          ErrorCode::ShapeMismatch, "batch labels do not match the feature columns");
  require(n_target + n_source > 0, ErrorCode::EmptyInput, "empty training batch");

  Matrix inputs(model.input_dim, n_target + n_source);
  if (n_target > 0) {
    require(batch.target_features.rows() == model.input_dim, ErrorCode::DimensionMismatch,
            "target feature dimension does not match the model");
    inputs.leftCols(n_target) = batch.target_features;
  }
  if (n_source > 0) {
    require(batch.source_features.rows() == model.input_dim, ErrorCode::DimensionMismatch,
            "source feature dimension does not match the model");
    inputs.rightCols(n_source) = batch.source_features;
  }

  BatchForward f;
  f.cache = forward(params, model, inputs);
  f.outputs.logits = score_labels_batch(params, f.cache.final_repr());
  f.outputs.labels = batch.target_labels;
  f.outputs.labels.insert(f.outputs.labels.end(), batch.source_labels.begin(),
                          batch.source_labels.end());

  const Matrix& tap = f.cache.tapped(model.tap_layer);
  auto& c = f.outputs.contrastive;
  c.target_reprs = tap.leftCols(n_target);
  c.source_reprs = tap.rightCols(n_source);
  c.target_labels = batch.target_labels;
  c.source_labels = batch.source_labels;
  if (batch.paired) {
    require(n_target == n_source, ErrorCode::MissingPairing,
            "paired batch with unequal target and source counts");
    std::vector<int> identity(static_cast<std::size_t>(n_target));
    for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = static_cast<int>(i);
    c.pairing = std::move(identity);
  }
  return f;
}

double ce_sum(const BatchOutputs& outputs) {
  double ce = 0.0;
  for (std::size_t k = 0; k < outputs.labels.size(); ++k)
    ce += cross_entropy(outputs.logits.col(static_cast<Eigen::Index>(k)), outputs.labels[k]);
  return ce;
}

}  // namespace

BatchOutputs run_batch(const ModelParams& params, const ModelConfig& model,
                       const TrainingBatch& batch) {
  return forward_batch(params, model, batch).outputs;
}

LossBreakdown total_loss(const BatchOutputs& outputs, const LossConfig& cfg) {
  LossBreakdown b;
  b.cross_entropy = ce_sum(outputs);
  switch (cfg.objective) {
    case Objective::CeOnly:
      b.total = b.cross_entropy;
      return b;
    case Objective::CePlusXrcl:
      b.contrastive = xrcl_loss(outputs.contrastive, cfg);
      break;
    case Objective::CePlusXccl:
      b.contrastive = xccl_loss(outputs.contrastive, cfg);
      break;
  }
  b.total = b.cross_entropy + b.contrastive;
  return b;
}

LossBreakdown total_loss(const ModelParams& params, const ModelConfig& model,
                         const TrainingBatch& batch, const LossConfig& cfg) {
  return total_loss(run_batch(params, model, batch), cfg);
}

LossAndGradient backward(const ModelParams& params, const ModelConfig& model,
                         const TrainingBatch& batch, const LossConfig& cfg) {
  const BatchForward f = forward_batch(params, model, batch);
  const BatchOutputs& out = f.outputs;
  const auto n = out.logits.cols();

  LossAndGradient result;
  result.loss.cross_entropy = ce_sum(out);

  // Softmax-CE: d/dlogits = softmax - onehot, per column.
  Matrix d_logits(out.logits.rows(), n);
  for (Eigen::Index k = 0; k < n; ++k) {
    d_logits.col(k) = softmax(out.logits.col(k));
    d_logits(out.labels[static_cast<std::size_t>(k)], k) -= 1.0;
  }

  Matrix d_tap;
  if (cfg.objective != Objective::CeOnly) {
    const ContrastiveGrad cg = cfg.objective == Objective::CePlusXrcl
                                   ? xrcl_loss_and_grad(out.contrastive, cfg)
                                   : xccl_loss_and_grad(out.contrastive, cfg);
    result.loss.contrastive = cg.loss;
    result.loss.total = result.loss.cross_entropy + cg.loss;
    d_tap.resize(model.hidden_dim, n);
    d_tap << cg.d_target, cg.d_source;
  } else {
    result.loss.total = result.loss.cross_entropy;
  }

  ModelParams grad = params;
  grad.head_weight = d_logits * f.cache.final_repr().transpose();
  grad.head_bias = d_logits.rowwise().sum();
  Matrix d_hidden = params.head_weight.transpose() * d_logits;

  for (int l = model.num_layers; l >= 1; --l) {
    if (l == model.tap_layer && d_tap.size() > 0) d_hidden += d_tap;
    const Matrix& a = f.cache.activations[static_cast<std::size_t>(l)];
    Matrix d_pre;
    if (model.activation == Activation::Tanh) {
      d_pre = d_hidden.cwiseProduct((1.0 - a.array().square()).matrix());
    } else {
      d_pre = d_hidden.cwiseProduct((a.array() > 0.0).cast<double>().matrix());
    }
    const auto& layer = params.layers[static_cast<std::size_t>(l - 1)];
    auto& g = grad.layers[static_cast<std::size_t>(l - 1)];
    g.weight = d_pre * f.cache.activations[static_cast<std::size_t>(l - 1)].transpose();
    g.bias = d_pre.rowwise().sum();
    if (l > 1) d_hidden = layer.weight.transpose() * d_pre;
  }

  result.gradient = flatten(grad);
  return result;
}

}  // namespace colap
