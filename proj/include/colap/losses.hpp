// SPDX-License-Identifier: Apache-2.0
//
// Training objectives: cross-entropy on head logits plus the cross-lingual
// representation (XRCL) and class (XCCL) contrastive terms on tap-layer
// representations, with analytic gradients.
//
// Both contrastive terms share one form. For each target representation t_i
// there is a positive source set P_i and a negative source set N_i, and
//
//   paper:    l_i = -log( exp(phi(t_i, P_i)/tau) / exp(phi(t_i, N_i)/tau) )
//                 = (phi(t_i, N_i) - phi(t_i, P_i)) / tau
//   info_nce: l_i = -log( exp(pos_i/tau) / (exp(pos_i/tau) + sum_{n in N_i} exp(cos(t_i, n)/tau)) )
//
// where phi is the cosine sum over a set (phi over P_i is divided by |P_i| in
// mean mode). XRCL: P_i = {paired source}, N_i = every other source.
// XCCL: P_i = same-label sources, N_i = different-label sources.
#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "colap/model.hpp"
#include "colap/numerics.hpp"

namespace colap {

enum class Objective { CeOnly, CePlusXrcl, CePlusXccl };
enum class PhiMode { Sum, Mean };
enum class DenominatorMode { Paper, InfoNce };

std::string_view to_string(Objective o);
std::string_view to_string(PhiMode m);
std::string_view to_string(DenominatorMode m);
PhiMode phi_mode_from_string(std::string_view s);
DenominatorMode denominator_mode_from_string(std::string_view s);

struct LossConfig {
  double temperature = 0.1;
  Objective objective = Objective::CeOnly;
  PhiMode phi_mode = PhiMode::Sum;
  DenominatorMode denominator_mode = DenominatorMode::Paper;

  void validate() const;
};

/// Representations are columns. `pairing[i]` is the source column paired with
/// target column i.
struct ContrastiveBatch {
  Matrix target_reprs;
  Matrix source_reprs;
  std::vector<int> target_labels;
  std::vector<int> source_labels;
  std::optional<std::vector<int>> pairing;
};

/// Loss value plus its gradient with respect to each representation column.
struct ContrastiveGrad {
  double loss = 0.0;
  Matrix d_target;
  Matrix d_source;
};

double cross_entropy(const Eigen::Ref<const Vector>& logits, int label);

double xrcl_loss(const ContrastiveBatch& batch, const LossConfig& cfg);
double xccl_loss(const ContrastiveBatch& batch, const LossConfig& cfg);
ContrastiveGrad xrcl_loss_and_grad(const ContrastiveBatch& batch, const LossConfig& cfg);
ContrastiveGrad xccl_loss_and_grad(const ContrastiveBatch& batch, const LossConfig& cfg);

/// One optimization batch. Column i of target_features is paired with column i
/// of source_features when `paired` is set. Source-only batches leave the
/// target side empty.
struct TrainingBatch {
  Matrix target_features;
  Matrix source_features;
  std::vector<int> target_labels;
  std::vector<int> source_labels;
  bool paired = false;

  Eigen::Index size() const { return target_features.cols() + source_features.cols(); }
};

/// Model outputs a total loss is computed from: head logits for every instance
/// in the batch plus the contrastive view of the tap-layer representations.
struct BatchOutputs {
  Matrix logits;
  std::vector<int> labels;
  ContrastiveBatch contrastive;
};

BatchOutputs run_batch(const ModelParams& params, const ModelConfig& model,
                       const TrainingBatch& batch);

struct LossBreakdown {
  double cross_entropy = 0.0;  // summed over every instance in the batch
  double contrastive = 0.0;
  double total = 0.0;
};

LossBreakdown total_loss(const BatchOutputs& outputs, const LossConfig& cfg);
LossBreakdown total_loss(const ModelParams& params, const ModelConfig& model,
                         const TrainingBatch& batch, const LossConfig& cfg);

struct LossAndGradient {
  LossBreakdown loss;
  Vector gradient;  // flattened in the layout of flatten(ModelParams)
};

/// Reverse-mode gradient of total_loss with respect to every parameter.
LossAndGradient backward(const ModelParams& params, const ModelConfig& model,
                         const TrainingBatch& batch, const LossConfig& cfg);

}  // namespace colap
