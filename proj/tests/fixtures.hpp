// SPDX-License-Identifier: Apache-2.0
//
// Seeded random instances shared by the unit and acceptance suites.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "colap/gradcheck.hpp"
#include "colap/losses.hpp"
#include "colap/model.hpp"
#include "oracles.hpp"

namespace colap::fixture {

struct GradCase {
  ModelConfig model;
  ModelParams params;
  TrainingBatch batch;
};

/// d_in = d_h = 4, L = 2, N_Y = 2, three paired instances per language. Every
/// parameter (biases included) is perturbed so no coordinate sits at a special
/// value. Odd seeds tap layer 1, even seeds tap the top layer.
inline GradCase tiny_grad_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GradCase c;
  c.model.input_dim = 4;
  c.model.hidden_dim = 4;
  c.model.num_layers = 2;
  c.model.num_labels = 2;
  c.model.tap_layer = seed % 2 == 1 ? 1 : 2;
  const Vector flat = flatten(init_params(c.model, seed)) +
                      0.3 * oracle::random_matrix(c.model.num_params(), 1, rng).col(0);
  c.params = unflatten(flat, c.model);

  c.batch.paired = true;
  c.batch.target_features = oracle::random_matrix(4, 3, rng);
  c.batch.source_features = oracle::random_matrix(4, 3, rng);
  std::uniform_int_distribution<int> label(0, 1);
  for (int i = 0; i < 3; ++i) {
    const int y = label(rng);
    c.batch.target_labels.push_back(y);
    c.batch.source_labels.push_back(y);
  }
  return c;
}

struct NamedObjective {
  std::string name;
  LossConfig cfg;
};

inline std::vector<NamedObjective> gradient_objectives() {
  std::vector<NamedObjective> out;
  LossConfig base;
  base.objective = Objective::CeOnly;
  out.push_back({"ce_only", base});
  base.objective = Objective::CePlusXrcl;
  base.denominator_mode = DenominatorMode::Paper;
  out.push_back({"ce_plus_xrcl/paper", base});
  base.denominator_mode = DenominatorMode::InfoNce;
  out.push_back({"ce_plus_xrcl/info_nce", base});
  base.objective = Objective::CePlusXccl;
  base.denominator_mode = DenominatorMode::Paper;
  base.phi_mode = PhiMode::Sum;
  out.push_back({"ce_plus_xccl/sum", base});
  base.phi_mode = PhiMode::Mean;
  out.push_back({"ce_plus_xccl/mean", base});
  return out;
}

/// Analytic gradient of total_loss against central differences of total_loss.
inline GradCheckResult check_case(const GradCase& c, const LossConfig& cfg) {
  const Vector analytic = backward(c.params, c.model, c.batch, cfg).gradient;
  const auto loss_at = [&](const Vector& flat) {
    return total_loss(unflatten(flat, c.model), c.model, c.batch, cfg).total;
  };
  const Vector numeric = finite_diff_grad(loss_at, flatten(c.params));
  return compare_gradients(analytic, numeric, 1e-4, 1e-8);
}

/// Random paired contrastive batch of n unit-free representations.
inline ContrastiveBatch random_paired_batch(std::mt19937_64& rng, int n, int dim) {
  ContrastiveBatch b;
  b.target_reprs = oracle::random_matrix(dim, n, rng);
  b.source_reprs = oracle::random_matrix(dim, n, rng);
  std::vector<int> pairing(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    pairing[static_cast<std::size_t>(i)] = i;
    b.target_labels.push_back(i);
    b.source_labels.push_back(i);
  }
  b.pairing = pairing;
  return b;
}

}  // namespace colap::fixture
