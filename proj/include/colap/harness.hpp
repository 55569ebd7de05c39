// SPDX-License-Identifier: Apache-2.0
//
// Two-phase protocol: cross-entropy fine-tuning on the source language, then
// fixed-epoch few-shot adaptation on an episode (FT, CA, CoLAP-XRCL,
// CoLAP-XCCL), followed by target-language evaluation.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "colap/data.hpp"
#include "colap/losses.hpp"
#include "colap/model.hpp"
#include "colap/optim.hpp"

namespace colap {

enum class Method { Ft, Ca, ColapXrcl, ColapXccl };
std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

/// The adaptation objective a method optimizes.
Objective objective_for(Method m);

struct TrainConfig {
  int batch_size = 64;
  int source_epochs = 5;
  int adapt_epochs = 10;
  OptimHyper optim;
  LossConfig loss;
  Method method = Method::Ft;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  void validate() const;
};

struct EpochLoss {
  int epoch = 0;
  double loss = 0.0;  // mean per-instance loss over the epoch
};

/// Mini-batch CE training on the source corpus with seeded per-epoch
/// shuffling; the final short batch is kept.
ModelParams train_source(const ModelParams& params, const ModelConfig& model,
                         const TrainConfig& train, const Corpus& source, std::uint64_t seed,
                         std::vector<EpochLoss>* trajectory = nullptr);

/// Few-shot adaptation. Episode units (target i, source i) are reshuffled each
/// epoch and grouped max(1, batch_size / 2) units per batch, so a batch holds at
/// most batch_size instances.
ModelParams adapt_fewshot(const ModelParams& params, const ModelConfig& model,
                          const TrainConfig& train, const Episode& episode, std::uint64_t seed,
                          std::vector<EpochLoss>* trajectory = nullptr);

/// Fraction of correctly classified instances; ties go to the lowest label.
double evaluate(const ModelParams& params, const ModelConfig& model, const Corpus& test);

/// Mean cosine between tap-layer representations of each (target, source) pair.
double alignment_report(const ModelParams& params, const ModelConfig& model,
                        const ParallelPairs& pairs);

/// Tap-layer representations of every corpus instance, as columns.
Matrix tap_representations(const ModelParams& params, const ModelConfig& model, const Corpus& corpus);

struct EpisodeConfig {
  std::vector<int> k_values{10};
  bool paired = true;
  SelectionMode selection = SelectionMode::Random;
};

struct CorpusPaths {
  std::string source;
  std::string target_train;
  std::string target_test;
};

struct ExperimentConfig {
  std::optional<SyntheticSpec> synthetic;
  std::optional<CorpusPaths> corpus;
  ModelConfig model;  // input_dim / num_labels are taken from the data
  bool tap_layer_explicit = false;
  TrainConfig train;
  EpisodeConfig episode;
  std::string output_dir = "out";
};

struct CorpusSet {
  Corpus source;
  Corpus target_train;
  Corpus target_test;
};

struct SeedResult {
  std::uint64_t seed = 0;
  int k = 0;
  double accuracy = 0.0;
  double zero_shot_accuracy = 0.0;
  // Mean tap-layer cosine over the episode's positive (parallel) pairs.
  double alignment_before = 0.0;
  double alignment_after = 0.0;
  // Same measure over every parallel pair in the target training corpus.
  double heldout_alignment_before = 0.0;
  double heldout_alignment_after = 0.0;
  std::vector<EpochLoss> source_losses;
  std::vector<EpochLoss> adapt_losses;
  std::vector<std::string> episode_source_ids;
  std::vector<std::string> episode_target_ids;
};

struct KSummary {
  int k = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_zero_shot_accuracy = 0.0;
  double mean_alignment_before = 0.0;
  double mean_alignment_after = 0.0;
};

struct RunReport {
  ExperimentConfig config;  // resolved: data dimensions and tap layer filled in
  std::vector<SeedResult> rows;  // seed-major, then K in config order
  std::vector<KSummary> summary;
  std::vector<std::pair<std::uint64_t, ModelParams>> source_checkpoints;
};

/// Fills input_dim / num_labels from the data and the default tap layer.
ModelConfig resolve_model(const ExperimentConfig& config, const CorpusSet& data);

/// Runs every seed, independently and deterministically; `jobs` bounds how many
/// seeds run concurrently. Results are merged in seed order.
RunReport run_experiment(const ExperimentConfig& config, const CorpusSet& data, int jobs = 1);

}  // namespace colap
