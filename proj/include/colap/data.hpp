// SPDX-License-Identifier: Apache-2.0
//
// Instances and corpora, the synthetic multilingual generator, K-shot episode
// sampling, and prototype-based exemplar selection.
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "colap/numerics.hpp"

namespace colap {

struct Instance {
  std::string id;
  std::string language;
  int label = 0;
  Vector features;
  std::optional<std::string> parallel_id;  // id of the source-language twin

  bool operator==(const Instance& other) const;
};

struct Corpus {
  std::vector<Instance> instances;
  std::string language;
  int num_labels = 0;

  std::size_t size() const { return instances.size(); }
  bool empty() const { return instances.empty(); }
  Eigen::Index dim() const { return instances.empty() ? 0 : instances.front().features.size(); }

  /// Instances as columns, in corpus order.
  Matrix feature_matrix() const;
  std::vector<int> labels() const;
  std::unordered_map<std::string, std::size_t> index_by_id() const;

  /// Unique ids, uniform dimension, labels in range, finite features, twins
  /// (when `source` is given) present and label-consistent.
  void validate(const Corpus* source = nullptr) const;
  /// Every label in [0, num_labels) occurs at least once.
  void require_all_labels() const;

  bool operator==(const Corpus& other) const = default;
};

struct Episode {
  std::vector<Instance> target_instances;
  std::vector<Instance> source_instances;
  int k = 0;
  bool paired = false;
};

struct SyntheticSpec {
  int dim = 16;
  int num_labels = 3;
  int train_size = 200;
  int test_size = 300;
  double source_noise = 0.2;
  double target_noise = 0.2;
  double rotation_angle = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SyntheticSpec&) const = default;
};

struct SyntheticCorpora {
  Corpus source;
  Corpus target_train;
  Corpus target_test;
  Matrix class_means;  // dim x num_labels, unit columns
  Matrix rotation;     // the orthogonal source-to-target map
};

/// Random orthogonal map that rotates every plane of a random orthonormal
/// basis by `angle`. angle == 0 yields the exact identity.
Matrix random_plane_rotation(int dim, double angle, std::mt19937_64& rng);

SyntheticCorpora generate_synthetic(const SyntheticSpec& spec);

/// Per-class counts for K draws over `num_labels` classes: floor(K/N) each,
/// with the K mod N surplus assigned to distinct classes chosen at random.
std::vector<int> per_class_counts(int k, int num_labels, std::mt19937_64& rng);

Episode sample_episode(const Corpus& target, const Corpus& source, int k, bool paired,
                       std::uint64_t seed);

/// Columns of the result are the per-class mean representations.
Matrix class_prototypes(const Matrix& reprs, const std::vector<int>& labels, int num_labels);

/// s_i = cos(r_i, P_{y_i}) + N_Y - sum_{c != y_i} cos(r_i, P_c).
std::vector<double> exemplar_scores(const Matrix& reprs, const std::vector<int>& labels,
                                    const Matrix& prototypes);

enum class SelectionMode { High, Low, Random };
std::string_view to_string(SelectionMode m);
SelectionMode selection_mode_from_string(std::string_view s);

/// Class-balanced selection of K instance ids. High/low ties are broken by
/// ascending id.
std::vector<std::string> select_exemplars(const std::vector<double>& scores, const Corpus& corpus,
                                          int k, SelectionMode mode, std::uint64_t seed);

/// Paired episode from selected source ids and their target-language twins.
Episode episode_from_source_ids(const std::vector<std::string>& source_ids, const Corpus& target,
                                const Corpus& source);

/// Columns i of the two matrices hold a target instance and its source twin.
struct ParallelPairs {
  Matrix target_features;
  Matrix source_features;
  Eigen::Index size() const { return target_features.cols(); }
};

ParallelPairs parallel_pairs(const Corpus& target, const Corpus& source);
ParallelPairs parallel_pairs(const Episode& episode);

}  // namespace colap
