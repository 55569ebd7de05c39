// SPDX-License-Identifier: Apache-2.0
//
// Independent reference evaluators for tests. Plain loops over std::vector,
// no shared code with the library's loss or similarity paths.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "colap/data.hpp"
#include "colap/losses.hpp"

namespace colap::oracle {

using Vec = std::vector<double>;

inline Vec to_vec(const Eigen::Ref<const Vector>& v) { return Vec(v.data(), v.data() + v.size()); }

inline double naive_cosine(const Vec& a, const Vec& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline std::vector<Vec> columns(const Matrix& m) {
  std::vector<Vec> out;
  for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(to_vec(m.col(j)));
  return out;
}

/// Unsimplified negatives-only form: sum_i -log( exp(phi(t_i, P_i)/tau) / exp(phi(t_i, N_i)/tau) ),
/// with target i paired to source i.
inline double brute_xrcl_paper(const std::vector<Vec>& t, const std::vector<Vec>& s, double tau) {
  double total = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double pos = naive_cosine(t[i], s[i]);
    double neg = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j)
      if (j != i) neg += naive_cosine(t[i], s[j]);
    total += -std::log(std::exp(pos / tau) / std::exp(neg / tau));
  }
  return total;
}

/// Standard InfoNCE: positive plus each negative in the denominator.
inline double brute_xrcl_info_nce(const std::vector<Vec>& t, const std::vector<Vec>& s, double tau) {
  double total = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double num = std::exp(naive_cosine(t[i], s[i]) / tau);
    double den = num;
    for (std::size_t j = 0; j < s.size(); ++j)
      if (j != i) den += std::exp(naive_cosine(t[i], s[j]) / tau);
    total += -std::log(num / den);
  }
  return total;
}

inline double brute_xccl_paper(const std::vector<Vec>& t, const std::vector<int>& ty,
                               const std::vector<Vec>& s, const std::vector<int>& sy, double tau,
                               bool mean_positives) {
  double total = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    double pos = 0.0, neg = 0.0;
    int n_pos = 0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (sy[j] == ty[i]) {
        pos += naive_cosine(t[i], s[j]);
        ++n_pos;
      } else {
        neg += naive_cosine(t[i], s[j]);
      }
    }
    if (mean_positives) pos /= n_pos;
    total += -std::log(std::exp(pos / tau) / std::exp(neg / tau));
  }
  return total;
}

/// Nearest-class-mean classifier fit on `train`, accuracy on `test`.
inline double nearest_mean_accuracy(const Corpus& train, const Corpus& test) {
  const std::size_t d = static_cast<std::size_t>(train.dim());
  std::vector<Vec> means(static_cast<std::size_t>(train.num_labels), Vec(d, 0.0));
  std::vector<int> counts(static_cast<std::size_t>(train.num_labels), 0);
  for (const auto& inst : train.instances) {
    for (std::size_t k = 0; k < d; ++k) means[static_cast<std::size_t>(inst.label)][k] += inst.features[static_cast<Eigen::Index>(k)];
    ++counts[static_cast<std::size_t>(inst.label)];
  }
  for (std::size_t c = 0; c < means.size(); ++c)
    for (double& x : means[c]) x /= counts[c];
  int correct = 0;
  for (const auto& inst : test.instances) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < means.size(); ++c) {
      double dist = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = inst.features[static_cast<Eigen::Index>(k)] - means[c][k];
        dist += diff * diff;
      }
      if (dist < best_d) {
        best_d = dist;
        best = static_cast<int>(c);
      }
    }
    correct += best == inst.label;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                            double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

}  // namespace colap::oracle
