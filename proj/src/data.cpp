// SPDX-License-Identifier: Apache-2.0
#include "colap/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_set>

#include "colap/seeding.hpp"

namespace colap {

bool Instance::operator==(const Instance& other) const {
  return id == other.id && language == other.language && label == other.label &&
         parallel_id == other.parallel_id && features.size() == other.features.size() &&
         features == other.features;
}

Matrix Corpus::feature_matrix() const {
  Matrix m(dim(), static_cast<Eigen::Index>(instances.size()));
  for (std::size_t i = 0; i < instances.size(); ++i)
    m.col(static_cast<Eigen::Index>(i)) = instances[i].features;
  return m;
}

std::vector<int> Corpus::labels() const {
  std::vector<int> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(inst.label);
  return out;
}

std::unordered_map<std::string, std::size_t> Corpus::index_by_id() const {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) index.emplace(instances[i].id, i);
  return index;
}

void Corpus::validate(const Corpus* source) const {
  require(num_labels >= 2, ErrorCode::InvalidSpec, "corpus needs at least two labels");
  std::unordered_set<std::string> seen;
  const auto d = dim();
  for (const auto& inst : instances) {
    require(seen.insert(inst.id).second, ErrorCode::InvalidSpec, "duplicate instance id " + inst.id);
    require(inst.features.size() == d, ErrorCode::DimensionMismatch,
            "instance " + inst.id + " has a different feature dimension");
    require(inst.features.allFinite(), ErrorCode::InvalidSpec,
            "instance " + inst.id + " has non-finite features");
    if (inst.label < 0 || inst.label >= num_labels) {
      throw Error(ErrorCode::LabelOutOfRange, "instance " + inst.id + " label out of range");
    }
  }
  if (source == nullptr) return;
  const auto source_index = source->index_by_id();
  for (const auto& inst : instances) {
    if (!inst.parallel_id) continue;
    const auto it = source_index.find(*inst.parallel_id);
    require(it != source_index.end(), ErrorCode::MissingParallelTwin,
            "instance " + inst.id + " links to unknown twin " + *inst.parallel_id);
    require(source->instances[it->second].label == inst.label, ErrorCode::InvalidSpec,
            "instance " + inst.id + " and its twin disagree on the label");
  }
}

void Corpus::require_all_labels() const {
  std::vector<bool> present(static_cast<std::size_t>(num_labels), false);
  for (const auto& inst : instances) present[static_cast<std::size_t>(inst.label)] = true;
  for (int c = 0; c < num_labels; ++c) {
    if (!present[static_cast<std::size_t>(c)]) {
      throw Error(ErrorCode::EmptyClass, "class " + std::to_string(c) + " has no instances");
    }
  }
}

void SyntheticSpec::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidSpec, what);
  };
  check(dim >= 2, "dim must be at least 2");
  check(num_labels >= 2, "num_labels must be at least 2");
  check(train_size >= num_labels, "train_size must cover every label");
  check(test_size >= 1, "test_size must be positive");
  check(source_noise >= 0.0 && std::isfinite(source_noise), "source_noise must be non-negative");
  check(target_noise >= 0.0 && std::isfinite(target_noise), "target_noise must be non-negative");
  check(rotation_angle >= 0.0 && rotation_angle <= M_PI, "rotation_angle must lie in [0, pi]");
}

namespace {

Vector gaussian_vector(int dim, double stddev, std::mt19937_64& rng) {
  if (stddev == 0.0) return Vector::Zero(dim);
  std::normal_distribution<double> dist(0.0, stddev);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = dist(rng);
  return v;
}

std::string make_id(const char* prefix, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%06d", prefix, index);
  return buf;
}

// Balanced labels (i mod N), shuffled.
std::vector<int> balanced_labels(int count, int num_labels, std::mt19937_64& rng) {
  std::vector<int> labels(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) labels[static_cast<std::size_t>(i)] = i % num_labels;
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

}  // namespace

Matrix random_plane_rotation(int dim, double angle, std::mt19937_64& rng) {
  if (angle == 0.0) return Matrix::Identity(dim, dim);
  Matrix gauss(dim, dim);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index i = 0; i < dim; ++i) gauss(i, j) = dist(rng);

  Eigen::HouseholderQR<Matrix> qr(gauss);
  Matrix basis = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < dim; ++j)
    if (r(j, j) < 0.0) basis.col(j) = -basis.col(j);

  Matrix planes = Matrix::Identity(dim, dim);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (Eigen::Index p = 0; p + 1 < dim; p += 2) {
    planes(p, p) = c;
    planes(p, p + 1) = -s;
    planes(p + 1, p) = s;
    planes(p + 1, p + 1) = c;
  }
  return basis * planes * basis.transpose();
}

SyntheticCorpora generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 mean_rng(derive_seed(spec.seed, {1}));
  std::mt19937_64 rotation_rng(derive_seed(spec.seed, {2}));
  std::mt19937_64 train_rng(derive_seed(spec.seed, {3}));
  std::mt19937_64 test_rng(derive_seed(spec.seed, {4}));

  SyntheticCorpora out;
  out.class_means.resize(spec.dim, spec.num_labels);
  for (int c = 0; c < spec.num_labels; ++c) {
    for (;;) {
      Vector mu = gaussian_vector(spec.dim, 1.0, mean_rng);
      if (mu.norm() < kMinNorm) continue;
      mu.normalize();
      bool distinct = true;
      for (int prev = 0; prev < c; ++prev)
        distinct = distinct && (mu - out.class_means.col(prev)).norm() > 1e-6;
      if (!distinct) continue;
      out.class_means.col(c) = mu;
      break;
    }
  }
  out.rotation = random_plane_rotation(spec.dim, spec.rotation_angle, rotation_rng);

  out.source.language = "source";
  out.target_train.language = "target";
  out.target_test.language = "target";
  out.source.num_labels = out.target_train.num_labels = out.target_test.num_labels =
      spec.num_labels;

  const auto train_labels = balanced_labels(spec.train_size, spec.num_labels, train_rng);
  for (int i = 0; i < spec.train_size; ++i) {
    const int y = train_labels[static_cast<std::size_t>(i)];
    Instance src{make_id("src", i), "source", y,
                 out.class_means.col(y) + gaussian_vector(spec.dim, spec.source_noise, train_rng),
                 std::nullopt};
    Instance tgt{make_id("tgt", i), "target", y,
                 out.rotation * src.features +
                     gaussian_vector(spec.dim, spec.target_noise, train_rng),
                 src.id};
    out.source.instances.push_back(std::move(src));
    out.target_train.instances.push_back(std::move(tgt));
  }

  const auto test_labels = balanced_labels(spec.test_size, spec.num_labels, test_rng);
  for (int i = 0; i < spec.test_size; ++i) {
    const int y = test_labels[static_cast<std::size_t>(i)];
    const Vector latent =
        out.class_means.col(y) + gaussian_vector(spec.dim, spec.source_noise, test_rng);
    out.target_test.instances.push_back(
        {make_id("test", i), "target", y,
         out.rotation * latent + gaussian_vector(spec.dim, spec.target_noise, test_rng),
         std::nullopt});
  }
  return out;
}

std::vector<int> per_class_counts(int k, int num_labels, std::mt19937_64& rng) {
  require(k >= 1, ErrorCode::InvalidConfig, "K must be positive");
  require(num_labels >= 1, ErrorCode::InvalidConfig, "num_labels must be positive");
  std::vector<int> counts(static_cast<std::size_t>(num_labels), k / num_labels);
  std::vector<int> classes(static_cast<std::size_t>(num_labels));
  std::iota(classes.begin(), classes.end(), 0);
  std::shuffle(classes.begin(), classes.end(), rng);
  for (int r = 0; r < k % num_labels; ++r) ++counts[static_cast<std::size_t>(classes[static_cast<std::size_t>(r)])];
  return counts;
}

namespace {

std::vector<std::vector<std::size_t>> members_by_class(const Corpus& corpus) {
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(corpus.num_labels));
  for (std::size_t i = 0; i < corpus.instances.size(); ++i)
    members[static_cast<std::size_t>(corpus.instances[i].label)].push_back(i);
  return members;
}

std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t> pool, int count,
                                                  int label, std::mt19937_64& rng) {
  if (static_cast<int>(pool.size()) < count) {
    throw Error(ErrorCode::InsufficientInstances,
                "class " + std::to_string(label) + " has " + std::to_string(pool.size()) +
                    " instances, " + std::to_string(count) + " requested");
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

}  // namespace

Episode sample_episode(const Corpus& target, const Corpus& source, int k, bool paired,
                       std::uint64_t seed) {
  require(k >= 1, ErrorCode::InvalidConfig, "K must be positive");
  require(target.num_labels == source.num_labels, ErrorCode::ShapeMismatch,
          "target and source corpora disagree on the label count");
  std::mt19937_64 rng(seed);
  const auto counts = per_class_counts(k, target.num_labels, rng);
  const auto target_members = members_by_class(target);
  const auto source_members = members_by_class(source);
  const auto source_index = source.index_by_id();

  std::vector<std::pair<std::size_t, std::size_t>> units;  // (target idx, source idx)
  for (int c = 0; c < target.num_labels; ++c) {
    const int count = counts[static_cast<std::size_t>(c)];
    if (count == 0) continue;
    const auto picked =
        draw_without_replacement(target_members[static_cast<std::size_t>(c)], count, c, rng);
    std::vector<std::size_t> partners;
    if (paired) {
      for (std::size_t t : picked) {
        const auto& inst = target.instances[t];
        const auto it = inst.parallel_id ? source_index.find(*inst.parallel_id) : source_index.end();
        if (it == source_index.end()) {
          throw Error(ErrorCode::MissingParallelTwin, "instance " + inst.id + " has no twin");
        }
        partners.push_back(it->second);
      }
    } else {
      partners = draw_without_replacement(source_members[static_cast<std::size_t>(c)], count, c, rng);
    }
    for (std::size_t i = 0; i < picked.size(); ++i) units.emplace_back(picked[i], partners[i]);
  }
  std::shuffle(units.begin(), units.end(), rng);

  Episode ep;
  ep.k = k;
  ep.paired = paired;
  for (const auto& [t, s] : units) {
    ep.target_instances.push_back(target.instances[t]);
    ep.source_instances.push_back(source.instances[s]);
  }
  return ep;
}

Matrix class_prototypes(const Matrix& reprs, const std::vector<int>& labels, int num_labels) {
  require(static_cast<Eigen::Index>(labels.size()) == reprs.cols(), ErrorCode::ShapeMismatch,
          "class_prototypes: one label per representation column");
  Matrix sums = Matrix::Zero(reprs.rows(), num_labels);
  std::vector<int> counts(static_cast<std::size_t>(num_labels), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    require(y >= 0 && y < num_labels, ErrorCode::LabelOutOfRange, "class_prototypes: bad label");
    sums.col(y) += reprs.col(static_cast<Eigen::Index>(i));
    ++counts[static_cast<std::size_t>(y)];
  }
  for (int c = 0; c < num_labels; ++c) {
    const int n = counts[static_cast<std::size_t>(c)];
    if (n == 0) throw Error(ErrorCode::EmptyClass, "class " + std::to_string(c) + " has no members");
    sums.col(c) /= static_cast<double>(n);
  }
  return sums;
}

std::vector<double> exemplar_scores(const Matrix& reprs, const std::vector<int>& labels,
                                    const Matrix& prototypes) {
  require(static_cast<Eigen::Index>(labels.size()) == reprs.cols(), ErrorCode::ShapeMismatch,
          "exemplar_scores: one label per representation column");
  const auto num_labels = prototypes.cols();
  std::vector<double> scores(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto r = reprs.col(static_cast<Eigen::Index>(i));
    const int y = labels[i];
    require(y >= 0 && y < num_labels, ErrorCode::LabelOutOfRange, "exemplar_scores: bad label");
    double others = 0.0;
    for (Eigen::Index c = 0; c < num_labels; ++c)
      if (c != y) others += cosine(r, prototypes.col(c));
    scores[i] = cosine(r, prototypes.col(y)) + static_cast<double>(num_labels) - others;
  }
  return scores;
}

std::string_view to_string(SelectionMode m) {
  switch (m) {
    case SelectionMode::High: return "high";
    case SelectionMode::Low: return "low";
    case SelectionMode::Random: return "random";
  }
  return "?";
}

SelectionMode selection_mode_from_string(std::string_view s) {
  if (s == "high") return SelectionMode::High;
  if (s == "low") return SelectionMode::Low;
  if (s == "random") return SelectionMode::Random;
  throw Error(ErrorCode::InvalidConfig, "unknown selection mode '" + std::string(s) + "'");
}

std::vector<std::string> select_exemplars(const std::vector<double>& scores, const Corpus& corpus,
                                          int k, SelectionMode mode, std::uint64_t seed) {
  require(scores.size() == corpus.size(), ErrorCode::ShapeMismatch,
          "select_exemplars: one score per corpus instance");
  if (k < 1 || static_cast<std::size_t>(k) > corpus.size()) {
    throw Error(ErrorCode::InsufficientInstances,
                "cannot select " + std::to_string(k) + " of " + std::to_string(corpus.size()));
  }
  if (mode == SelectionMode::Low) {
    std::vector<double> negated(scores.size());
    std::transform(scores.begin(), scores.end(), negated.begin(), [](double s) { return -s; });
    return select_exemplars(negated, corpus, k, SelectionMode::High, seed);
  }

  std::mt19937_64 rng(seed);
  const auto counts = per_class_counts(k, corpus.num_labels, rng);
  auto members = members_by_class(corpus);
  std::vector<std::string> ids;
  for (int c = 0; c < corpus.num_labels; ++c) {
    const int count = counts[static_cast<std::size_t>(c)];
    auto& pool = members[static_cast<std::size_t>(c)];
    std::vector<std::size_t> chosen;
    if (mode == SelectionMode::Random) {
      chosen = draw_without_replacement(pool, count, c, rng);
    } else {
      if (static_cast<int>(pool.size()) < count) {
        throw Error(ErrorCode::InsufficientInstances,
                    "class " + std::to_string(c) + " has too few instances");
      }
      std::sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return corpus.instances[a].id < corpus.instances[b].id;
      });
      chosen.assign(pool.begin(), pool.begin() + count);
    }
    for (std::size_t i : chosen) ids.push_back(corpus.instances[i].id);
  }
  return ids;
}

Episode episode_from_source_ids(const std::vector<std::string>& source_ids, const Corpus& target,
                                const Corpus& source) {
  const auto source_index = source.index_by_id();
  std::unordered_map<std::string, std::size_t> twin_of;  // source id -> target idx
  for (std::size_t i = 0; i < target.instances.size(); ++i)
    if (target.instances[i].parallel_id) twin_of.emplace(*target.instances[i].parallel_id, i);

  Episode ep;
  ep.k = static_cast<int>(source_ids.size());
  ep.paired = true;
  for (const auto& id : source_ids) {
    const auto s = source_index.find(id);
    require(s != source_index.end(), ErrorCode::InvalidConfig, "unknown source id " + id);
    const auto t = twin_of.find(id);
    if (t == twin_of.end()) {
      throw Error(ErrorCode::MissingParallelTwin, "source instance " + id + " has no target twin");
    }
    ep.target_instances.push_back(target.instances[t->second]);
    ep.source_instances.push_back(source.instances[s->second]);
  }
  return ep;
}

ParallelPairs parallel_pairs(const Corpus& target, const Corpus& source) {
  const auto source_index = source.index_by_id();
  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (std::size_t i = 0; i < target.instances.size(); ++i) {
    const auto& pid = target.instances[i].parallel_id;
    if (!pid) continue;
    const auto it = source_index.find(*pid);
    if (it != source_index.end()) links.emplace_back(i, it->second);
  }
  ParallelPairs pairs;
  pairs.target_features.resize(target.dim(), static_cast<Eigen::Index>(links.size()));
  pairs.source_features.resize(source.dim(), static_cast<Eigen::Index>(links.size()));
  for (std::size_t k = 0; k < links.size(); ++k) {
    pairs.target_features.col(static_cast<Eigen::Index>(k)) = target.instances[links[k].first].features;
    pairs.source_features.col(static_cast<Eigen::Index>(k)) = source.instances[links[k].second].features;
  }
  return pairs;
}

ParallelPairs parallel_pairs(const Episode& episode) {
  require(episode.paired, ErrorCode::MissingPairing, "episode is not paired");
  ParallelPairs pairs;
  const auto n = static_cast<Eigen::Index>(episode.target_instances.size());
  if (n == 0) return pairs;
  pairs.target_features.resize(episode.target_instances.front().features.size(), n);
  pairs.source_features.resize(episode.source_instances.front().features.size(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    pairs.target_features.col(i) = episode.target_instances[static_cast<std::size_t>(i)].features;
    pairs.source_features.col(i) = episode.source_instances[static_cast<std::size_t>(i)].features;
  }
  return pairs;
}

}  // namespace colap
