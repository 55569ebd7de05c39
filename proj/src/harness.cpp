// SPDX-License-Identifier: Apache-2.0
#include "colap/harness.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <random>

#include "colap/seeding.hpp"

namespace colap {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Ft: return "ft";
    case Method::Ca: return "ca";
    case Method::ColapXrcl: return "colap_xrcl";
    case Method::ColapXccl: return "colap_xccl";
  }
  return "?";
}

Method method_from_string(std::string_view s) {
  if (s == "ft") return Method::Ft;
  if (s == "ca") return Method::Ca;
  if (s == "colap_xrcl") return Method::ColapXrcl;
  if (s == "colap_xccl") return Method::ColapXccl;
  throw Error(ErrorCode::InvalidConfig, "unknown method '" + std::string(s) + "'");
}

Objective objective_for(Method m) {
  switch (m) {
    case Method::ColapXrcl: return Objective::CePlusXrcl;
    case Method::ColapXccl: return Objective::CePlusXccl;
    default: return Objective::CeOnly;
  }
}

void TrainConfig::validate() const {
  require(batch_size >= 1, ErrorCode::InvalidConfig, "batch_size must be positive");
  require(source_epochs >= 0, ErrorCode::InvalidConfig, "source_epochs must be non-negative");
  require(adapt_epochs >= 0, ErrorCode::InvalidConfig, "adapt_epochs must be non-negative");
  require(!seeds.empty(), ErrorCode::InvalidConfig, "at least one seed is required");
  optim.validate();
  loss.validate();
}

namespace {

struct Optimizer {
  Vector flat;
  OptimState state;
  const OptimHyper& hyper;

  Optimizer(const ModelParams& params, const OptimHyper& h)
      : flat(flatten(params)), state(OptimState::zeros(flat.size())), hyper(h) {}

  void step(const Vector& grad) {
    auto next = adamw_step(flat, grad, state, hyper);
    flat = std::move(next.params);
    state = std::move(next.state);
  }
};

}  // namespace

ModelParams train_source(const ModelParams& params, const ModelConfig& model,
                         const TrainConfig& train, const Corpus& source, std::uint64_t seed,
                         std::vector<EpochLoss>* trajectory) {
  train.validate();
  model.validate();
  check_shapes(params, model);
  require(!source.empty(), ErrorCode::EmptyCorpus, "source corpus is empty");
  source.require_all_labels();

  LossConfig ce = train.loss;
  ce.objective = Objective::CeOnly;
  Optimizer opt(params, train.optim);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(source.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(train.batch_size);

  for (int epoch = 1; epoch <= train.source_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      TrainingBatch b;
      b.source_features.resize(source.dim(), static_cast<Eigen::Index>(end - start));
      for (std::size_t k = start; k < end; ++k) {
        const auto& inst = source.instances[order[k]];
        b.source_features.col(static_cast<Eigen::Index>(k - start)) = inst.features;
        b.source_labels.push_back(inst.label);
      }
      const auto lg = backward(unflatten(opt.flat, model), model, b, ce);
      epoch_loss += lg.loss.total;
      opt.step(lg.gradient);
    }
    if (trajectory) trajectory->push_back({epoch, epoch_loss / static_cast<double>(source.size())});
  }
  return unflatten(opt.flat, model);
}

ModelParams adapt_fewshot(const ModelParams& params, const ModelConfig& model,
                          const TrainConfig& train, const Episode& episode, std::uint64_t seed,
                          std::vector<EpochLoss>* trajectory) {
  train.validate();
  model.validate();
  check_shapes(params, model);
  if (train.method == Method::ColapXrcl && !episode.paired) {
    throw Error(ErrorCode::MethodEpisodeMismatch, "colap_xrcl needs a paired episode");
  }
  require(episode.target_instances.size() == episode.source_instances.size(),
          ErrorCode::ShapeMismatch, "episode sides differ in size");
  if (train.adapt_epochs == 0) return params;
  require(!episode.target_instances.empty(), ErrorCode::EmptyInput, "empty episode");

  LossConfig loss = train.loss;
  loss.objective = objective_for(train.method);
  Optimizer opt(params, train.optim);
  std::vector<ModelParams> checkpoints;
  std::mt19937_64 rng(seed);

  const std::size_t units = episode.target_instances.size();
  const auto dim = episode.target_instances.front().features.size();
  const std::size_t per_batch = static_cast<std::size_t>(std::max(1, train.batch_size / 2));
  std::vector<std::size_t> order(units);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= train.adapt_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < units; start += per_batch) {
      const std::size_t end = std::min(units, start + per_batch);
      const auto n = static_cast<Eigen::Index>(end - start);
      TrainingBatch b;
      b.paired = episode.paired;
      b.target_features.resize(dim, n);
      b.source_features.resize(dim, n);
      for (std::size_t k = start; k < end; ++k) {
        const auto col = static_cast<Eigen::Index>(k - start);
        const auto& t = episode.target_instances[order[k]];
        const auto& s = episode.source_instances[order[k]];
        b.target_features.col(col) = t.features;
        b.source_features.col(col) = s.features;
        b.target_labels.push_back(t.label);
        b.source_labels.push_back(s.label);
      }
      const auto lg = backward(unflatten(opt.flat, model), model, b, loss);
      epoch_loss += lg.loss.total;
      opt.step(lg.gradient);
    }
    if (trajectory) {
      trajectory->push_back({epoch, epoch_loss / static_cast<double>(2 * units)});
    }
    if (train.method == Method::Ca) checkpoints.push_back(unflatten(opt.flat, model));
  }

  if (train.method == Method::Ca) return average_checkpoints(checkpoints);
  return unflatten(opt.flat, model);
}

double evaluate(const ModelParams& params, const ModelConfig& model, const Corpus& test) {
  if (test.empty()) throw Error(ErrorCode::EmptyCorpus, "evaluation corpus is empty");
  const ForwardCache cache = forward(params, model, test.feature_matrix());
  const Matrix logits = score_labels_batch(params, cache.final_repr());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (predict_label(logits.col(static_cast<Eigen::Index>(i))) == test.instances[i].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

double alignment_report(const ModelParams& params, const ModelConfig& model,
                        const ParallelPairs& pairs) {
  if (pairs.size() == 0) throw Error(ErrorCode::EmptyInput, "alignment_report needs pairs");
  const Matrix t = forward(params, model, pairs.target_features).tapped(model.tap_layer);
  const Matrix s = forward(params, model, pairs.source_features).tapped(model.tap_layer);
  double total = 0.0;
  for (Eigen::Index i = 0; i < pairs.size(); ++i) total += cosine(t.col(i), s.col(i));
  return total / static_cast<double>(pairs.size());
}

Matrix tap_representations(const ModelParams& params, const ModelConfig& model,
                           const Corpus& corpus) {
  return forward(params, model, corpus.feature_matrix()).tapped(model.tap_layer);
}

ModelConfig resolve_model(const ExperimentConfig& config, const CorpusSet& data) {
  ModelConfig m = config.model;
  if ((m.input_dim != 0 && m.input_dim != data.source.dim()) ||
      (m.num_labels != 0 && m.num_labels != data.source.num_labels)) {
    throw Error(ErrorCode::ShapeMismatch, "model input_dim/num_labels disagree with the data");
  }
  m.input_dim = static_cast<int>(data.source.dim());
  m.num_labels = data.source.num_labels;
  if (!config.tap_layer_explicit) m.tap_layer = ModelConfig::default_tap_layer(m.num_layers);
  m.validate();
  return m;
}

namespace {

std::vector<std::string> ids_of(const std::vector<Instance>& instances) {
  std::vector<std::string> ids;
  ids.reserve(instances.size());
  for (const auto& inst : instances) ids.push_back(inst.id);
  return ids;
}

struct SeedOutcome {
  std::vector<SeedResult> rows;
  ModelParams source_model;
};

SeedOutcome run_seed(const ExperimentConfig& config, const ModelConfig& model,
                     const CorpusSet& data, const ParallelPairs& corpus_pairs,
                     std::uint64_t seed) {
  const TrainConfig& train = config.train;
  SeedOutcome out;
  std::vector<EpochLoss> source_losses;
  const ModelParams init = init_params(model, derive_seed(seed, {10}));
  out.source_model =
      train_source(init, model, train, data.source, derive_seed(seed, {11}), &source_losses);
  const double zero_shot = evaluate(out.source_model, model, data.target_test);

  std::optional<std::vector<double>> scores;
  if (config.episode.selection != SelectionMode::Random) {
    const Matrix reprs = tap_representations(out.source_model, model, data.source);
    const Matrix prototypes = class_prototypes(reprs, data.source.labels(), model.num_labels);
    scores = exemplar_scores(reprs, data.source.labels(), prototypes);
  }

  for (int k : config.episode.k_values) {
    const auto k_tag = static_cast<std::uint64_t>(k);
    Episode episode;
    if (scores) {
      const auto ids = select_exemplars(*scores, data.source, k, config.episode.selection,
                                        derive_seed(seed, {12, k_tag}));
      episode = episode_from_source_ids(ids, data.target_train, data.source);
    } else {
      episode = sample_episode(data.target_train, data.source, k, config.episode.paired,
                               derive_seed(seed, {12, k_tag}));
    }

    // Unpaired episodes have no positive pairs; fall back to the corpus pairs.
    const ParallelPairs pairs = episode.paired ? parallel_pairs(episode) : corpus_pairs;

    SeedResult row;
    row.seed = seed;
    row.k = k;
    row.zero_shot_accuracy = zero_shot;
    row.source_losses = source_losses;
    row.episode_source_ids = ids_of(episode.source_instances);
    row.episode_target_ids = ids_of(episode.target_instances);
    if (pairs.size() > 0) row.alignment_before = alignment_report(out.source_model, model, pairs);
    if (corpus_pairs.size() > 0) {
      row.heldout_alignment_before = alignment_report(out.source_model, model, corpus_pairs);
    }

    const ModelParams adapted = adapt_fewshot(out.source_model, model, train, episode,
                                              derive_seed(seed, {13, k_tag}), &row.adapt_losses);
    row.accuracy = evaluate(adapted, model, data.target_test);
    if (pairs.size() > 0) row.alignment_after = alignment_report(adapted, model, pairs);
    if (corpus_pairs.size() > 0) {
      row.heldout_alignment_after = alignment_report(adapted, model, corpus_pairs);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& config, const CorpusSet& data, int jobs) {
  config.train.validate();
  require(!config.episode.k_values.empty(), ErrorCode::InvalidConfig, "episode.K is empty");
  if (config.episode.selection != SelectionMode::Random && !config.episode.paired) {
    throw Error(ErrorCode::MethodEpisodeMismatch,
                "exemplar selection builds paired episodes; set episode.paired = true");
  }
  if (config.train.method == Method::ColapXrcl && !config.episode.paired) {
    throw Error(ErrorCode::MethodEpisodeMismatch, "colap_xrcl needs paired episodes");
  }
  data.source.validate();
  data.source.require_all_labels();
  data.target_train.validate(&data.source);
  data.target_test.validate();
  require(data.target_train.dim() == data.source.dim() && data.target_test.dim() == data.source.dim(),
          ErrorCode::DimensionMismatch, "corpora differ in feature dimension");
  require(data.target_train.num_labels == data.source.num_labels &&
              data.target_test.num_labels == data.source.num_labels,
          ErrorCode::ShapeMismatch, "corpora differ in label count");

  RunReport report;
  report.config = config;
  const ModelConfig model = resolve_model(config, data);
  report.config.model = model;
  report.config.tap_layer_explicit = true;

  const ParallelPairs corpus_pairs = parallel_pairs(data.target_train, data.source);
  const auto& seeds = config.train.seeds;
  std::vector<SeedOutcome> outcomes(seeds.size());
  const std::size_t width = static_cast<std::size_t>(std::max(1, jobs));
  for (std::size_t start = 0; start < seeds.size(); start += width) {
    const std::size_t end = std::min(seeds.size(), start + width);
    if (width == 1) {
      outcomes[start] = run_seed(config, model, data, corpus_pairs, seeds[start]);
      continue;
    }
    std::vector<std::future<SeedOutcome>> pending;
    for (std::size_t i = start; i < end; ++i) {
      pending.push_back(std::async(std::launch::async, run_seed, std::cref(config),
                                   std::cref(model), std::cref(data), std::cref(corpus_pairs),
                                   seeds[i]));
    }
    for (std::size_t i = start; i < end; ++i) outcomes[i] = pending[i - start].get();
  }

  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (auto& row : outcomes[i].rows) report.rows.push_back(std::move(row));
    report.source_checkpoints.emplace_back(seeds[i], std::move(outcomes[i].source_model));
  }

  for (int k : config.episode.k_values) {
    KSummary s;
    s.k = k;
    std::vector<double> acc;
    for (const auto& row : report.rows) {
      if (row.k != k) continue;
      acc.push_back(row.accuracy);
      s.mean_zero_shot_accuracy += row.zero_shot_accuracy;
      s.mean_alignment_before += row.alignment_before;
      s.mean_alignment_after += row.alignment_after;
    }
    const auto n = static_cast<double>(acc.size());
    s.mean_accuracy = std::accumulate(acc.begin(), acc.end(), 0.0) / n;
    s.mean_zero_shot_accuracy /= n;
    s.mean_alignment_before /= n;
    s.mean_alignment_after /= n;
    double ss = 0.0;
    for (double a : acc) ss += (a - s.mean_accuracy) * (a - s.mean_accuracy);
    s.std_accuracy = acc.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    report.summary.push_back(s);
  }
  return report;
}

}  // namespace colap
