// SPDX-License-Identifier: Apache-2.0
#include "colap/experiment.hpp"

#include "colap/corpus_io.hpp"

namespace colap {

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

json to_json(const ModelConfig& m) {
  return {{"input_dim", m.input_dim},   {"hidden_dim", m.hidden_dim},
          {"num_layers", m.num_layers}, {"num_labels", m.num_labels},
          {"tap_layer", m.tap_layer},   {"activation", std::string(to_string(m.activation))}};
}

ModelConfig model_from_json(const json& j, bool* tap_explicit) {
  require_known_keys(j, {"input_dim", "hidden_dim", "num_layers", "num_labels", "tap_layer", "activation"},
                     "model");
  ModelConfig m;
  m.input_dim = get_or(j, "input_dim", 0);
  m.hidden_dim = j.at("hidden_dim").get<int>();
  m.num_layers = j.at("num_layers").get<int>();
  m.num_labels = get_or(j, "num_labels", 0);
  m.activation = activation_from_string(get_or<std::string>(j, "activation", "tanh"));
  if (tap_explicit) *tap_explicit = j.contains("tap_layer");
  m.tap_layer = get_or(j, "tap_layer", ModelConfig::default_tap_layer(m.num_layers));
  return m;
}

json to_json(const OptimHyper& h) {
  return {{"learning_rate", h.learning_rate}, {"beta1", h.beta1}, {"beta2", h.beta2},
          {"epsilon", h.epsilon},             {"weight_decay", h.weight_decay}};
}

OptimHyper optim_from_json(const json& j) {
  require_known_keys(j, {"learning_rate", "beta1", "beta2", "epsilon", "weight_decay"}, "train.optim");
  OptimHyper h;
  h.learning_rate = get_or(j, "learning_rate", h.learning_rate);
  h.beta1 = get_or(j, "beta1", h.beta1);
  h.beta2 = get_or(j, "beta2", h.beta2);
  h.epsilon = get_or(j, "epsilon", h.epsilon);
  h.weight_decay = get_or(j, "weight_decay", h.weight_decay);
  h.validate();
  return h;
}

json to_json(const LossConfig& l) {
  return {{"temperature", l.temperature},
          {"phi_mode", std::string(to_string(l.phi_mode))},
          {"denominator_mode", std::string(to_string(l.denominator_mode))}};
}

LossConfig loss_from_json(const json& j) {
  require_known_keys(j, {"temperature", "phi_mode", "denominator_mode"}, "train.loss");
  LossConfig l;
  l.temperature = get_or(j, "temperature", l.temperature);
  l.phi_mode = phi_mode_from_string(get_or<std::string>(j, "phi_mode", "sum"));
  l.denominator_mode =
      denominator_mode_from_string(get_or<std::string>(j, "denominator_mode", "paper"));
  l.validate();
  return l;
}

json to_json(const TrainConfig& t) {
  return {{"batch_size", t.batch_size},
          {"source_epochs", t.source_epochs},
          {"adapt_epochs", t.adapt_epochs},
          {"method", std::string(to_string(t.method))},
          {"seeds", t.seeds},
          {"optim", to_json(t.optim)},
          {"loss", to_json(t.loss)}};
}

TrainConfig train_from_json(const json& j) {
  require_known_keys(j, {"batch_size", "source_epochs", "adapt_epochs", "method", "seeds", "optim", "loss"},
                     "train");
  TrainConfig t;
  t.batch_size = get_or(j, "batch_size", t.batch_size);
  t.source_epochs = get_or(j, "source_epochs", t.source_epochs);
  t.adapt_epochs = get_or(j, "adapt_epochs", t.adapt_epochs);
  t.method = method_from_string(get_or<std::string>(j, "method", "ft"));
  t.seeds = get_or(j, "seeds", t.seeds);
  if (j.contains("optim")) t.optim = optim_from_json(j.at("optim"));
  if (j.contains("loss")) t.loss = loss_from_json(j.at("loss"));
  t.loss.objective = objective_for(t.method);
  t.validate();
  return t;
}

json to_json(const EpisodeConfig& e) {
  return {{"K", e.k_values},
          {"paired", e.paired},
          {"selection", std::string(to_string(e.selection))}};
}

EpisodeConfig episode_from_json(const json& j) {
  require_known_keys(j, {"K", "paired", "selection"}, "episode");
  EpisodeConfig e;
  if (j.contains("K")) {
    const auto& k = j.at("K");
    e.k_values = k.is_array() ? k.get<std::vector<int>>() : std::vector<int>{k.get<int>()};
  }
  for (int k : e.k_values) require(k >= 1, ErrorCode::InvalidConfig, "episode.K must be positive");
  require(!e.k_values.empty(), ErrorCode::InvalidConfig, "episode.K is empty");
  e.paired = get_or(j, "paired", e.paired);
  e.selection = selection_mode_from_string(get_or<std::string>(j, "selection", "random"));
  return e;
}

}  // namespace

SyntheticSpec synthetic_spec_from_json(const json& j) {
  try {
    require_known_keys(j, {"dim", "num_labels", "train_size", "test_size", "source_noise",
                           "target_noise", "rotation_angle", "seed"},
                       "synthetic");
    SyntheticSpec s;
    s.dim = j.at("dim").get<int>();
    s.num_labels = j.at("num_labels").get<int>();
    s.train_size = j.at("train_size").get<int>();
    s.test_size = j.at("test_size").get<int>();
    s.source_noise = j.at("source_noise").get<double>();
    s.target_noise = j.at("target_noise").get<double>();
    s.rotation_angle = j.at("rotation_angle").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("synthetic spec: ") + e.what());
  }
}

json to_json(const SyntheticSpec& s) {
  return {{"dim", s.dim},
          {"num_labels", s.num_labels},
          {"train_size", s.train_size},
          {"test_size", s.test_size},
          {"source_noise", s.source_noise},
          {"target_noise", s.target_noise},
          {"rotation_angle", s.rotation_angle},
          {"seed", s.seed}};
}

ExperimentConfig experiment_from_json(const json& j) {
  try {
    require_known_keys(j, {"synthetic", "corpus", "model", "train", "episode", "output_dir"},
                       "experiment");
    ExperimentConfig c;
    require(j.contains("synthetic") != j.contains("corpus"), ErrorCode::InvalidConfig,
            "experiment needs exactly one of 'synthetic' or 'corpus'");
    if (j.contains("synthetic")) c.synthetic = synthetic_spec_from_json(j.at("synthetic"));
    if (j.contains("corpus")) {
      const auto& cj = j.at("corpus");
      require_known_keys(cj, {"source", "target_train", "target_test"}, "corpus");
      c.corpus = CorpusPaths{cj.at("source").get<std::string>(),
                             cj.at("target_train").get<std::string>(),
                             cj.at("target_test").get<std::string>()};
    }
    c.model = model_from_json(j.at("model"), &c.tap_layer_explicit);
    c.train = j.contains("train") ? train_from_json(j.at("train")) : TrainConfig{};
    c.episode = j.contains("episode") ? episode_from_json(j.at("episode")) : EpisodeConfig{};
    c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir);
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("experiment file: ") + e.what());
  }
}

json to_json(const ExperimentConfig& c) {
  json j;
  if (c.synthetic) j["synthetic"] = to_json(*c.synthetic);
  if (c.corpus) {
    j["corpus"] = {{"source", c.corpus->source},
                   {"target_train", c.corpus->target_train},
                   {"target_test", c.corpus->target_test}};
  }
  j["model"] = to_json(c.model);
  if (!c.tap_layer_explicit) j["model"].erase("tap_layer");
  if (c.model.input_dim == 0) j["model"].erase("input_dim");
  if (c.model.num_labels == 0) j["model"].erase("num_labels");
  j["train"] = to_json(c.train);
  j["episode"] = to_json(c.episode);
  j["output_dir"] = c.output_dir;
  return j;
}

CorpusSet load_corpora(const ExperimentConfig& config, const std::filesystem::path& base_dir) {
  if (config.synthetic) {
    auto generated = generate_synthetic(*config.synthetic);
    return {std::move(generated.source), std::move(generated.target_train),
            std::move(generated.target_test)};
  }
  require(config.corpus.has_value(), ErrorCode::InvalidConfig, "no data source configured");
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  CorpusSet set;
  set.source = read_corpus(resolve(config.corpus->source));
  const int labels = set.source.num_labels;
  set.target_train = read_corpus(resolve(config.corpus->target_train), labels);
  set.target_test = read_corpus(resolve(config.corpus->target_test), labels);
  return set;
}

json report_to_json(const RunReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json source_loss = json::array();
    for (const auto& e : r.source_losses) source_loss.push_back({{"epoch", e.epoch}, {"loss", e.loss}});
    json adapt_loss = json::array();
    for (const auto& e : r.adapt_losses) adapt_loss.push_back({{"epoch", e.epoch}, {"loss", e.loss}});
    rows.push_back({{"seed", r.seed},
                    {"K", r.k},
                    {"accuracy", r.accuracy},
                    {"zero_shot_accuracy", r.zero_shot_accuracy},
                    {"alignment_before", r.alignment_before},
                    {"alignment_after", r.alignment_after},
                    {"heldout_alignment_before", r.heldout_alignment_before},
                    {"heldout_alignment_after", r.heldout_alignment_after},
                    {"source_loss", source_loss},
                    {"adapt_loss", adapt_loss},
                    {"episode_source_ids", r.episode_source_ids},
                    {"episode_target_ids", r.episode_target_ids}});
  }
  json summary = json::array();
  for (const auto& s : report.summary) {
    summary.push_back({{"K", s.k},
                       {"mean_accuracy", s.mean_accuracy},
                       {"std_accuracy", s.std_accuracy},
                       {"mean_zero_shot_accuracy", s.mean_zero_shot_accuracy},
                       {"mean_alignment_before", s.mean_alignment_before},
                       {"mean_alignment_after", s.mean_alignment_after}});
  }
  return {{"config", to_json(report.config)},
          {"method", std::string(to_string(report.config.train.method))},
          {"tap_layer", report.config.model.tap_layer},
          {"per_seed", rows},
          {"summary", summary}};
}

std::string report_to_csv(const RunReport& report) {
  std::string out = kReportCsvHeader;
  out += '\n';
  const std::string method(to_string(report.config.train.method));
  for (const auto& r : report.rows) {
    out += std::to_string(r.seed) + ',' + method + ',' + std::to_string(r.k) + ',' +
           std::to_string(report.config.model.tap_layer) + ',' + format_double(r.accuracy) + ',' +
           format_double(r.alignment_before) + ',' + format_double(r.alignment_after) + '\n';
  }
  return out;
}

json checkpoint_to_json(const ModelParams& params, const ModelConfig& model) {
  check_shapes(params, model);
  const Vector flat = flatten(params);
  return {{"format", "colap-checkpoint"},
          {"version", 1},
          {"model", to_json(model)},
          {"num_params", flat.size()},
          {"params", std::vector<double>(flat.data(), flat.data() + flat.size())}};
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    require_known_keys(j, {"format", "version", "model", "num_params", "params"}, "checkpoint");
    require(j.at("format").get<std::string>() == "colap-checkpoint", ErrorCode::InvalidConfig,
            "not a checkpoint file");
    require(j.at("version").get<int>() == 1, ErrorCode::InvalidConfig, "unsupported checkpoint version");
    Checkpoint c;
    c.model = model_from_json(j.at("model"), nullptr);
    c.model.validate();
    const auto values = j.at("params").get<std::vector<double>>();
    require(static_cast<Eigen::Index>(values.size()) == j.at("num_params").get<Eigen::Index>(),
            ErrorCode::ShapeMismatch, "checkpoint num_params does not match the params array");
    c.params = unflatten(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())),
                         c.model);
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("checkpoint: ") + e.what());
  }
}

}  // namespace colap
