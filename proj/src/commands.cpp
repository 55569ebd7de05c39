// SPDX-License-Identifier: Apache-2.0
#include "colap/commands.hpp"

#include <unordered_set>

#include "colap/corpus_io.hpp"

namespace colap {

namespace fs = std::filesystem;

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const CommandError&) {
    throw;
  } catch (const std::exception& e) {
    throw CommandError(name, e.what());
  }
}

ExperimentConfig load_experiment(const fs::path& file, const GlobalOptions& opts) {
  return stage("load config", [&] {
    ExperimentConfig c = experiment_from_json(read_json_file(file));
    if (opts.seed_override) c.train.seeds = {*opts.seed_override};
    require(opts.jobs >= 1, ErrorCode::InvalidConfig, "--jobs must be at least 1");
    return c;
  });
}

fs::path output_dir(const ExperimentConfig& c, const fs::path& experiment_file,
                    const GlobalOptions& opts) {
  if (opts.out) return *opts.out;
  const fs::path configured(c.output_dir);
  return configured.is_absolute() ? configured : experiment_file.parent_path() / configured;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char ch : s) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  return quoted + '"';
}

}  // namespace

void cmd_generate(const fs::path& spec_file, const fs::path& out_dir) {
  const SyntheticSpec spec =
      stage("load spec", [&] { return synthetic_spec_from_json(read_json_file(spec_file)); });
  const SyntheticCorpora corpora = stage("generate", [&] { return generate_synthetic(spec); });
  stage("write output", [&] {
    write_corpus(corpora.source, out_dir / "source.jsonl");
    write_corpus(corpora.target_train, out_dir / "target_train.jsonl");
    write_corpus(corpora.target_test, out_dir / "target_test.jsonl");
    const json manifest = {
        {"spec", to_json(spec)},
        {"seed", spec.seed},
        {"files",
         {{"source", "source.jsonl"}, {"target_train", "target_train.jsonl"}, {"target_test", "target_test.jsonl"}}},
        {"counts",
         {{"source", corpora.source.size()},
          {"target_train", corpora.target_train.size()},
          {"target_test", corpora.target_test.size()}}}};
    write_text_file(out_dir / "manifest.json", dump_json(manifest) + "\n");
  });
}

RunReport cmd_run(const fs::path& experiment_file, const GlobalOptions& opts) {
  const ExperimentConfig config = load_experiment(experiment_file, opts);
  const CorpusSet data =
      stage("load corpus", [&] { return load_corpora(config, experiment_file.parent_path()); });
  RunReport report = stage("run", [&] { return run_experiment(config, data, opts.jobs); });
  const fs::path out = output_dir(config, experiment_file, opts);
  stage("write output", [&] {
    write_text_file(out / "report.json", dump_json(report_to_json(report)) + "\n");
    write_text_file(out / "report.csv", report_to_csv(report));
    for (const auto& [seed, params] : report.source_checkpoints) {
      write_text_file(out / "checkpoints" / ("source_seed_" + std::to_string(seed) + ".json"),
                      dump_json(checkpoint_to_json(params, report.config.model), -1) + "\n");
    }
  });
  return report;
}

std::vector<std::string> cmd_select(const SelectOptions& opts) {
  const Checkpoint ckpt =
      stage("load checkpoint", [&] { return checkpoint_from_json(read_json_file(opts.checkpoint)); });
  const Corpus source = stage("load corpus", [&] { return read_corpus(opts.source_corpus, ckpt.model.num_labels); });
  std::optional<Corpus> target;
  if (opts.target_corpus) {
    target = stage("load corpus", [&] { return read_corpus(*opts.target_corpus, ckpt.model.num_labels); });
  }

  struct Selection {
    std::vector<double> scores;
    std::vector<std::string> ids;
  };
  const Selection sel = stage("select", [&] {
    if (source.dim() != ckpt.model.input_dim) {
      throw Error(ErrorCode::ShapeMismatch, "corpus dimension " + std::to_string(source.dim()) +
                                                " does not match checkpoint input_dim " +
                                                std::to_string(ckpt.model.input_dim));
    }
    const Matrix reprs = tap_representations(ckpt.params, ckpt.model, source);
    const auto labels = source.labels();
    const Matrix prototypes = class_prototypes(reprs, labels, ckpt.model.num_labels);
    Selection s;
    s.scores = exemplar_scores(reprs, labels, prototypes);
    s.ids = select_exemplars(s.scores, source, opts.k, opts.mode, opts.seed);
    return s;
  });

  stage("write output", [&] {
    const auto index = source.index_by_id();
    std::unordered_map<std::string, std::string> twin;
    if (target) {
      for (const auto& t : target->instances)
        if (t.parallel_id) twin.emplace(*t.parallel_id, t.id);
    }
    std::string selected = "id,label,score,target_id\n";
    for (const auto& id : sel.ids) {
      const std::size_t i = index.at(id);
      const auto it = twin.find(id);
      selected += csv_field(id) + ',' + std::to_string(source.instances[i].label) + ',' +
                  format_double(sel.scores[i]) + ',' +
                  (it == twin.end() ? std::string() : csv_field(it->second)) + '\n';
    }
    const std::unordered_set<std::string> chosen(sel.ids.begin(), sel.ids.end());
    std::string all = "id,label,score,selected\n";
    for (std::size_t i = 0; i < source.size(); ++i) {
      const auto& inst = source.instances[i];
      all += csv_field(inst.id) + ',' + std::to_string(inst.label) + ',' +
             format_double(sel.scores[i]) + ',' + (chosen.count(inst.id) ? "1" : "0") + '\n';
    }
    write_text_file(opts.out_dir / "selected.csv", selected);
    write_text_file(opts.out_dir / "scores.csv", all);
  });
  return sel.ids;
}

void cmd_ablate_layer(const fs::path& experiment_file, const std::vector<int>& layers,
                      const GlobalOptions& opts) {
  const ExperimentConfig base = load_experiment(experiment_file, opts);
  stage("load config", [&] {
    require(!layers.empty(), ErrorCode::InvalidConfig, "layer list is empty");
    for (int layer : layers) {
      if (layer < 1 || layer > base.model.num_layers) {
        throw Error(ErrorCode::LayerOutOfRange, "layer " + std::to_string(layer) + " outside [1, " +
                                                    std::to_string(base.model.num_layers) + "]");
      }
    }
  });
  const CorpusSet data =
      stage("load corpus", [&] { return load_corpora(base, experiment_file.parent_path()); });

  std::string csv = kAblationCsvHeader;
  csv += '\n';
  for (int layer : layers) {
    ExperimentConfig config = base;
    config.model.tap_layer = layer;
    config.tap_layer_explicit = true;
    const RunReport report = stage("run", [&] { return run_experiment(config, data, opts.jobs); });
    for (const auto& s : report.summary) {
      csv += std::to_string(layer) + ',' + std::string(to_string(config.train.method)) + ',' +
             std::to_string(s.k) + ',' + format_double(s.mean_accuracy) + ',' +
             format_double(s.std_accuracy) + ',' + format_double(s.mean_alignment_before) + ',' +
             format_double(s.mean_alignment_after) + '\n';
    }
  }
  stage("write output", [&] {
    write_text_file(output_dir(base, experiment_file, opts) / "ablation.csv", csv);
  });
}

}  // namespace colap
