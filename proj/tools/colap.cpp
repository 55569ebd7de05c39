// SPDX-License-Identifier: Apache-2.0
//
// colap: few-shot cross-lingual adaptation experiments on synthetic or
// precomputed embedding corpora.

#include <iostream>

#include "CLI11.hpp"
#include "colap/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Contrastive few-shot cross-lingual adaptation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  colap::GlobalOptions global;
  std::uint64_t seed_override = 0;
  std::string out;
  auto* seed_opt = app.add_option("--seed-override", seed_override,
                                  "Run a single seed instead of the configured list");
  app.add_option("--jobs", global.jobs, "Seeds run concurrently")->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--out", out, "Output directory");

  std::string spec_file;
  auto* generate = app.add_subcommand("generate", "Write a synthetic parallel corpus");
  generate->add_option("spec", spec_file, "Synthetic spec JSON")->required()->check(CLI::ExistingFile);

  std::string experiment_file;
  auto* run = app.add_subcommand("run", "Run an experiment file");
  run->add_option("experiment", experiment_file, "Experiment JSON")->required();

  colap::SelectOptions select_opts;
  std::string source_corpus, target_corpus, checkpoint, mode = "high";
  auto* select = app.add_subcommand("select", "Score and select K exemplars with a checkpoint");
  select->add_option("--source", source_corpus, "Source-language corpus (JSONL)")->required();
  select->add_option("--target", target_corpus, "Target-language corpus, for twin ids");
  select->add_option("--checkpoint", checkpoint, "Source-fine-tuned checkpoint")->required();
  select->add_option("-K,--k", select_opts.k, "Number of exemplars")->check(CLI::PositiveNumber);
  select->add_option("--mode", mode, "high | low | random")
      ->check(CLI::IsMember({"high", "low", "random"}));
  select->add_option("--seed", select_opts.seed, "Seed for surplus classes and random mode");

  std::vector<int> layers;
  auto* ablate = app.add_subcommand("ablate-layer", "Sweep the contrastive tap layer");
  ablate->add_option("experiment", experiment_file, "Experiment JSON")->required();
  ablate->add_option("--layers", layers, "Layer indices (1-based)")->required()->delimiter(',');

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) global.seed_override = seed_override;
  if (*out_opt) global.out = out;

  try {
    if (*generate) {
      colap::cmd_generate(spec_file, global.out.value_or("."));
    } else if (*run) {
      const auto report = colap::cmd_run(experiment_file, global);
      for (const auto& s : report.summary) {
        std::cout << "K=" << s.k << " mean_accuracy=" << colap::format_double(s.mean_accuracy)
                  << " std=" << colap::format_double(s.std_accuracy) << '\n';
      }
    } else if (*select) {
      select_opts.source_corpus = source_corpus;
      if (!target_corpus.empty()) select_opts.target_corpus = target_corpus;
      select_opts.checkpoint = checkpoint;
      select_opts.mode = colap::selection_mode_from_string(mode);
      select_opts.out_dir = global.out.value_or(".");
      for (const auto& id : colap::cmd_select(select_opts)) std::cout << id << '\n';
    } else if (*ablate) {
      colap::cmd_ablate_layer(experiment_file, layers, global);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
