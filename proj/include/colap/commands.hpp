// SPDX-License-Identifier: Apache-2.0
//
// The four CLI commands as library calls. Failures surface as CommandError
// naming the stage that failed.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "colap/experiment.hpp"

namespace colap {

class CommandError : public std::runtime_error {
 public:
  CommandError(std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct GlobalOptions {
  std::optional<std::uint64_t> seed_override;  // replaces train.seeds with this single seed
  int jobs = 1;
  std::optional<std::filesystem::path> out;  // replaces the configured output directory
};

/// Writes source.jsonl, target_train.jsonl, target_test.jsonl and manifest.json.
void cmd_generate(const std::filesystem::path& spec_file, const std::filesystem::path& out_dir);

/// Writes report.json, report.csv and checkpoints/source_seed_<seed>.json.
RunReport cmd_run(const std::filesystem::path& experiment_file, const GlobalOptions& opts);

struct SelectOptions {
  std::filesystem::path source_corpus;
  std::optional<std::filesystem::path> target_corpus;
  std::filesystem::path checkpoint;
  int k = 5;
  SelectionMode mode = SelectionMode::High;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
};

/// Writes selected.csv (id,label,score,target_id) and scores.csv
/// (id,label,score,selected) for every source instance.
std::vector<std::string> cmd_select(const SelectOptions& opts);

/// Writes ablation.csv with one row per (layer, K).
void cmd_ablate_layer(const std::filesystem::path& experiment_file, const std::vector<int>& layers,
                      const GlobalOptions& opts);

inline constexpr const char* kAblationCsvHeader =
    "tap_layer,method,K,mean_accuracy,std_accuracy,mean_alignment_before,mean_alignment_after";

}  // namespace colap
