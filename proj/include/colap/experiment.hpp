// SPDX-License-Identifier: Apache-2.0
//
// File schemas: synthetic spec, experiment file, run report (JSON + CSV) and
// model checkpoints. Unknown keys anywhere in an input file are rejected.
#pragma once

#include <filesystem>
#include <string>
#include <utility>

#include "colap/harness.hpp"
#include "colap/json_io.hpp"

namespace colap {

SyntheticSpec synthetic_spec_from_json(const json& j);
json to_json(const SyntheticSpec& spec);

ExperimentConfig experiment_from_json(const json& j);
json to_json(const ExperimentConfig& config);

/// Corpus paths are resolved against `base_dir` when relative.
CorpusSet load_corpora(const ExperimentConfig& config, const std::filesystem::path& base_dir);

inline constexpr const char* kReportCsvHeader =
    "seed,method,K,tap_layer,accuracy,alignment_before,alignment_after";

json report_to_json(const RunReport& report);
std::string report_to_csv(const RunReport& report);

struct Checkpoint {
  ModelConfig model;
  ModelParams params;
};

json checkpoint_to_json(const ModelParams& params, const ModelConfig& model);
Checkpoint checkpoint_from_json(const json& j);

}  // namespace colap
