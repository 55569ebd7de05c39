// SPDX-License-Identifier: Apache-2.0
//
// Corpus files: JSON Lines, one instance per line,
//   {"features":[...],"id":"...","label":0,"language":"...","parallel_id":"..."|null}
#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "colap/data.hpp"

namespace colap {

std::string instance_to_jsonl(const Instance& inst);
Instance instance_from_jsonl(const std::string& line);

void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// `num_labels` defaults to max(label) + 1 over the file.
Corpus read_corpus(const std::filesystem::path& path, std::optional<int> num_labels = std::nullopt);

}  // namespace colap
