// SPDX-License-Identifier: Apache-2.0
#include "colap/corpus_io.hpp"

#include <algorithm>
#include <fstream>

#include "colap/json_io.hpp"

namespace colap {

std::string instance_to_jsonl(const Instance& inst) {
  json j;
  j["id"] = inst.id;
  j["language"] = inst.language;
  j["label"] = inst.label;
  j["features"] = std::vector<double>(inst.features.data(), inst.features.data() + inst.features.size());
  j["parallel_id"] = inst.parallel_id ? json(*inst.parallel_id) : json(nullptr);
  return dump_json(j, -1);
}

Instance instance_from_jsonl(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
    require_known_keys(j, {"id", "language", "label", "features", "parallel_id"}, "corpus line");
    Instance inst;
    inst.id = j.at("id").get<std::string>();
    inst.language = j.at("language").get<std::string>();
    inst.label = j.at("label").get<int>();
    const auto values = j.at("features").get<std::vector<double>>();
    inst.features = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    const auto& pid = j.at("parallel_id");
    if (!pid.is_null()) inst.parallel_id = pid.get<std::string>();
    return inst;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed corpus line: ") + e.what());
  }
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::string text;
  for (const auto& inst : corpus.instances) {
    text += instance_to_jsonl(inst);
    text += '\n';
  }
  write_text_file(path, text);
}

Corpus read_corpus(const std::filesystem::path& path, std::optional<int> num_labels) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open corpus " + path.string());
  Corpus corpus;
  std::string line;
  int max_label = -1;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      corpus.instances.push_back(instance_from_jsonl(line));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    max_label = std::max(max_label, corpus.instances.back().label);
  }
  if (corpus.instances.empty()) throw Error(ErrorCode::EmptyCorpus, path.string() + " is empty");
  corpus.language = corpus.instances.front().language;
  corpus.num_labels = num_labels.value_or(max_label + 1);
  corpus.validate();
  return corpus;
}

}  // namespace colap
