// SPDX-License-Identifier: Apache-2.0
//
// JSON output with every floating-point number written at 17 significant
// digits, so that files round-trip bit-exactly and are byte-stable.
#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

namespace colap {

using json = nlohmann::json;

std::string format_double(double value);

/// Like json::dump, but floats use format_double. Keys keep json's sorted order.
std::string dump_json(const json& value, int indent = 2);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Rejects any key of `object` not in `allowed`; `where` names the section.
void require_known_keys(const json& object, std::initializer_list<const char*> allowed,
                        const std::string& where);

}  // namespace colap
