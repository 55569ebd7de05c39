// SPDX-License-Identifier: Apache-2.0
#include "colap/json_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "colap/error.hpp"

namespace colap {

std::string format_double(double value) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::NonFiniteEvaluation, "cannot serialize a non-finite number");
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  std::string s(buf, res.ptr);
  // Keep floats recognisable as floats when they happen to be integral.
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

namespace {

void dump_into(const json& v, int indent, int depth, std::string& out) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (v.type()) {
    case json::value_t::number_float:
      out += format_double(v.get<double>());
      return;
    case json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& item : v) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        dump_into(item, indent, depth + 1, out);
      }
      newline(depth);
      out += ']';
      return;
    }
    case json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump_into(it.value(), indent, depth + 1, out);
      }
      newline(depth);
      out += '}';
      return;
    }
    default:
      out += v.dump();
  }
}

}  // namespace

std::string dump_json(const json& value, int indent) {
  std::string out;
  dump_into(value, indent, 0, out);
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

void require_known_keys(const json& object, std::initializer_list<const char*> allowed,
                        const std::string& where) {
  if (!object.is_object()) throw Error(ErrorCode::InvalidConfig, where + " must be an object");
  for (auto it = object.begin(); it != object.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) known = known || it.key() == key;
    if (!known) throw Error(ErrorCode::InvalidConfig, "unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace colap
