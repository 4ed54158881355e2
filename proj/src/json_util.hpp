/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

// Small helpers for reading JSON documents with field-path diagnostics.

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "xflow/error.hpp"

namespace xflow::detail {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kSchema, path + ": " + what);
}

inline Json parse_json(std::string_view text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < text.size() && i < e.byte; ++i) {
      if (text[i] == '\n') ++line;
    }
    throw Error(ErrorCode::kSchema, what + ": line " + std::to_string(line) + ": " + e.what());
  }
}

std::string read_file(const std::string& path);

inline const Json& require(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(path + "." + key, "missing required field");
  return *it;
}

inline std::string get_string(const Json& obj, const char* key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_string()) schema_error(path + "." + key, "expected a string");
  return v.get<std::string>();
}

inline std::optional<std::string> opt_string(const Json& obj, const char* key,
                                             const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) schema_error(path + "." + key, "expected a string");
  return it->get<std::string>();
}

inline double get_number(const Json& obj, const char* key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_number()) schema_error(path + "." + key, "expected a number");
  return v.get<double>();
}

inline std::optional<double> opt_number(const Json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) schema_error(path + "." + key, "expected a number");
  return it->get<double>();
}

inline std::optional<int> opt_int(const Json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) schema_error(path + "." + key, "expected an integer");
  return it->get<int>();
}

inline bool opt_bool(const Json& obj, const char* key, const std::string& path, bool fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (!it->is_boolean()) schema_error(path + "." + key, "expected a boolean");
  return it->get<bool>();
}

inline const Json& get_array(const Json& obj, const char* key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_array()) schema_error(path + "." + key, "expected an array");
  return v;
}

inline std::string index_path(const std::string& path, const char* key, std::size_t i) {
  return path + "." + key + "[" + std::to_string(i) + "]";
}

}  // namespace xflow::detail
