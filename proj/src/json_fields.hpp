#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>

#include <json.hpp>

#include "enlmc/experiment.hpp"

namespace enlmc::detail {

static_assert(std::is_same_v<std::uint64_t, unsigned long> && std::is_same_v<std::size_t, unsigned long>);

[[noreturn]] inline void field_error(const std::string& path, const std::string& what) {
  throw ConfigError("config field '" + path + "': " + what);
}

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t k = 0; k < std::min(byte > 0 ? byte - 1 : 0, text.size()); ++k) {
    if (text[k] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

class FieldReader {
 public:
  FieldReader(const nlohmann::json& object, std::string prefix) : object_(object), prefix_(std::move(prefix)) {
    if (!object_.is_object()) field_error(prefix_.empty() ? "<root>" : prefix_, "expected an object");
  }

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }
  bool has(const std::string& key) const { return object_.contains(key); }
  const nlohmann::json& at(const std::string& key) {
    seen_.insert(key);
    return object_.at(key);
  }

  void read(const std::string& key, double& out) {
    if (!has(key)) return;
    const auto& v = at(key);
    if (!v.is_number()) field_error(path(key), "expected a number");
    out = v.get<double>();
  }
  void read(const std::string& key, std::size_t& out) {
    if (!has(key)) return;
    const auto& v = at(key);
    if (!v.is_number_unsigned()) field_error(path(key), "expected a non-negative integer");
    out = v.get<std::size_t>();
  }
  void read(const std::string& key, int& out) {
    if (!has(key)) return;
    const auto& v = at(key);
    if (!v.is_number_integer()) field_error(path(key), "expected an integer");
    out = v.get<int>();
  }
  void read(const std::string& key, bool& out) {
    if (!has(key)) return;
    const auto& v = at(key);
    if (!v.is_boolean()) field_error(path(key), "expected true or false");
    out = v.get<bool>();
  }
  void read(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const auto& v = at(key);
    if (!v.is_string()) field_error(path(key), "expected a string");
    out = v.get<std::string>();
  }

  void reject_unknown() const {
    for (const auto& [key, value] : object_.items()) {
      if (!seen_.contains(key)) field_error(path(key), "unknown field");
    }
  }

 private:
  const nlohmann::json& object_;
  std::string prefix_;
  std::set<std::string> seen_;
};

inline nlohmann::json parse_json(std::string_view text) {
  try {
    return nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    throw ConfigError("config syntax error at line " + std::to_string(line) + ", column " + std::to_string(column) +
                      ": " + e.what());
  }
}

}  // namespace enlmc::detail
