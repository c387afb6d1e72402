// Copyright 2026 The OrthoFlux Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace orthoflux::runner {

/// A config problem tied to a key ("section.key") and, when known, a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string key, int line = 0)
      : std::runtime_error(what), key_(std::move(key)), line_(line) {}
  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

/// Grammar, one statement per line:
///   # comment            (also after a value)
///   [section]
///   key = value
/// Keys and section names are [A-Za-z0-9_-]+. Keys before the first
/// section header and repeated keys are errors.
class Config {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static Config parse(std::istream& in);
  static Config parse_string(const std::string& text);
  static Config load(const std::string& path);

  bool has_section(const std::string& section) const;
  const Entry* find(const std::string& section, const std::string& key) const;
  /// Keys of a section in file order.
  std::vector<std::string> keys(const std::string& section) const;
  std::vector<std::string> sections() const { return order_; }

 private:
  std::map<std::string, std::map<std::string, Entry>> data_;
  std::map<std::string, std::vector<std::string>> key_order_;
  std::vector<std::string> order_;
};

/// Typed, range-checked reads that record the resolved value of every key
/// (for the manifest) and remember which keys were consumed, so leftovers
/// can be reported as unknown.
class Resolver {
 public:
  explicit Resolver(const Config& cfg) : cfg_(&cfg) {}

  std::string text(const std::string& section, const std::string& key,
                   const std::string& fallback);
  std::string required_text(const std::string& section, const std::string& key);
  std::string choice(const std::string& section, const std::string& key,
                     const std::string& fallback,
                     const std::vector<std::string>& allowed);
  double number(const std::string& section, const std::string& key, double fallback,
                double lo, double hi);
  std::int64_t integer(const std::string& section, const std::string& key,
                       std::int64_t fallback, std::int64_t lo, std::int64_t hi);
  std::uint64_t seed(const std::string& section, const std::string& key,
                     std::uint64_t fallback);
  bool flag(const std::string& section, const std::string& key, bool fallback);
  /// Whitespace-separated numbers; an empty fallback makes the key required.
  std::vector<double> numbers(const std::string& section, const std::string& key,
                              const std::vector<double>& fallback, std::size_t min_count,
                              std::size_t max_count);

  /// Marks a value supplied from outside the file (a CLI override).
  void set_resolved(const std::string& section, const std::string& key,
                    nlohmann::json value);
  /// Consumes a key without typing it.
  void consume(const std::string& section, const std::string& key);

  /// Throws ConfigError for the first key never read.
  void finish() const;

  const nlohmann::json& resolved() const noexcept { return resolved_; }
  const Config& config() const noexcept { return *cfg_; }

 private:
  const Config::Entry* take(const std::string& section, const std::string& key);
  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& message) const;

  const Config* cfg_;
  std::set<std::pair<std::string, std::string>> used_;
  nlohmann::json resolved_ = nlohmann::json::object();
};

}  // namespace orthoflux::runner
