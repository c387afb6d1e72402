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

#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace orthoflux::runner {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

std::string where(int line) { return line > 0 ? "line " + std::to_string(line) + ": " : ""; }

bool parse_double(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

Config Config::parse(std::istream& in) {
  Config cfg;
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(where(line) + "unterminated section header", "", line);
      section = trim(s.substr(1, s.size() - 2));
      if (!valid_name(section)) {
        throw ConfigError(where(line) + "bad section name '" + section + "'", section, line);
      }
      if (cfg.data_.count(section)) {
        throw ConfigError(where(line) + "section [" + section + "] appears twice", section, line);
      }
      cfg.data_[section];
      cfg.order_.push_back(section);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where(line) + "expected 'key = value'", "", line);
    }
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (!valid_name(key)) throw ConfigError(where(line) + "bad key '" + key + "'", key, line);
    if (section.empty()) {
      throw ConfigError(where(line) + "key '" + key + "' appears before any [section]", key, line);
    }
    const std::string full = section + "." + key;
    if (value.empty()) throw ConfigError(where(line) + "key '" + full + "' has no value", full, line);
    auto& sec = cfg.data_[section];
    if (sec.count(key)) throw ConfigError(where(line) + "key '" + full + "' is repeated", full, line);
    sec[key] = Entry{value, line};
    cfg.key_order_[section].push_back(key);
  }
  return cfg;
}

Config Config::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'", "");
  return parse(in);
}

bool Config::has_section(const std::string& section) const { return data_.count(section) > 0; }

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
  const auto s = data_.find(section);
  if (s == data_.end()) return nullptr;
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

std::vector<std::string> Config::keys(const std::string& section) const {
  const auto it = key_order_.find(section);
  return it == key_order_.end() ? std::vector<std::string>{} : it->second;
}

// ------------------------------------------------------------------ Resolver

const Config::Entry* Resolver::take(const std::string& section, const std::string& key) {
  used_.insert({section, key});
  return cfg_->find(section, key);
}

void Resolver::fail(const std::string& section, const std::string& key,
                    const std::string& message) const {
  const Config::Entry* e = cfg_->find(section, key);
  const int line = e ? e->line : 0;
  throw ConfigError(where(line) + section + "." + key + ": " + message, section + "." + key, line);
}

std::string Resolver::text(const std::string& section, const std::string& key,
                           const std::string& fallback) {
  const Config::Entry* e = take(section, key);
  const std::string v = e ? e->value : fallback;
  resolved_[section][key] = v;
  return v;
}

std::string Resolver::required_text(const std::string& section, const std::string& key) {
  const Config::Entry* e = take(section, key);
  if (!e) fail(section, key, "is required");
  resolved_[section][key] = e->value;
  return e->value;
}

std::string Resolver::choice(const std::string& section, const std::string& key,
                             const std::string& fallback,
                             const std::vector<std::string>& allowed) {
  const std::string v = text(section, key, fallback);
  if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    fail(section, key, "'" + v + "' is not one of: " + list);
  }
  return v;
}

double Resolver::number(const std::string& section, const std::string& key, double fallback,
                        double lo, double hi) {
  const Config::Entry* e = take(section, key);
  double v = fallback;
  if (e && !parse_double(e->value, v)) fail(section, key, "'" + e->value + "' is not a number");
  if (!std::isfinite(v) || v < lo || v > hi) {
    std::ostringstream os;
    os << "value " << v << " is outside [" << lo << ", " << hi << "]";
    fail(section, key, os.str());
  }
  resolved_[section][key] = v;
  return v;
}

std::int64_t Resolver::integer(const std::string& section, const std::string& key,
                               std::int64_t fallback, std::int64_t lo, std::int64_t hi) {
  const Config::Entry* e = take(section, key);
  std::int64_t v = fallback;
  if (e) {
    const char* end = e->value.data() + e->value.size();
    const auto [ptr, ec] = std::from_chars(e->value.data(), end, v);
    if (ec != std::errc() || ptr != end) fail(section, key, "'" + e->value + "' is not an integer");
  }
  if (v < lo || v > hi) {
    fail(section, key, "value " + std::to_string(v) + " is outside [" + std::to_string(lo) +
                           ", " + std::to_string(hi) + "]");
  }
  resolved_[section][key] = v;
  return v;
}

std::uint64_t Resolver::seed(const std::string& section, const std::string& key,
                             std::uint64_t fallback) {
  const Config::Entry* e = take(section, key);
  std::uint64_t v = fallback;
  if (e) {
    const char* end = e->value.data() + e->value.size();
    const auto [ptr, ec] = std::from_chars(e->value.data(), end, v);
    if (ec != std::errc() || ptr != end) {
      fail(section, key, "'" + e->value + "' is not a nonnegative integer");
    }
  }
  resolved_[section][key] = v;
  return v;
}

bool Resolver::flag(const std::string& section, const std::string& key, bool fallback) {
  const Config::Entry* e = take(section, key);
  bool v = fallback;
  if (e) {
    if (e->value == "true" || e->value == "yes" || e->value == "1") {
      v = true;
    } else if (e->value == "false" || e->value == "no" || e->value == "0") {
      v = false;
    } else {
      fail(section, key, "'" + e->value + "' is not a boolean (true/false)");
    }
  }
  resolved_[section][key] = v;
  return v;
}

std::vector<double> Resolver::numbers(const std::string& section, const std::string& key,
                                      const std::vector<double>& fallback,
                                      std::size_t min_count, std::size_t max_count) {
  const Config::Entry* e = take(section, key);
  std::vector<double> v = fallback;
  if (e) {
    v.clear();
    std::istringstream is(e->value);
    std::string tok;
    while (is >> tok) {
      double d;
      if (!parse_double(tok, d) || !std::isfinite(d)) {
        fail(section, key, "'" + tok + "' is not a finite number");
      }
      v.push_back(d);
    }
  }
  if (v.size() < min_count || v.size() > max_count) {
    fail(section, key, "expected " + std::to_string(min_count) + " to " +
                           std::to_string(max_count) + " numbers, got " +
                           std::to_string(v.size()));
  }
  resolved_[section][key] = v;
  return v;
}

void Resolver::set_resolved(const std::string& section, const std::string& key,
                            nlohmann::json value) {
  used_.insert({section, key});
  resolved_[section][key] = std::move(value);
}

void Resolver::consume(const std::string& section, const std::string& key) {
  used_.insert({section, key});
}

void Resolver::finish() const {
  for (const std::string& section : cfg_->sections()) {
    for (const std::string& key : cfg_->keys(section)) {
      if (!used_.count({section, key})) {
        fail(section, key, "unknown key for this experiment");
      }
    }
  }
}

}  // namespace orthoflux::runner
