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
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "json.hpp"

namespace orthoflux::runner {

struct KeyDoc {
  std::string key;  // section.key
  std::string default_value;
  std::string doc;
};

struct ExperimentInfo {
  std::string kind;
  std::string summary;
  std::string procedure;
  std::vector<KeyDoc> keys;
};

const std::vector<ExperimentInfo>& experiment_registry();
/// nullptr when unknown.
const ExperimentInfo* find_experiment(const std::string& kind);

struct Check {
  std::string name;
  double value = 0.0;
  /// "<=" or ">=".
  std::string relation;
  double tolerance = 0.0;
  bool pass = false;
};

struct Artifact {
  std::string file;
  std::string schema;
};

struct RunOptions {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

struct RunResult {
  std::string kind;
  std::string out_dir;
  std::vector<Check> checks;
  std::vector<Artifact> artifacts;
  nlohmann::json manifest;

  bool passed() const;
};

/// Column lists of every CSV schema, keyed "name/version".
const nlohmann::json& csv_schemas();

/// Resolves the config, runs the experiment and writes manifest.json,
/// summary.csv and the experiment's own files into the output directory.
/// Throws ConfigError for config problems and orthoflux::Error for
/// numerical failures.
RunResult run_experiment(const Config& cfg, const RunOptions& options);

}  // namespace orthoflux::runner
