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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "experiments.hpp"

using namespace orthoflux::runner;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("orthoflux_runner_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Experiments, RegistryDescribesEveryKind) {
  for (const char* kind : {"stationarity", "thermo-balance", "fig1-reversal", "ao-check",
                           "perturbation-check", "ensemble-vs-grid"}) {
    const ExperimentInfo* e = find_experiment(kind);
    ASSERT_NE(e, nullptr) << kind;
    EXPECT_FALSE(e->procedure.empty());
  }
  EXPECT_EQ(find_experiment("nope"), nullptr);
  EXPECT_NE(find_experiment("fig1-reversal")->procedure.find("+g"), std::string::npos);
}

TEST(Experiments, PerturbationRunWritesArtifacts) {
  const fs::path out = scratch("perturbation");
  const Config cfg = Config::parse_string(
      "[experiment]\nkind = perturbation-check\nseed = 3\n[model]\nname = rotational_ou\n"
      "[perturbation]\nlinear_models = 5\n");
  RunOptions opt;
  opt.out_dir = out.string();
  const RunResult r = run_experiment(cfg, opt);
  EXPECT_TRUE(r.passed());
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
  const std::string summary = slurp(out / "summary.csv");
  EXPECT_EQ(summary.rfind("experiment,check,value,relation,tolerance,pass\n", 0), 0u);
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m["experiment"], "perturbation-check");
  EXPECT_EQ(m["seed"], 3);
  EXPECT_TRUE(m.contains("version"));
  EXPECT_EQ(m["config"]["model"]["name"], "rotational_ou");
  EXPECT_TRUE(m["csv_schemas"].contains("summary/1"));

  // Same config, same bytes.
  const fs::path again = scratch("perturbation_again");
  opt.out_dir = again.string();
  run_experiment(cfg, opt);
  EXPECT_EQ(slurp(out / "summary.csv"), slurp(again / "summary.csv"));
  EXPECT_EQ(slurp(out / "perturbation.csv"), slurp(again / "perturbation.csv"));
  fs::remove_all(out);
  fs::remove_all(again);
}

TEST(Experiments, ConfigProblemsNameTheKey) {
  const auto key_of = [](const std::string& text) {
    try {
      RunOptions opt;
      opt.out_dir = scratch("bad").string();
      run_experiment(Config::parse_string(text), opt);
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(key_of("[experiment]\nkind = warp\n[model]\nname = rotational_ou\n"), "experiment.kind");
  EXPECT_EQ(key_of("[experiment]\nkind = stationarity\n[model]\nname = nope\n"), "model.name");
  EXPECT_EQ(key_of("[experiment]\nkind = stationarity\n[model]\nname = rotational_ou\n"
                   "gamma = -1\n"),
            "model.gamma");
  EXPECT_EQ(key_of("[experiment]\nkind = stationarity\n[model]\nname = rotational_ou\n"
                   "[grid]\ncells = 4\n"),
            "grid.cells");
  EXPECT_EQ(key_of("[experiment]\nkind = ao-check\n[ao]\ncolour = red\n"), "ao.colour");
  // ao-check builds its own models, so a [model] section is unknown.
  EXPECT_EQ(key_of("[experiment]\nkind = ao-check\n[model]\nname = rotational_ou\n"),
            "model.name");
  fs::remove_all(scratch("bad"));
}
