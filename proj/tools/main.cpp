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

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "orthoflux/errors.hpp"
#include "orthoflux/models.hpp"
#include "orthoflux/parallel.hpp"
#include "orthoflux/version.hpp"
#include "runner/config.hpp"
#include "runner/experiments.hpp"

namespace {

using nlohmann::json;
namespace rn = orthoflux::runner;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitChecks = 4;

int report(int code, const json& err) {
  std::cerr << err.dump() << '\n';
  return code;
}

std::string error_type(const orthoflux::Error& e) {
  if (dynamic_cast<const orthoflux::StabilityViolation*>(&e)) return "StabilityViolation";
  if (dynamic_cast<const orthoflux::SingularMatrix*>(&e)) return "SingularMatrix";
  if (dynamic_cast<const orthoflux::NotHurwitz*>(&e)) return "NotHurwitz";
  if (dynamic_cast<const orthoflux::NonFiniteValue*>(&e)) return "NonFiniteValue";
  if (dynamic_cast<const orthoflux::DensityError*>(&e)) return "DensityError";
  if (dynamic_cast<const orthoflux::InsufficientSamples*>(&e)) return "InsufficientSamples";
  if (dynamic_cast<const orthoflux::InvalidArgument*>(&e)) return "InvalidArgument";
  return "Error";
}

int run(const std::string& path, const rn::RunOptions& options) {
  rn::RunResult result;
  try {
    const rn::Config cfg = rn::Config::load(path);
    result = rn::run_experiment(cfg, options);
  } catch (const rn::ConfigError& e) {
    json err = {{"error", "config"}, {"file", path}, {"message", e.what()}};
    if (!e.key().empty()) err["key"] = e.key();
    if (e.line() > 0) err["line"] = e.line();
    return report(kExitConfig, err);
  } catch (const orthoflux::Error& e) {
    return report(kExitNumerical,
                  {{"error", "numerical"}, {"type", error_type(e)}, {"message", e.what()}});
  } catch (const std::exception& e) {
    return report(kExitNumerical, {{"error", "runtime"}, {"message", e.what()}});
  }

  std::cout << result.kind << " -> " << result.out_dir << '\n';
  json failed = json::array();
  for (const rn::Check& c : result.checks) {
    std::cout << "  " << (c.pass ? "PASS " : "FAIL ") << std::left << std::setw(34) << c.name
              << std::setprecision(6) << c.value << ' ' << c.relation << ' ' << c.tolerance
              << '\n';
    if (!c.pass) failed.push_back(c.name);
  }
  if (!failed.empty()) {
    return report(kExitChecks, {{"error", "checks_failed"}, {"failed", failed}});
  }
  return kExitOk;
}

void list_models() {
  for (const orthoflux::ModelInfo& m : orthoflux::model_registry()) {
    std::cout << m.name << "\n    " << m.summary << '\n';
    for (const orthoflux::ParamDoc& p : m.params) {
      std::cout << "    " << std::left << std::setw(10) << p.name << " = " << std::setw(6)
                << p.default_value << "  " << p.doc << '\n';
    }
  }
}

int describe(const std::string& kind) {
  const rn::ExperimentInfo* e = rn::find_experiment(kind);
  if (!e) {
    return report(kExitConfig, {{"error", "usage"}, {"message", "unknown experiment '" + kind + "'"}});
  }
  std::cout << e->kind << ": " << e->summary << "\n\n" << e->procedure << "\n\nkeys:\n";
  for (const rn::KeyDoc& k : e->keys) {
    std::cout << "  " << std::left << std::setw(26) << k.key << std::setw(34)
              << ("[" + k.default_value + "]") << ' ' << k.doc << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orthoflux: Fokker-Planck grids, SDE ensembles and their thermodynamics"};
  app.set_version_flag("--version", std::string(orthoflux::kVersion));
  app.require_subcommand(1);

  std::string config_path, out_dir, kind;
  std::uint64_t seed = 0;
  int threads = 0;
  auto* run_cmd = app.add_subcommand("run", "run the experiment described by a config file");
  run_cmd->add_option("config", config_path, "config file")->required();
  auto* out_opt = run_cmd->add_option("--out", out_dir, "output directory");
  auto* seed_opt = run_cmd->add_option("--seed", seed, "override experiment.seed");
  run_cmd->add_option("--threads", threads, "worker threads (default: ORTHOFLUX_THREADS)")
      ->check(CLI::NonNegativeNumber);
  app.add_subcommand("list-models", "list the model zoo and its parameters");
  auto* describe_cmd = app.add_subcommand("describe-experiment", "explain an experiment kind");
  describe_cmd->add_option("kind", kind, "experiment kind")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(kExitConfig, {{"error", "usage"}, {"message", e.what()}});
  }

  if (*run_cmd) {
    rn::RunOptions options;
    if (*out_opt) options.out_dir = out_dir;
    if (*seed_opt) options.seed = seed;
    if (threads > 0) orthoflux::set_thread_count(threads);
    options.threads = threads;
    return run(config_path, options);
  }
  if (app.got_subcommand("list-models")) {
    list_models();
    return kExitOk;
  }
  return describe(kind);
}
