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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orthoflux/fields.hpp"
#include "orthoflux/grid.hpp"
#include "orthoflux/rng.hpp"

namespace orthoflux {

/// Draws exact samples of exp(-phi) restricted to the box by rejection:
/// a cell is proposed with weight exp(-phi_c) M_c, a point uniformly inside
/// it, and accepted with probability exp(-(phi(x) - phi_c)) / M_c where
/// M_c is 1.25 times the largest corner ratio. Envelope misses are clamped
/// and counted.
class StationarySampler {
 public:
  StationarySampler(const Grid& grid, ScalarField phi);
  void sample(CounterStream& rng, PointOut out, std::size_t& violations) const;

 private:
  Grid grid_;
  ScalarField phi_;
  Vector phi_c_;
  Vector envelope_;
  std::vector<double> cdf_;
};

/// Piecewise-constant sampling of a grid density.
class DensitySampler {
 public:
  explicit DensitySampler(const DensityField& u);
  void sample(CounterStream& rng, PointOut out) const;

 private:
  Grid grid_;
  std::vector<double> cdf_;
};

enum class InitialKind { point, gaussian, stationary, density };

struct InitialCondition {
  InitialKind kind = InitialKind::point;
  Vector point;
  Vector mean;
  Matrix cov;
  /// Grid for stationary rejection sampling.
  std::optional<Grid> grid;
  std::shared_ptr<const DensityField> density;

  static InitialCondition at(Vector x);
  static InitialCondition gaussian(Vector mu, Matrix cov);
  static InitialCondition stationary(Grid grid);
  static InitialCondition from_density(DensityField u);
};

struct SimConfig {
  double dt = 1e-2;
  double T = 1.0;
  std::size_t n_paths = 1;
  std::uint64_t seed = 0;
  InitialCondition initial;
  /// Record steps that are multiples of record_every (step 0 included),
  /// unless record_steps is nonempty.
  std::size_t record_every = 1;
  std::vector<std::size_t> record_steps;
  /// Path i draws from stream stream_offset + i.
  std::uint64_t stream_offset = 0;
  int threads = 0;

  std::size_t n_steps() const;
};

/// Recorded states, laid out [path][record][dim].
struct Ensemble {
  std::string model_name;
  int dim = 0;
  std::size_t n_paths = 0;
  double dt = 0.0;
  std::vector<std::size_t> steps;
  std::vector<double> times;
  std::vector<double> data;
  std::size_t reflections = 0;
  std::size_t envelope_violations = 0;

  std::size_t records() const noexcept { return steps.size(); }
  std::span<const double> state(std::size_t path, std::size_t record) const {
    return {data.data() + (path * records() + record) * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
};

/// Euler-Maruyama with the Ito drift g + eta, sqrt(2 D dt) noise from a
/// symmetric square root and specular reflection at the box. Bit-exact for a
/// fixed (seed, config, model) regardless of thread count. Throws
/// NonFiniteValue naming the path and step.
Ensemble simulate(const FieldModel& model, const SimConfig& cfg);

/// (phi, -g, D).
FieldModel reverse_model(const FieldModel& model);

/// Specular reflection into [lower, upper]; returns the number of bounces.
std::size_t reflect(const Box& box, PointOut x);

struct Moments {
  Vector mean;
  Matrix cov;
};
Moments ensemble_moments(const Ensemble& ens, std::size_t record);

/// Fraction of paths in each cell of `grid` at a record.
Vector histogram_masses(const Ensemble& ens, std::size_t record,
                        const Grid& grid);

/// Masses of the coarse cells formed by `factor`^dim blocks of fine cells.
Vector coarse_masses(const DensityField& fine, int factor);

struct JointTestConfig {
  double t_lag = 1.0;
  int bins_per_axis = 4;
  double dt = 5e-3;
  std::size_t n_paths = 100000;
  std::uint64_t seed = 0;
  /// Grid used for stationary sampling and for the quantile bin edges.
  Grid grid;
  std::size_t min_count = 20;
  int threads = 0;
};

struct JointTestResult {
  /// TV(P+(b1, b2), P-(b2, b1)) with P- from the reversed model.
  double distance = 0.0;
  /// TV between two independent +g runs.
  double baseline = 0.0;
  /// TV(P+(b1, b2), P+'(b2, b1)): the unreversed control.
  double control = 0.0;
  std::size_t min_count = 0;
  std::vector<std::vector<double>> edges;
  /// Joint probabilities, rows b1 (time 0) and columns b2 (time t_lag).
  Matrix forward;
  Matrix reversed;
  Matrix independent;
};

/// Two-time joint law under +g against the time-reversed -g process.
/// Throws InsufficientSamples when a joint cell holds fewer than
/// min_count samples.
JointTestResult two_time_joint_test(const FieldModel& model,
                                    const JointTestConfig& cfg);

struct EpEstimate {
  std::vector<double> t;
  std::vector<double> estimate;
  std::vector<double> std_error;
  std::size_t slice_steps = 0;
};

/// One-step Gaussian-kernel estimator of the entropy production, averaged
/// over slices of `slice_steps` consecutive steps. The ensemble must record
/// every step and u_ref[r] must be the grid density at ens.times[r].
EpEstimate estimate_ep_pathwise(const Ensemble& ens, const FieldModel& model,
                                std::span<const DensityField> u_ref,
                                std::size_t slice_steps = 10, int threads = 0);

}  // namespace orthoflux
