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
#include <vector>

#include "orthoflux/fields.hpp"

namespace orthoflux {

/// Sup and root-mean-square of a probe-sampled quantity.
struct ResidualStats {
  double max_abs = 0.0;
  double rms = 0.0;
};

/// Uniform probe points strictly inside the box; the outer `margin`
/// fraction of each axis is skipped.
std::vector<Vector> random_probes(const Box& box, std::size_t count,
                                  std::uint64_t seed, double margin = 0.05);

/// Statistics of grad phi . g over the probes. Throws NonFiniteValue naming
/// the first probe where either field is not finite.
ResidualStats orthogonality_residual(const ScalarField& phi,
                                     const VectorField& g,
                                     std::span<const Vector> probes);

ResidualStats divergence_residual(const VectorField& g,
                                  std::span<const Vector> probes);

struct Decomposition {
  VectorField g;
  ResidualStats div_g;
  ResidualStats ortho;
};

/// g = b + D grad phi together with its probe-sampled residuals. Reports
/// only; the caller decides what counts as conservative.
Decomposition decompose_drift(const VectorField& b, const MatrixField& D,
                              const ScalarField& phi,
                              std::span<const Vector> probes);

/// eta_i = sum_j d_j D_ij - (D grad phi)_i, the noise-induced drift that
/// turns the Ito form into the divergence form.
VectorField eta_from_phi(const MatrixField& D, const ScalarField& phi);

struct ParallelPerp {
  Vector parallel;
  Vector perp;
};

inline constexpr double kGradientFloor = 1e-10;

/// Projection of j(x) onto grad phi(x) and its complement. Below a gradient
/// norm of `eps_grad` the split is (0, j).
ParallelPerp split_parallel_perp(const VectorField& j, const ScalarField& phi,
                                 const Vector& x,
                                 double eps_grad = kGradientFloor);

struct ConservativeFlow {
  VectorField j;
  /// div(exp(-phi) j) sampled at the probes.
  ResidualStats residual;
};

/// j = b + D grad phi and the residual of div(exp(-phi) j), which vanishes
/// when exp(-phi) is stationary for (b, D).
ConservativeFlow canonical_conservative(const VectorField& b,
                                        const MatrixField& D,
                                        const ScalarField& phi,
                                        std::span<const Vector> probes);

struct EquilibriumReport {
  ResidualStats ortho;
  ResidualStats div_g;
  bool ok = false;
};

/// Orthogonality and divergence residuals of a model's (phi, g) on random
/// probes in its box. The tolerances are relative to max(1, sup |grad phi||g|)
/// and max(1, sup |g|). Throws InvalidArgument when a model tagged as
/// equilibrium fails either one.
EquilibriumReport validate_equilibrium(const FieldModel& model,
                                       std::size_t probes = 100,
                                       double ortho_tol = 1e-10,
                                       double div_tol = 1e-8);

}  // namespace orthoflux
