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

#include <vector>

#include "orthoflux/fields.hpp"
#include "orthoflux/rng.hpp"

namespace orthoflux {

/// [S(x) + A(x)] dx/dt = -grad phi + zeta, <zeta zeta^T> = 2 S.
struct AoModel {
  MatrixField S;
  MatrixField A;
  ScalarField phi;
  Box box;
};

inline constexpr double kMaxConditionNumber = 1e12;

struct AoAssembly {
  MatrixField G;     // (S + A)^{-1}
  VectorField b;     // -G grad phi
  MatrixField Deff;  // G S G^T
  /// J e^{phi} = (Deff - G) grad phi = G A G^T grad phi, the conservative
  /// part of the drift.
  VectorField g;
  /// Largest condition-number estimate of S + A seen at the probes.
  double max_condition = 0.0;

  /// (phi, g, Deff) on the model box.
  FieldModel field_model(const AoModel& m) const;
};

/// Throws InvalidArgument when S, A break symmetry at a probe and
/// SingularMatrix when S + A is numerically singular at a probe.
AoAssembly assemble_ao(const AoModel& m, std::span<const Vector> probes);

/// sup |grad phi . (Deff - G) grad phi| over the probes.
double ao_orthogonality_check(const AoModel& m, std::span<const Vector> probes);

/// Constant S (SPD) and A (antisymmetric) with
/// phi = x^T Q x / 2 + quartic * sum x_i^4 and Q diagonal in [0.5, 2].
AoModel random_ao_model(int n, CounterStream& rng, double quartic = 0.05);

}  // namespace orthoflux
