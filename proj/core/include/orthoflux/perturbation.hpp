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

#include <span>
#include <string>

#include "orthoflux/fields.hpp"

namespace orthoflux {

/// Drift, diffusion and candidate terms of psi = phi0 + eps phi1 + eps^2 phi2.
struct EpsilonModel {
  VectorField b;
  MatrixField D;
  double epsilon = 1.0;
  ScalarField phi0;
  ScalarField phi1;
  ScalarField phi2;
};

struct Phi0Residual {
  /// sup |grad phi0 . (D grad phi0 + b)|
  double orthogonality = 0.0;
  /// sup |div(b + D grad phi0)|, generally nonzero.
  double divergence = 0.0;
};

Phi0Residual residual_phi0(const EpsilonModel& m, std::span<const Vector> probes);

/// sup |grad phi1 . (2 D grad phi0 + b) - div(D grad phi0 + b)|
double residual_phi1(const EpsilonModel& m, std::span<const Vector> probes);

/// sup |grad phi2 . (2 D grad phi0 + b) - div(D grad phi1)
///      + grad phi1^T D grad phi1|
double residual_phi2(const EpsilonModel& m, std::span<const Vector> probes);

enum class ReversalClass { overdamped, underdamped, neither };
std::string to_string(ReversalClass c);

struct Classification {
  ReversalClass label = ReversalClass::neither;
  /// sup |j|, sup |div j|, sup |grad phi . j| with j = b + D grad phi.
  double current = 0.0;
  double divergence = 0.0;
  double orthogonality = 0.0;
  /// Zero threshold for |j| and div j: 1e-6 sup |b|. The orthogonality
  /// threshold also carries sup |grad phi|.
  double scale = 0.0;
  double grad_scale = 0.0;
};

Classification reversal_classify(const VectorField& b, const MatrixField& D,
                                 const ScalarField& phi,
                                 std::span<const Vector> probes);

}  // namespace orthoflux
