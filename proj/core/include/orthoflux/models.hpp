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

#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "orthoflux/ao.hpp"
#include "orthoflux/fields.hpp"
#include "orthoflux/linear_gauss.hpp"

namespace orthoflux {

/// One degree of freedom (x, y = velocity) with mass m, potential U(x),
/// friction eta(x) and temperature kT.
struct KramersParams {
  double mass = 1.0;
  ScalarField U;
  ScalarField friction;
  double kT = 1.0;
  /// Half-widths of the box; zero selects +-6 standard deviations of the
  /// Gaussian approximation at x = 0.
  double x_half_width = 0.0;
  double y_half_width = 0.0;
};

/// phi = (m y^2 / 2 + U(x)) / kT, g = (y, -U'(x) / m),
/// D = diag(0, kT eta(x) / m^2).
FieldModel klein_kramers(const KramersParams& p);

/// U(x) = k x^2 / 2 + a x^4 / 4 with analytic derivatives.
ScalarField anharmonic_potential(double k, double a);

struct HamiltonianParams {
  /// H on (x_1..x_n, y_1..y_n), in units of kT.
  ScalarField H;
  /// Noise matrix; may be singular.
  MatrixField Gamma;
  Box box;
};

struct HamiltonianModel {
  FieldModel model;
  /// eta = e^{H} div(Gamma Gamma^T e^{-H}) / 2.
  VectorField eta;
};

/// g = (dH/dy, -dH/dx), phi = H, D = Gamma Gamma^T / 2.
HamiltonianModel stochastic_hamiltonian(const HamiltonianParams& p);

/// B = [[-gamma, omega], [-omega, -gamma]], D = d I.
FieldModel rotational_ou(double gamma, double omega, double d);
FieldModel reversible_ou(double gamma, double d);

/// S = s I, A = [[0, a], [-a, 0]], phi = q |x|^2 / 2.
AoModel ao_linear_model(double s, double a, double q);
FieldModel ao_linear(double s, double a, double q);

inline constexpr double kPositive = std::numeric_limits<double>::min();

struct ParamDoc {
  std::string name;
  double default_value;
  std::string doc;
  /// Accepted closed range.
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

struct ModelInfo {
  std::string name;
  std::string summary;
  std::vector<ParamDoc> params;
  /// Grid-compatible: nonsingular D, or handled by the limiter.
  bool grid_ok = true;
  std::function<FieldModel(const std::map<std::string, double>&)> make;
};

const std::vector<ModelInfo>& model_registry();
/// Throws InvalidArgument for unknown names or parameters.
FieldModel make_model(const std::string& name,
                      const std::map<std::string, double>& params);
const ModelInfo& find_model(const std::string& name);

}  // namespace orthoflux
