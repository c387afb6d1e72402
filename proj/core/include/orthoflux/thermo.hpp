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
#include <vector>

#include "orthoflux/fpe.hpp"
#include "orthoflux/grid.hpp"

namespace orthoflux {

/// All quantities in nats (rates in nats per unit time).
struct ThermoRecord {
  double t = 0.0;
  double U = 0.0;   // -sum u ln u_eq
  double S = 0.0;   // -sum u ln u
  double F = 0.0;   // sum u ln(u / u_eq)
  double ep = 0.0;  // dissipation through the damping channel
  double hd = 0.0;  // -dU/dt
};

/// Functionals of u under the operator's discrete dynamics. The gradients of
/// ln(u e^phi) use the solver's own face stencil, so dF/dt = -ep holds up to
/// the conservative term's O(h^3) leak. Throws DensityError when u is off
/// unit mass by more than 1e-6.
ThermoRecord thermo_snapshot(const FpeOperator& op, const DensityField& u);

/// -sum_f Jd_f(u) (ln Omega_n - ln Omega_c) / h vol.
double entropy_production(const FpeOperator& op, const Vector& u);

/// sum_f W_f Lmean(Omega_c, Omega_n) (ln Omega_n - ln Omega_c)^2 / h vol,
/// the quadratic form written with the logarithmic mean of Omega on each
/// face. Equal to entropy_production for diagonal D; throws for operators
/// with mixed-derivative terms.
double entropy_production_quadratic(const FpeOperator& op, const Vector& u);

/// -dU/dt = -sum phi_c (L u)_c vol.
double heat_flux(const FpeOperator& op, const Vector& u);

/// sum Omega ln Omega exp(-phi) vol with phi the normalized cell potential.
/// Throws DensityError on a nonpositive cell.
double h_functional(const Grid& grid, const Vector& omega, const Vector& phi);

struct BalanceReport {
  double second_law = 0.0;       // max |dF/dt + ep|
  double entropy_balance = 0.0;  // max |dS/dt - ep + hd|
  double max_F_increase = 0.0;   // max (F_{i+1} - F_i), 0 if none
};

/// Centered differences in the interior and second-order one-sided
/// differences at the ends. Requires at least three uniformly spaced
/// records.
BalanceReport balance_check(std::span<const ThermoRecord> records);

/// Time derivative of a uniformly sampled series (same stencil as
/// balance_check).
std::vector<double> time_derivative(std::span<const double> values, double dt);

struct RelaxationOptions {
  double dt = 0.0;
  std::size_t steps = 0;
  std::size_t record_every = 1;
  StepMethod method = StepMethod::heun;
  /// Keep every recorded density (for pathwise comparisons).
  bool keep_history = false;
};

struct Relaxation {
  std::vector<ThermoRecord> records;
  std::vector<DensityField> history;
  DensityField final_state;
};

Relaxation relax(const FpeOperator& op, DensityField u0,
                 const RelaxationOptions& options);

}  // namespace orthoflux
