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

#include <Eigen/Sparse>

#include <memory>

#include "orthoflux/fields.hpp"
#include "orthoflux/grid.hpp"

namespace orthoflux {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct OperatorOptions {
  /// False gives the D = 0 test mode (transport only).
  bool diffusion = true;
  bool advection = true;
  /// Hybrid limiter: adds the smallest face diffusion that keeps every
  /// off-diagonal entry of the generator nonnegative.
  bool limiter = true;
  /// Remove the O(h^2) discrete divergence of the stationary current with
  /// a weighted potential correction, so exp(-phi) is stationary to
  /// round-off. Residual diagnostics always use the uncorrected current.
  bool project_current = true;
};

/// Face fluxes. Face f = axis * cells + lower cell; faces whose lower cell
/// is the last along their axis lie on the boundary and carry zero flux.
struct CurrentField {
  Grid grid;
  Vector flux;

  std::size_t face(int axis, std::size_t lower) const {
    return static_cast<std::size_t>(axis) * grid.size() + lower;
  }
};

/// The discrete generator du/dt = L u of div[D (grad u + u grad phi) - g u]
/// together with its face-flux pieces. Immutable once built.
class FpeOperator {
 public:
  const Grid& grid() const noexcept { return grid_; }
  /// Normalized cell potential: sum exp(-phi_c) vol = 1.
  const Vector& potential() const noexcept { return phi_; }
  const SparseMatrix& generator() const noexcept { return L_; }
  /// Faces x cells: dissipative and advective face flux per unit u.
  const SparseMatrix& dissipative_flux() const noexcept { return Jd_; }
  const SparseMatrix& advective_flux() const noexcept { return Ja_; }
  /// Effective face velocity of the conservative term after correction.
  const Vector& face_velocity() const noexcept { return velocity_; }

  std::size_t face_count() const noexcept {
    return static_cast<std::size_t>(grid_.dim()) * grid_.size();
  }
  bool is_boundary_face(std::size_t face) const;

  Vector apply(const Vector& u) const { return L_ * u; }
  CurrentField current(const Vector& u) const;
  CurrentField dissipative_current(const Vector& u) const;

  /// Adjoint of the generator: the backward equation.
  SparseMatrix backward_generator() const;
  /// exp(phi) L exp(-phi): the generator acting on Omega = u exp(phi).
  SparseMatrix omega_generator() const;

  /// Largest explicit step the Heun integrator accepts.
  double stability_bound() const noexcept { return dt_bound_; }
  /// max |(grad p)_f| of the stationary-current correction (0 when off).
  double projection_correction() const noexcept { return correction_; }
  /// max |discrete div(g exp(-phi))| before correction.
  double raw_conservative_residual() const noexcept { return raw_div_; }

 private:
  friend class OperatorBuilder;

  Grid grid_;
  Vector phi_;
  SparseMatrix L_;
  SparseMatrix Jd_;
  SparseMatrix Ja_;
  Vector velocity_;
  double dt_bound_ = 0.0;
  double correction_ = 0.0;
  double raw_div_ = 0.0;
};

/// Divergence-form assembly from (phi, g, D).
FpeOperator build_operator(const Grid& grid, const FieldModel& model,
                           const OperatorOptions& options = {});

/// Ito-form assembly from (g, D, eta): the potential is recovered from
/// grad phi = D^{-1}(div D - eta) by Gauss-Legendre line integration between
/// cell centres. Requires D nonsingular on the grid.
FpeOperator build_operator_ito(const Grid& grid, const FieldModel& model,
                               const VectorField& eta,
                               const OperatorOptions& options = {});

/// Cell-centre phi recovered from its gradient field by line integration,
/// shifted to unit discrete mass.
Vector integrate_potential(const Grid& grid, const VectorField& grad_phi);

struct StationaryResidual {
  /// ||L exp(-phi)||_inf * cell volume.
  double res_full = 0.0;
  /// ||discrete div(g exp(-phi))||_inf.
  double res_conservative = 0.0;
  /// ||L exp(-phi)||_inf.
  double res_sup = 0.0;
};

/// Residuals of the uncorrected operator at the discrete equilibrium.
StationaryResidual stationary_residual(const Grid& grid, const FieldModel& model,
                                       OperatorOptions options = {});

enum class StepMethod { heun, implicit_euler };

/// Fixed-step integrator for dv/dt = A v. Heun refuses steps above the
/// bound with StabilityViolation; implicit Euler factorizes I - dt A once.
class Propagator {
 public:
  Propagator(SparseMatrix A, double dt, double bound,
             StepMethod method = StepMethod::heun);
  ~Propagator();
  Propagator(Propagator&&) noexcept;
  Propagator& operator=(Propagator&&) noexcept;

  double dt() const noexcept { return dt_; }
  Vector step(const Vector& v) const;

 private:
  struct Factor;
  SparseMatrix A_;
  double dt_;
  StepMethod method_;
  std::unique_ptr<Factor> factor_;
};

Propagator forward_propagator(const FpeOperator& op, double dt,
                              StepMethod method = StepMethod::heun);
Propagator backward_propagator(const FpeOperator& op, double dt,
                               StepMethod method = StepMethod::heun);
Propagator omega_propagator(const FpeOperator& op, double dt,
                            StepMethod method = StepMethod::heun);

/// One Heun step of the forward equation; t advances by dt.
DensityField step_forward(const FpeOperator& op, const DensityField& u,
                          double dt);
Vector evolve_backward(const FpeOperator& op, const Vector& v, double dt);
Vector evolve_omega(const FpeOperator& op, const Vector& omega, double dt);

}  // namespace orthoflux
