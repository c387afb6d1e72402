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

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace orthoflux {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ConstPoint = std::span<const double>;
using PointOut = std::span<double>;

inline ConstPoint view(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
inline PointOut view(Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Central-difference step for coordinate value `xi`: max(1e-5, 1e-5|xi|).
double fd_step(double xi) noexcept;

/// Axis-aligned bounded box, the domain every field lives on.
struct Box {
  Vector lower;
  Vector upper;

  Box() = default;
  Box(Vector lo, Vector hi);
  static Box cube(int dim, double half_width);

  int dim() const noexcept { return static_cast<int>(lower.size()); }
  bool contains(ConstPoint x) const noexcept;
  Vector width() const { return upper - lower; }
};

class ScalarField {
 public:
  using Value = std::function<double(ConstPoint)>;
  using Gradient = std::function<void(ConstPoint, PointOut)>;
  using Hessian = std::function<void(ConstPoint, Matrix&)>;

  ScalarField() = default;
  ScalarField(int dim, Value value, Gradient gradient = {},
              Hessian hessian = {});

  static ScalarField constant(int dim, double c);
  /// 0.5 x^T Q x with analytic gradient and Hessian (Q symmetrized).
  static ScalarField quadratic(const Matrix& Q);

  int dim() const noexcept { return dim_; }
  bool has_analytic_gradient() const noexcept {
    return static_cast<bool>(gradient_);
  }
  bool has_analytic_hessian() const noexcept {
    return static_cast<bool>(hessian_);
  }

  double operator()(ConstPoint x) const { return value_(x); }
  double operator()(const Vector& x) const { return value_(view(x)); }

  /// Analytic gradient when available, otherwise central differences.
  void gradient(ConstPoint x, PointOut out) const;
  Vector gradient(const Vector& x) const;
  void fd_gradient(ConstPoint x, PointOut out) const;

  /// Analytic Hessian when available, otherwise central differences of the
  /// gradient.
  void hessian(ConstPoint x, Matrix& out) const;
  Matrix hessian(const Vector& x) const;

  ScalarField shifted(double c) const;

 private:
  int dim_ = 0;
  Value value_;
  Gradient gradient_;
  Hessian hessian_;
};

class VectorField {
 public:
  using Value = std::function<void(ConstPoint, PointOut)>;
  using Divergence = std::function<double(ConstPoint)>;

  VectorField() = default;
  VectorField(int dim, Value value, Divergence divergence = {});

  static VectorField zero(int dim);
  /// x -> M x with divergence tr(M).
  static VectorField linear(const Matrix& M);

  int dim() const noexcept { return dim_; }
  bool has_analytic_divergence() const noexcept {
    return static_cast<bool>(divergence_);
  }

  void operator()(ConstPoint x, PointOut out) const { value_(x, out); }
  Vector operator()(const Vector& x) const;

  double divergence(ConstPoint x) const;
  double divergence(const Vector& x) const { return divergence(view(x)); }
  double fd_divergence(ConstPoint x) const;

  VectorField negated() const;
  VectorField scaled(double s) const;

 private:
  int dim_ = 0;
  Value value_;
  Divergence divergence_;
};

/// Sum and difference keep an analytic divergence when both operands have
/// one.
VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator-(const VectorField& a, const VectorField& b);

class MatrixField {
 public:
  using Value = std::function<void(ConstPoint, Matrix&)>;
  using RowDivergence = std::function<void(ConstPoint, PointOut)>;

  MatrixField() = default;
  MatrixField(int dim, Value value, RowDivergence row_divergence = {});
  static MatrixField constant(Matrix M);

  int dim() const noexcept { return dim_; }
  bool is_constant() const noexcept { return constant_; }
  bool has_analytic_row_divergence() const noexcept {
    return constant_ || static_cast<bool>(row_divergence_);
  }
  const Matrix& constant_value() const noexcept { return value_constant_; }

  void operator()(ConstPoint x, Matrix& out) const;
  Matrix operator()(const Vector& x) const;

  /// out_i = sum_j d_j M_ij(x); zero for constant fields, analytic when
  /// supplied, central differences otherwise.
  void row_divergence(ConstPoint x, PointOut out) const;
  Vector row_divergence(const Vector& x) const;

 private:
  int dim_ = 0;
  bool constant_ = false;
  Matrix value_constant_;
  Value value_;
  RowDivergence row_divergence_;
};

/// x -> M(x) grad phi(x). The divergence is assembled from the row
/// divergence of M and tr(M Hess phi).
VectorField apply(const MatrixField& M, const ScalarField& phi);

/// Symmetry and semidefiniteness report for a matrix field sampled at probes.
struct DiffusionCheck {
  double max_asymmetry = 0.0;
  double min_eigenvalue = 0.0;
  bool ok(double tol = 1e-12) const noexcept {
    return max_asymmetry <= tol && min_eigenvalue >= -tol;
  }
};
DiffusionCheck check_diffusion(const MatrixField& D,
                               std::span<const Vector> probes);

/// The (phi, g, D) bundle defining dx = (g - D grad phi) dt + sqrt(2D) dW.
/// Nothing about orthogonality is assumed; see validate_equilibrium.
struct FieldModel {
  std::string name;
  ScalarField phi;
  VectorField g;
  MatrixField D;
  Box box;
  /// u_eq = exp(-(phi + log_z)) on the box.
  double log_z = 0.0;
  /// Some diagonal entry of D vanishes identically (e.g. Klein-Kramers).
  bool singular_diffusion = false;
  bool equilibrium = false;

  int dim() const noexcept { return phi.dim(); }

  /// Divergence-form drift g - D grad phi.
  VectorField drift() const;
  /// Ito drift g + eta with eta_i = sum_j d_j D_ij - (D grad phi)_i.
  VectorField ito_drift() const;
  /// (phi, -g, D).
  FieldModel reversed() const;
};

/// Midpoint-rule log of the integral of exp(-phi) over the box with
/// `cells_per_axis` cells per axis (dim <= 3).
double box_log_normalizer(const ScalarField& phi, const Box& box,
                          int cells_per_axis);

}  // namespace orthoflux
