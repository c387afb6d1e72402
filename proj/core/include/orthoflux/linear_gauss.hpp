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

#include "orthoflux/fields.hpp"
#include "orthoflux/rng.hpp"

namespace orthoflux {

/// Throws NotHurwitz unless every eigenvalue of B has real part < -tol.
void require_hurwitz(const Matrix& B, double tol = 1e-12);

/// Stationary covariance: B Sigma + Sigma B^T + 2 D = 0, solved by
/// Kronecker vectorization. Symmetrized on return.
Matrix solve_lyapunov(const Matrix& B, const Matrix& D);

/// dx = B x dt + sqrt(2 D) dW together with its stationary data.
struct LinearModel {
  Matrix B;
  Matrix D;
  Matrix Sigma;
  Matrix Q;     // Sigma^{-1}
  Matrix Grot;  // B + D Q

  static LinearModel make(Matrix B, Matrix D);
  int dim() const noexcept { return static_cast<int>(B.rows()); }
  /// ||B Sigma + Sigma B^T + 2D||_inf.
  double lyapunov_residual() const;
  /// Max entry of |Q Grot + (Q Grot)^T| / 2.
  double antisymmetry_residual() const;
};

/// phi = x^T Q x / 2, g = Grot x, D constant; log_z is the Gaussian
/// normalizer over R^n. The box defaults to +-6 marginal standard
/// deviations.
FieldModel linear_equilibrium_fields(const LinearModel& m,
                                     double box_sigmas = 6.0);

struct GaussianState {
  Vector mu;
  Matrix Sigma;
  double F = 0.0;  // relative entropy to N(0, Sigma_inf)
  double U = 0.0;
  double S = 0.0;
};

/// Exact Gaussian propagation: mu_t = e^{Bt} mu0,
/// Sigma_t = e^{Bt} (Sigma0 - Sigma) e^{B^T t} + Sigma.
GaussianState gaussian_flow_oracle(const LinearModel& m, const Vector& mu0,
                                   const Matrix& Sigma0, double t);

/// Gaussian relative entropy KL(N(mu, S) || N(0, Sigma)).
double gaussian_relative_entropy(const Vector& mu, const Matrix& S,
                                 const Matrix& Sigma);
double gaussian_entropy(const Matrix& S);

/// B = R - (max Re eig(R) + margin) I, D = C C^T / n + 0.1 I with R, C
/// standard normal.
LinearModel random_linear_model(int n, CounterStream& rng,
                                double margin = 0.5);

}  // namespace orthoflux
