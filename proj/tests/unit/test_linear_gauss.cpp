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

#include <gtest/gtest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "orthoflux/calculus.hpp"
#include "orthoflux/errors.hpp"
#include "orthoflux/linear_gauss.hpp"
#include "orthoflux/rng.hpp"

using namespace orthoflux;

TEST(Hurwitz, RejectsUnstable) {
  Matrix B(2, 2);
  B << 0.5, 1.0, -1.0, 0.1;
  EXPECT_THROW(require_hurwitz(B), NotHurwitz);
  EXPECT_THROW(LinearModel::make(B, Matrix::Identity(2, 2)), NotHurwitz);
  EXPECT_NO_THROW(require_hurwitz(-Matrix::Identity(3, 3)));
}

TEST(Lyapunov, AgreesWithRk4Oracle) {
  Matrix B(2, 2), D(2, 2);
  B << -1.0, 0.8, -0.3, -0.7;
  D << 0.6, 0.1, 0.1, 0.3;
  const Matrix S = solve_lyapunov(B, D);
  const Matrix ref = oracle::lyapunov_rk4(B, D);
  EXPECT_LT((S - ref).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Lyapunov, RotationalCovarianceIsIdentity) {
  // gamma = d = 1, omega = 1 gives Sigma = I.
  Matrix B(2, 2);
  B << -1.0, 1.0, -1.0, -1.0;
  const LinearModel m = LinearModel::make(B, Matrix::Identity(2, 2));
  EXPECT_LT((m.Sigma - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT(m.lyapunov_residual(), 1e-14);
}

TEST(LinearModel, RandomHurwitzProperties) {
  CounterStream rng(2024, 0, StreamDomain::models);
  for (int k = 0; k < 50; ++k) {
    const int n = 2 + k % 3;
    const LinearModel m = random_linear_model(n, rng);
    EXPECT_LE(m.lyapunov_residual(), 1e-10 * std::max(1.0, m.Sigma.cwiseAbs().maxCoeff()));
    EXPECT_LE(m.antisymmetry_residual(), 1e-10) << "model " << k;
    // tr(B + D Q) = 0
    EXPECT_NEAR(m.Grot.trace(), 0.0, 1e-10);
    const FieldModel f = linear_equilibrium_fields(m);
    const auto probes = random_probes(f.box, 50, static_cast<std::uint64_t>(k));
    EXPECT_LE(orthogonality_residual(f.phi, f.g, probes).max_abs, 1e-10);
    EXPECT_LE(divergence_residual(f.g, probes).max_abs, 1e-8);
  }
}

TEST(LinearModel, SigmaIsotropicForRotation) {
  for (double gamma : {0.5, 1.0, 3.0}) {
    for (double d : {0.2, 1.0}) {
      Matrix B(2, 2);
      B << -gamma, 2.0, -2.0, -gamma;
      const LinearModel m = LinearModel::make(B, d * Matrix::Identity(2, 2));
      EXPECT_LT((m.Sigma - d / gamma * Matrix::Identity(2, 2)).norm(), 1e-12);
    }
  }
}

TEST(GaussianFlow, MatchesMomentOde) {
  Matrix B(2, 2), D(2, 2);
  B << -1.0, 1.0, -1.0, -1.0;
  D = Matrix::Identity(2, 2);
  const LinearModel m = LinearModel::make(B, D);
  Vector mu0(2);
  mu0 << 1.5, -0.5;
  const Matrix S0 = 0.3 * Matrix::Identity(2, 2);
  const GaussianState s = gaussian_flow_oracle(m, mu0, S0, 0.8);
  const oracle::Moments ref = oracle::linear_moments_rk4(B, D, mu0, S0, 0.8);
  EXPECT_LT((s.mu - ref.mu).norm(), 1e-10);
  EXPECT_LT((s.Sigma - ref.S).norm(), 1e-10);
}

TEST(GaussianFlow, ReversibleFreeEnergy) {
  // B = -I, D = I, start N((1, 0), I): F(t) = |mu_t|^2 / 2 = exp(-2t) / 2.
  const LinearModel m = LinearModel::make(-Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  Vector mu0(2);
  mu0 << 1.0, 0.0;
  for (double t : {0.0, 0.3, 1.0, 2.5}) {
    const GaussianState s = gaussian_flow_oracle(m, mu0, Matrix::Identity(2, 2), t);
    EXPECT_NEAR(s.F, 0.5 * std::exp(-2.0 * t), 1e-13);
  }
}

TEST(GaussianKl, MatchesQuadrature) {
  Vector mu(2);
  mu << 0.7, -0.2;
  Matrix S(2, 2), Sigma(2, 2);
  S << 0.8, 0.2, 0.2, 0.5;
  Sigma << 1.2, -0.3, -0.3, 0.9;
  EXPECT_NEAR(gaussian_relative_entropy(mu, S, Sigma),
              oracle::kl_quadrature_2d(mu, S, Sigma), 1e-6);
}

TEST(GaussianEntropy, Closed) {
  // S = 0.5 ln det(2 pi e S)
  Matrix S = 2.0 * Matrix::Identity(2, 2);
  EXPECT_NEAR(gaussian_entropy(S), std::log(2.0 * M_PI * M_E * 2.0), 1e-14);
}

TEST(LinearFields, NormalizerAndBox) {
  Matrix B(2, 2);
  B << -2.0, 0.0, 0.0, -0.5;
  const LinearModel m = LinearModel::make(B, Matrix::Identity(2, 2));
  const FieldModel f = linear_equilibrium_fields(m, 6.0);
  // Sigma = diag(1/2, 2)
  EXPECT_NEAR(f.box.upper[0], 6.0 * std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(f.box.upper[1], 6.0 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(f.log_z, std::log(2.0 * M_PI), 1e-12);
  EXPECT_TRUE(f.equilibrium);
}
