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

#include <algorithm>
#include <cmath>

#include "orthoflux/calculus.hpp"
#include "orthoflux/errors.hpp"
#include "orthoflux/fpe.hpp"
#include "orthoflux/models.hpp"
#include "orthoflux/sde.hpp"

using namespace orthoflux;

TEST(Models, RegistryContents) {
  std::vector<std::string> names;
  for (const ModelInfo& m : model_registry()) names.push_back(m.name);
  for (const char* want :
       {"klein_kramers", "rotational_ou", "stochastic_hamiltonian", "ao_linear", "reversible_ou"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), want), names.end()) << want;
  }
  EXPECT_THROW(find_model("nope"), InvalidArgument);
}

TEST(Models, ParameterValidation) {
  EXPECT_THROW(make_model("rotational_ou", {{"zeta", 1.0}}), InvalidArgument);
  EXPECT_THROW(make_model("rotational_ou", {{"gamma", 0.0}}), InvalidArgument);
  EXPECT_THROW(make_model("rotational_ou", {{"gamma", -1.0}}), InvalidArgument);
  EXPECT_THROW(make_model("klein_kramers", {{"a", -0.1}}), InvalidArgument);
  EXPECT_THROW(make_model("rotational_ou", {{"d", std::nan("")}}), InvalidArgument);
  EXPECT_NO_THROW(make_model("klein_kramers", {{"friction", 0.0}}));
}

TEST(Models, ZooPassesEquilibriumChecks) {
  for (const ModelInfo& info : model_registry()) {
    const FieldModel m = info.make({});
    const auto probes = random_probes(m.box, 200, 13);
    EXPECT_LE(orthogonality_residual(m.phi, m.g, probes).max_abs, 1e-10) << info.name;
    EXPECT_LE(divergence_residual(m.g, probes).max_abs, 1e-8) << info.name;
    EXPECT_TRUE(check_diffusion(m.D, probes).ok()) << info.name;
  }
}

TEST(Models, KramersHarmonicIsExactlyOrthogonal) {
  for (double mass : {0.5, 1.0, 3.0}) {
    for (double kT : {0.2, 1.0, 2.5}) {
      const FieldModel m = make_model(
          "klein_kramers", {{"mass", mass}, {"kT", kT}, {"k", 1.7}, {"friction", 0.4}});
      const auto probes = random_probes(m.box, 100, 14);
      EXPECT_LE(orthogonality_residual(m.phi, m.g, probes).max_abs, 1e-14);
      EXPECT_EQ(divergence_residual(m.g, probes).max_abs, 0.0);
      Vector x(2);
      x << 0.1, 0.2;
      EXPECT_NEAR(m.D(x)(1, 1), kT * 0.4 / (mass * mass), 1e-15);
      EXPECT_EQ(m.D(x)(0, 0), 0.0);
      EXPECT_TRUE(m.singular_diffusion);
    }
  }
}

TEST(Models, KramersVelocityMarginal) {
  const double mass = 2.0, kT = 1.5;
  const FieldModel m = make_model("klein_kramers", {{"mass", mass}, {"kT", kT}});
  SimConfig c;
  c.dt = 5e-3;
  c.T = 0.5;
  c.n_paths = 20000;
  c.seed = 3;
  c.initial = InitialCondition::stationary(Grid::uniform(m.box, 64));
  c.record_every = c.n_steps();
  const Ensemble e = simulate(m, c);
  const Moments mo = ensemble_moments(e, e.records() - 1);
  const double var = kT / mass;
  EXPECT_NEAR(mo.cov(1, 1), var, 3.0 * var * std::sqrt(2.0 / 20000.0) + 0.01);
}

TEST(Models, HamiltonianDampingFromNoise) {
  Matrix Q(2, 2);
  Q << 2.0, 0.0, 0.0, 1.0;
  HamiltonianParams p;
  p.H = ScalarField::quadratic(Q);
  p.box = Box::cube(2, 6.0);
  p.Gamma = MatrixField::constant(std::sqrt(2.0) * Matrix::Identity(2, 2));
  Vector x(2);
  x << 0.4, -0.9;
  HamiltonianModel h = stochastic_hamiltonian(p);
  EXPECT_LT((h.eta(x) + Q * x).norm(), 1e-12);
  EXPECT_FALSE(h.model.singular_diffusion);

  // Gamma Gamma^T = diag(0, 1): only the velocity is damped.
  Matrix G = Matrix::Zero(2, 2);
  G(1, 1) = 1.0;
  p.Gamma = MatrixField::constant(G);
  h = stochastic_hamiltonian(p);
  EXPECT_NEAR(h.eta(x)[0], 0.0, 1e-15);
  EXPECT_NEAR(h.eta(x)[1], -0.5 * x[1], 1e-12);
  EXPECT_TRUE(h.model.singular_diffusion);
  EXPECT_LT((h.model.g(x) - Vector{{x[1], -2.0 * x[0]}}).norm(), 1e-15);
}

TEST(Models, HamiltonianRejectsOddDimension) {
  HamiltonianParams p;
  p.H = ScalarField::quadratic(Matrix::Identity(3, 3));
  p.Gamma = MatrixField::constant(Matrix::Identity(3, 3));
  p.box = Box::cube(3, 1.0);
  EXPECT_THROW(stochastic_hamiltonian(p), InvalidArgument);
}

TEST(Models, HamiltonianEquilibriumOnGrid) {
  const FieldModel m = make_model("stochastic_hamiltonian", {{"gamma_x", 0.5}});
  const double r0 = stationary_residual(Grid::uniform(m.box, 32), m).res_sup;
  const double r1 = stationary_residual(Grid::uniform(m.box, 64), m).res_sup;
  EXPECT_GE(std::log2(r0 / r1), 1.8);
}

TEST(Models, RotationalOu) {
  Vector x(2);
  x << 0.6, -0.3;
  const FieldModel still = rotational_ou(1.0, 0.0, 1.0);
  EXPECT_EQ(still.g(x).norm(), 0.0);
  const FieldModel m = rotational_ou(2.0, 1.0, 0.5);
  // phi = (gamma / 2d) |x|^2.
  EXPECT_LT((m.phi.gradient(x) - 4.0 * x).norm(), 1e-14);
  EXPECT_NEAR(m.g(x).dot(x), 0.0, 1e-15);
  EXPECT_NEAR(m.g(x).norm(), x.norm(), 1e-15);
  EXPECT_NEAR(m.box.upper[0], 6.0 * std::sqrt(0.25), 1e-12);
}

TEST(Models, NormalizerMatchesGaussian) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  EXPECT_NEAR(m.log_z, std::log(2.0 * M_PI), 1e-6);
}
