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
#include "orthoflux/fpe.hpp"
#include "orthoflux/linear_gauss.hpp"
#include "orthoflux/models.hpp"
#include "orthoflux/rng.hpp"

using namespace orthoflux;

namespace {

FieldModel one_dim(double d) {
  FieldModel m;
  m.name = "1d";
  m.phi = ScalarField(
      1, [](ConstPoint x) { return 0.5 * x[0] * x[0] + 0.1 * std::pow(x[0], 4); },
      [](ConstPoint x, PointOut o) { o[0] = x[0] + 0.4 * std::pow(x[0], 3); });
  m.g = VectorField::zero(1);
  m.D = MatrixField::constant(Matrix::Constant(1, 1, d));
  m.box = Box::cube(1, 4.0);
  return m;
}

Vector random_vector(std::size_t n, std::uint64_t seed, bool positive = false) {
  CounterStream rng(seed, 0, StreamDomain::models);
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = positive ? 0.2 + rng.uniform() : rng.normal();
  return v;
}

double max_column_sum(const SparseMatrix& L) {
  const Vector ones = Vector::Ones(L.rows());
  return (ones.transpose() * L).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Fpe, OneDimensionalMatchesScharfetterGummel) {
  const FieldModel m = one_dim(0.7);
  const Grid grid = Grid::uniform(m.box, 40);
  const FpeOperator op = build_operator(grid, m);
  std::vector<double> phi;
  for (std::size_t c = 0; c < grid.size(); ++c) phi.push_back(m.phi(grid.center(c)));
  const Matrix ref = oracle::sg_generator_1d(phi, 0.7, grid.h(0));
  EXPECT_LT((Matrix(op.generator()) - ref).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Fpe, BernoulliAgreesWithSeries) {
  // Two-cell check of the face weight at small potential jumps.
  for (double dphi : {1e-9, 1e-4, 0.05, 0.3}) {
    FieldModel m;
    m.phi = ScalarField(1, [dphi](ConstPoint x) { return dphi * x[0]; },
                        [dphi](ConstPoint, PointOut o) { o[0] = dphi; });
    m.g = VectorField::zero(1);
    m.D = MatrixField::constant(Matrix::Identity(1, 1));
    m.box = Box(Vector::Constant(1, 0.0), Vector::Constant(1, 8.0));
    const Grid grid = Grid::uniform(m.box, 8);
    const FpeOperator op = build_operator(grid, m);
    // Flux from cell 0 to 1 per unit u_0 is B(dphi) / h^2 in generator units.
    // The series drops z^8 / 1209600.
    EXPECT_NEAR(op.generator().coeff(1, 0), oracle::bernoulli_series(dphi),
                1e-13 + std::pow(dphi, 8) / 1.2e6)
        << dphi;
  }
}

TEST(Fpe, LaplacianAnnihilatesConstants) {
  FieldModel m;
  m.phi = ScalarField::constant(2, 0.0);
  m.g = VectorField::zero(2);
  m.D = MatrixField::constant(Matrix::Identity(2, 2));
  m.box = Box::cube(2, 1.0);
  const Grid grid = Grid::uniform(m.box, 16);
  const FpeOperator op = build_operator(grid, m);
  EXPECT_LT(op.apply(Vector::Ones(static_cast<Eigen::Index>(grid.size()))).cwiseAbs().maxCoeff(),
            1e-12);
  // Interior five-point stencil.
  const std::size_t c = grid.flatten({5, 7, 0});
  const double h2 = grid.h(0) * grid.h(0);
  EXPECT_NEAR(op.generator().coeff(c, c), -4.0 / h2, 1e-9);
  EXPECT_NEAR(op.generator().coeff(c, c + 1), 1.0 / h2, 1e-9);
}

TEST(Fpe, MarkovStructureForZoo) {
  for (const ModelInfo& info : model_registry()) {
    if (!info.grid_ok) continue;
    const FieldModel m = info.make({});
    const Grid grid = Grid::uniform(m.box, 24);
    const FpeOperator op = build_operator(grid, m);
    const SparseMatrix& L = op.generator();
    EXPECT_LT(max_column_sum(L), 1e-9 * L.coeffs().cwiseAbs().maxCoeff()) << info.name;
    double worst = 0.0;
    for (int k = 0; k < L.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(L, k); it; ++it) {
        if (it.row() != it.col()) worst = std::min(worst, it.value());
      }
    }
    EXPECT_GE(worst, 0.0) << info.name;
  }
}

TEST(Fpe, ProjectedOperatorKeepsEquilibrium) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, 32);
  const FpeOperator op = build_operator(grid, m);
  const DensityField ueq = equilibrium_density(grid, m.phi);
  const DensityField next = step_forward(op, ueq, 0.5 * op.stability_bound());
  EXPECT_LT((next.values - ueq.values).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_GT(op.projection_correction(), 0.0);
}

TEST(Fpe, StationaryResidualConverges) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  const StationaryResidual r32 = stationary_residual(Grid::uniform(m.box, 32), m);
  const StationaryResidual r64 = stationary_residual(Grid::uniform(m.box, 64), m);
  EXPECT_GE(std::log2(r32.res_sup / r64.res_sup), 1.8);
  EXPECT_LE(r64.res_full, 1e-4);
}

TEST(Fpe, GradientSystemHasNoConservativeResidual) {
  const FieldModel m = reversible_ou(1.0, 1.0);
  EXPECT_EQ(stationary_residual(Grid::uniform(m.box, 32), m).res_conservative, 0.0);
}

TEST(Fpe, BrokenOrthogonalityIsDetected) {
  FieldModel m = rotational_ou(1.0, 0.0, 1.0);
  m.g = VectorField::linear(Matrix::Identity(2, 2));
  m.equilibrium = false;
  const double r32 = stationary_residual(Grid::uniform(m.box, 32), m).res_conservative;
  const double r64 = stationary_residual(Grid::uniform(m.box, 64), m).res_conservative;
  EXPECT_GT(r64, 0.05);
  EXPECT_GT(r64, 0.5 * r32);
}

TEST(Fpe, AdvectionOnlyConservesMass) {
  const FieldModel m = rotational_ou(1.0, 2.0, 1.0);
  const Grid grid = Grid::uniform(m.box, 32);
  OperatorOptions opt;
  opt.diffusion = false;
  opt.project_current = false;
  const FpeOperator op = build_operator(grid, m, opt);
  const Vector u = random_vector(grid.size(), 3, true);
  EXPECT_LT(std::abs(op.apply(u).sum()), 1e-12 * op.apply(u).cwiseAbs().sum());
}

TEST(Fpe, MassAndPositivityUnderStepping) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, 32);
  const FpeOperator op = build_operator(grid, m);
  Vector mu(2);
  mu << 1.5, 0.0;
  DensityField u = gaussian_density(grid, mu, 0.1 * Matrix::Identity(2, 2));
  const double dt = op.stability_bound();
  for (int i = 0; i < 50; ++i) {
    const double before = u.mass();
    u = step_forward(op, u, dt);
    EXPECT_NEAR(u.mass(), before, 1e-12);
    EXPECT_GE(u.values.minCoeff(), 0.0);
  }
  EXPECT_NEAR(u.t, 50 * dt, 1e-12);
}

TEST(Fpe, StepAboveBoundReportsBound) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, 16);
  const FpeOperator op = build_operator(grid, m);
  try {
    step_forward(op, equilibrium_density(grid, m.phi), 2.0 * op.stability_bound());
    FAIL() << "expected StabilityViolation";
  } catch (const StabilityViolation& e) {
    EXPECT_DOUBLE_EQ(e.bound(), op.stability_bound());
  }
}

TEST(Fpe, RelaxesToEquilibriumFromNarrowStart) {
  const FieldModel m = reversible_ou(1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, 48);
  const FpeOperator op = build_operator(grid, m);
  Vector mu(2);
  mu << 1.0, -0.5;
  DensityField u = gaussian_density(grid, mu, 0.05 * Matrix::Identity(2, 2));
  const Propagator p = forward_propagator(op, 0.2, StepMethod::implicit_euler);
  for (int i = 0; i < 100; ++i) u.values = p.step(u.values);
  EXPECT_LE(l1_distance(grid, u.values, equilibrium_density(grid, m.phi).values), 1e-3);
}

TEST(Fpe, CurrentAtEquilibrium) {
  const FieldModel rev = reversible_ou(1.0, 1.0);
  const Grid grid = Grid::uniform(rev.box, 32);
  const FpeOperator op = build_operator(grid, rev);
  EXPECT_LT(op.current(equilibrium_density(grid, rev.phi).values).flux.cwiseAbs().maxCoeff(),
            1e-14);

  // Rotational model: J -> g exp(-phi) on interior faces.
  auto err = [](int n) {
    const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
    const Grid g = Grid::uniform(m.box, n);
    const FpeOperator o = build_operator(g, m);
    const DensityField u = equilibrium_density(g, m.phi);
    const CurrentField J = o.current(u.values);
    double worst = 0.0, scale = 0.0;
    for (std::size_t f = 0; f < o.face_count(); ++f) {
      if (o.is_boundary_face(f)) {
        EXPECT_EQ(J.flux[static_cast<Eigen::Index>(f)], 0.0);
        continue;
      }
      const int axis = static_cast<int>(f / g.size());
      Vector x = g.center(f % g.size());
      x[axis] += 0.5 * g.h(axis);
      const double ref = m.g(x)[axis] * std::exp(-m.phi(x) - m.log_z);
      worst = std::max(worst, std::abs(J.flux[static_cast<Eigen::Index>(f)] - ref));
      scale = std::max(scale, std::abs(ref));
    }
    return worst / scale;
  };
  const double e32 = err(32), e64 = err(64);
  EXPECT_LT(e64, 0.5 * e32);
  EXPECT_LT(e64, 0.02);
}

TEST(Fpe, BackwardOperator) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, 24);
  const FpeOperator op = build_operator(grid, m);
  const double dt = op.stability_bound();
  const Vector ones = Vector::Ones(static_cast<Eigen::Index>(grid.size()));
  EXPECT_LT((evolve_backward(op, ones, dt) - ones).cwiseAbs().maxCoeff(), 1e-13);
  // Duality <L u, v> = <u, L^T v>.
  const Vector u = random_vector(grid.size(), 5), v = random_vector(grid.size(), 6);
  const double lhs = (op.generator() * u).dot(v);
  const double rhs = u.dot(op.backward_generator() * v);
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs));
  // Maximum principle.
  Vector w = random_vector(grid.size(), 7);
  for (int i = 0; i < 20; ++i) {
    const Vector next = evolve_backward(op, w, dt);
    EXPECT_LE(next.maxCoeff(), w.maxCoeff() + 1e-13);
    w = next;
  }
}

TEST(Fpe, OmegaMatchesForwardAndReversedBackward) {
  const FieldModel m = rotational_ou(1.0, 1.5, 1.0);
  const Grid grid = Grid::uniform(m.box, 24);
  const FpeOperator op = build_operator(grid, m);
  const FpeOperator rev = build_operator(grid, m.reversed());
  // The Omega generator for +g equals the backward generator for -g.
  EXPECT_LT((Matrix(op.omega_generator()) - Matrix(rev.backward_generator()))
                .cwiseAbs()
                .maxCoeff(),
            1e-10 * op.generator().coeffs().cwiseAbs().maxCoeff());
  Vector mu(2);
  mu << 1.0, 0.5;
  const DensityField u = gaussian_density(grid, mu, 0.5 * Matrix::Identity(2, 2));
  const double dt = op.stability_bound();
  const Vector efp = op.potential().array().exp();
  const Vector omega = u.values.cwiseProduct(efp);
  const Vector viaForward = step_forward(op, u, dt).values.cwiseProduct(efp);
  const Vector viaOmega = evolve_omega(op, omega, dt);
  EXPECT_LT((viaForward - viaOmega).cwiseAbs().maxCoeff(),
            1e-8 * std::max(1.0, omega.cwiseAbs().maxCoeff()));
  const Vector ones = Vector::Ones(static_cast<Eigen::Index>(grid.size()));
  EXPECT_LT((evolve_omega(op, ones, dt) - ones).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Fpe, ItoAssemblyMatchesDivergenceForm) {
  for (const char* name : {"rotational_ou", "ao_linear"}) {
    const FieldModel m = make_model(name, {});
    const Grid grid = Grid::uniform(m.box, 24);
    const VectorField eta = eta_from_phi(m.D, m.phi);
    const Matrix a = Matrix(build_operator(grid, m).generator());
    const Matrix b = Matrix(build_operator_ito(grid, m, eta).generator());
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10) << name;
  }
}

TEST(Fpe, ItoAssemblyRejectsSingularD) {
  const FieldModel m = make_model("klein_kramers", {});
  const Grid grid = Grid::uniform(m.box, 16);
  EXPECT_ANY_THROW(build_operator_ito(grid, m, eta_from_phi(m.D, m.phi)));
}

TEST(Fpe, ImplicitEulerAcceptsLargeSteps) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, 24);
  const FpeOperator op = build_operator(grid, m);
  const Propagator p = forward_propagator(op, 50.0 * op.stability_bound(),
                                          StepMethod::implicit_euler);
  const DensityField ueq = equilibrium_density(grid, m.phi);
  EXPECT_LT((p.step(ueq.values) - ueq.values).cwiseAbs().maxCoeff(), 1e-10);
}
