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

#include "orthoflux/errors.hpp"
#include "orthoflux/fpe.hpp"
#include "orthoflux/linear_gauss.hpp"
#include "orthoflux/models.hpp"
#include "orthoflux/rng.hpp"
#include "orthoflux/thermo.hpp"

using namespace orthoflux;

namespace {

DensityField random_density(const Grid& grid, std::uint64_t seed) {
  CounterStream rng(seed, 0, StreamDomain::models);
  DensityField u{grid, Vector(static_cast<Eigen::Index>(grid.size())), 0.0};
  for (auto& v : u.values) v = 0.05 + rng.uniform();
  u.values /= u.mass();
  return u;
}

DensityField displaced(const Grid& grid, double x0) {
  Vector mu(2);
  mu << x0, 0.0;
  return gaussian_density(grid, mu, Matrix::Identity(2, 2));
}

}  // namespace

TEST(Thermo, EquilibriumSnapshot) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, 64);
  const FpeOperator op = build_operator(grid, m);
  const ThermoRecord r = thermo_snapshot(op, equilibrium_density(grid, m.phi));
  EXPECT_NEAR(r.F, 0.0, 1e-12);
  EXPECT_NEAR(r.ep, 0.0, 1e-12);
  EXPECT_NEAR(r.hd, 0.0, 1e-10);
  // Standard Gaussian: U = S = 1 + ln 2 pi.
  EXPECT_NEAR(r.U, 1.0 + std::log(2.0 * M_PI), 1e-3);
  EXPECT_NEAR(r.S, 1.0 + std::log(2.0 * M_PI), 1e-3);
}

TEST(Thermo, RandomDensityInvariants) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, 24);
  const FpeOperator op = build_operator(grid, m);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const DensityField u = random_density(grid, s);
    const ThermoRecord r = thermo_snapshot(op, u);
    EXPECT_NEAR(r.F, r.U - r.S, 1e-10);
    EXPECT_GE(r.ep, -1e-12);
    EXPECT_GE(r.F, -1e-9);
    EXPECT_NEAR(entropy_production_quadratic(op, u.values), r.ep, 1e-8 * std::max(1.0, r.ep));
  }
}

TEST(Thermo, RejectsUnnormalized) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, 16);
  const FpeOperator op = build_operator(grid, m);
  DensityField u = equilibrium_density(grid, m.phi);
  u.values *= 1.01;
  EXPECT_THROW(thermo_snapshot(op, u), DensityError);
}

TEST(Thermo, ZeroCellsUseContinuousExtension) {
  const FieldModel m = reversible_ou(1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, 16);
  const FpeOperator op = build_operator(grid, m);
  DensityField u = equilibrium_density(grid, m.phi);
  u.values.head(grid.size() / 2).setZero();
  u.values /= u.mass();
  const ThermoRecord r = thermo_snapshot(op, u);
  EXPECT_TRUE(std::isfinite(r.S));
  EXPECT_TRUE(std::isfinite(r.F));
}

TEST(Thermo, ReversibleFreeEnergyMatchesOracle) {
  const FieldModel m = reversible_ou(1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, 96);
  const FpeOperator op = build_operator(grid, m);
  const DensityField u = displaced(grid, 1.0);
  const LinearModel lm = LinearModel::make(-Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const GaussianState ref =
      gaussian_flow_oracle(lm, Vector::Unit(2, 0), Matrix::Identity(2, 2), 0.0);
  EXPECT_NEAR(thermo_snapshot(op, u).F, ref.F, 1e-4);
}

TEST(Thermo, BalanceOnRelaxation) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, 64);
  const FpeOperator op = build_operator(grid, m);
  RelaxationOptions opt;
  opt.dt = 0.5 * op.stability_bound();
  opt.steps = static_cast<std::size_t>(std::ceil(1.0 / opt.dt));
  const Relaxation rel = relax(op, displaced(grid, 1.0), opt);
  const BalanceReport b = balance_check(rel.records);
  EXPECT_LE(b.second_law, 1e-3);
  EXPECT_LE(b.entropy_balance, 1e-3);
  EXPECT_LE(b.max_F_increase, 1e-10);
  EXPECT_EQ(rel.records.size(), opt.steps + 1);
}

TEST(Thermo, EquilibriumStartIsTrivial) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, 32);
  const FpeOperator op = build_operator(grid, m);
  RelaxationOptions opt;
  opt.dt = op.stability_bound();
  opt.steps = 10;
  const Relaxation rel = relax(op, equilibrium_density(grid, m.phi), opt);
  const BalanceReport b = balance_check(rel.records);
  EXPECT_LE(b.second_law, 1e-10);
  EXPECT_LE(b.entropy_balance, 1e-10);
}

TEST(Thermo, DissipationIgnoresConservativeDirection) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, 32);
  const FpeOperator plus = build_operator(grid, m);
  const FpeOperator minus = build_operator(grid, m.reversed());
  for (std::uint64_t s = 0; s < 5; ++s) {
    const DensityField u = random_density(grid, 100 + s);
    const ThermoRecord a = thermo_snapshot(plus, u), b = thermo_snapshot(minus, u);
    EXPECT_NEAR(a.ep, b.ep, 1e-10);
    EXPECT_NEAR(a.F, b.F, 1e-14);
  }
}

TEST(Thermo, HFunctional) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, 32);
  const FpeOperator op = build_operator(grid, m);
  const Vector& phi = op.potential();
  const Vector ones = Vector::Ones(static_cast<Eigen::Index>(grid.size()));
  EXPECT_NEAR(h_functional(grid, ones, phi), 0.0, 1e-13);
  const DensityField u = random_density(grid, 9);
  const Vector omega = u.values.cwiseProduct(phi.array().exp().matrix());
  EXPECT_NEAR(h_functional(grid, omega, phi), thermo_snapshot(op, u).F, 1e-10);
  Vector bad = ones;
  bad[3] = 0.0;
  EXPECT_THROW(h_functional(grid, bad, phi), DensityError);
}

TEST(Thermo, HTheoremAlongOmegaEvolution) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, 32);
  const FpeOperator op = build_operator(grid, m);
  const Vector& phi = op.potential();
  Vector omega = displaced(grid, 1.5).values.cwiseProduct(phi.array().exp().matrix());
  double H = h_functional(grid, omega, phi);
  for (int i = 0; i < 200; ++i) {
    omega = evolve_omega(op, omega, op.stability_bound());
    const double next = h_functional(grid, omega, phi);
    EXPECT_LE(next - H, 1e-10) << "step " << i;
    H = next;
  }
}

TEST(Thermo, TimeDerivativeExactForQuadratics) {
  std::vector<double> v;
  for (int i = 0; i < 6; ++i) v.push_back(0.3 * i * i - i + 2.0);
  const auto d = time_derivative(v, 1.0);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(d[static_cast<std::size_t>(i)], 0.6 * i - 1.0, 1e-13);
  const std::vector<double> two{1.0, 2.0};
  EXPECT_THROW(time_derivative(two, 1.0), InvalidArgument);
}

TEST(Thermo, BalanceCheckRejectsNonUniformTimes) {
  std::vector<ThermoRecord> r(4);
  r[0].t = 0.0;
  r[1].t = 0.1;
  r[2].t = 0.25;
  r[3].t = 0.3;
  EXPECT_THROW(balance_check(r), InvalidArgument);
}
