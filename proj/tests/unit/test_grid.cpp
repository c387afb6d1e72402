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
#include "orthoflux/grid.hpp"

using namespace orthoflux;

TEST(Grid, Geometry) {
  const Grid g(Box(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0)), {8, 16});
  EXPECT_EQ(g.size(), 128u);
  EXPECT_DOUBLE_EQ(g.h(0), 0.25);
  EXPECT_DOUBLE_EQ(g.h(1), 0.125);
  EXPECT_DOUBLE_EQ(g.cell_volume(), 0.25 * 0.125);
  EXPECT_EQ(g.stride(1), 1u);
  EXPECT_EQ(g.stride(0), 16u);
  const Vector c = g.center(17);
  EXPECT_DOUBLE_EQ(c[0], -1.0 + 1.5 * 0.25);
  EXPECT_DOUBLE_EQ(c[1], -1.0 + 1.5 * 0.125);
  for (std::size_t f = 0; f < g.size(); f += 7) {
    EXPECT_EQ(g.flatten(g.unflatten(f)), f);
    EXPECT_EQ(g.locate(view(g.center(f))), f);
  }
  Vector far(2);
  far << 5.0, -5.0;
  EXPECT_EQ(g.locate(view(far)), g.flatten({7, 0, 0}));
}

TEST(Grid, Rejections) {
  const Box b = Box::cube(2, 1.0);
  EXPECT_THROW(Grid(b, {4, 8}), InvalidArgument);
  EXPECT_THROW(Grid(b, {8}), InvalidArgument);
  EXPECT_THROW(Grid(b, {1024, 1024}, 1000), InvalidArgument);
  EXPECT_THROW(Grid::uniform(Box::cube(4, 1.0), 8), InvalidArgument);
}

TEST(Grid, EquilibriumDensityNormalized) {
  const Grid g = Grid::uniform(Box::cube(2, 5.0), 32);
  const ScalarField phi = ScalarField::quadratic(Matrix::Identity(2, 2));
  const DensityField u = equilibrium_density(g, phi);
  EXPECT_NEAR(u.mass(), 1.0, 1e-14);
  EXPECT_NO_THROW(require_normalized(u, 1e-12));
  const Vector p = normalized_potential(g, phi);
  EXPECT_NEAR((-p.array()).exp().sum() * g.cell_volume(), 1.0, 1e-13);
  // Shifting phi leaves the normalized potential unchanged.
  EXPECT_LT((normalized_potential(g, phi.shifted(3.0)) - p).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Grid, GaussianDensityMoments) {
  const Grid g = Grid::uniform(Box::cube(2, 8.0), 128);
  Vector mu(2);
  mu << 0.5, -1.0;
  Matrix S(2, 2);
  S << 1.0, 0.3, 0.3, 0.5;
  const DensityField u = gaussian_density(g, mu, S);
  Vector m = Vector::Zero(2);
  for (std::size_t c = 0; c < g.size(); ++c) m += u.values[c] * g.cell_volume() * g.center(c);
  EXPECT_LT((m - mu).norm(), 1e-10);
  Matrix bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(gaussian_density(g, mu, bad), InvalidArgument);
}

TEST(Grid, RequireNormalizedRejects) {
  const Grid g = Grid::uniform(Box::cube(1, 1.0), 8);
  DensityField u{g, Vector::Constant(8, 0.5), 0.0};
  EXPECT_NO_THROW(require_normalized(u));
  u.values[0] = -0.1;
  EXPECT_THROW(require_normalized(u), DensityError);
  u.values[0] = 0.6;
  EXPECT_THROW(require_normalized(u), DensityError);
}

TEST(Grid, InterpolationIsExactForLinear) {
  const Grid g = Grid::uniform(Box::cube(2, 1.0), 10);
  Vector v(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) {
    const Vector x = g.center(c);
    v[c] = 2.0 * x[0] - x[1] + 0.5;
  }
  Vector x(2);
  x << 0.33, -0.41;
  EXPECT_NEAR(interpolate(g, v, view(x)), 2.0 * 0.33 + 0.41 + 0.5, 1e-13);
}

TEST(Grid, L1Distance) {
  const Grid g = Grid::uniform(Box::cube(1, 1.0), 8);
  const Vector u = Vector::Constant(8, 0.5);
  Vector v = u;
  v[0] += 0.4;
  EXPECT_NEAR(l1_distance(g, u, v), 0.4 * 0.25, 1e-15);
}
