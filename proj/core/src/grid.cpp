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

#include "orthoflux/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "orthoflux/errors.hpp"

namespace orthoflux {

Grid::Grid(Box box, std::vector<int> cells, std::size_t cap)
    : box_(std::move(box)), cells_(std::move(cells)) {
  const int n = static_cast<int>(cells_.size());
  if (n < 1 || n > kMaxGridDim) {
    throw InvalidArgument("Grid: dimension must be 1, 2 or 3");
  }
  if (box_.dim() != n) {
    throw InvalidArgument("Grid: box and cell counts disagree on dimension");
  }
  size_ = 1;
  for (int c : cells_) {
    if (c < 8) throw InvalidArgument("Grid: at least 8 cells per axis");
    size_ *= static_cast<std::size_t>(c);
    if (size_ > cap) {
      throw InvalidArgument("Grid: cell count exceeds cap of " +
                            std::to_string(cap));
    }
  }
  strides_.assign(static_cast<std::size_t>(n), 1);
  for (int i = n - 2; i >= 0; --i) {
    strides_[static_cast<std::size_t>(i)] =
        strides_[static_cast<std::size_t>(i) + 1] *
        static_cast<std::size_t>(cells_[static_cast<std::size_t>(i) + 1]);
  }
  h_.resize(n);
  volume_ = 1.0;
  for (int i = 0; i < n; ++i) {
    h_[i] = (box_.upper[i] - box_.lower[i]) / cells_[static_cast<std::size_t>(i)];
    volume_ *= h_[i];
  }
}

Grid Grid::uniform(const Box& box, int cells_per_axis, std::size_t cap) {
  return Grid(box, std::vector<int>(static_cast<std::size_t>(box.dim()),
                                    cells_per_axis),
              cap);
}

Grid::Index Grid::unflatten(std::size_t flat) const noexcept {
  Index idx{0, 0, 0};
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    idx[i] = static_cast<int>(flat / strides_[i]);
    flat %= strides_[i];
  }
  return idx;
}

std::size_t Grid::flatten(const Index& idx) const noexcept {
  std::size_t flat = 0;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    flat += static_cast<std::size_t>(idx[i]) * strides_[i];
  }
  return flat;
}

void Grid::center(std::size_t flat, PointOut out) const {
  const Index idx = unflatten(flat);
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out[i] = box_.lower[ii] + (idx[i] + 0.5) * h_[ii];
  }
}

Vector Grid::center(std::size_t flat) const {
  Vector x(dim());
  center(flat, view(x));
  return x;
}

std::size_t Grid::locate(ConstPoint x) const {
  Index idx{0, 0, 0};
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const int k = static_cast<int>(std::floor((x[i] - box_.lower[ii]) / h_[ii]));
    idx[i] = std::clamp(k, 0, cells_[i] - 1);
  }
  return flatten(idx);
}

bool Grid::operator==(const Grid& other) const {
  return cells_ == other.cells_ && box_.lower == other.box_.lower &&
         box_.upper == other.box_.upper;
}

Vector cell_values(const Grid& grid, const ScalarField& f) {
  Vector out(static_cast<Eigen::Index>(grid.size()));
  Vector x(grid.dim());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    grid.center(c, view(x));
    const double v = f(x);
    if (!std::isfinite(v)) {
      throw NonFiniteValue("field is not finite at cell " + std::to_string(c));
    }
    out[static_cast<Eigen::Index>(c)] = v;
  }
  return out;
}

Vector normalized_potential(const Grid& grid, const ScalarField& phi) {
  Vector p = cell_values(grid, phi);
  const double pmin = p.minCoeff();
  const double sum = (-(p.array() - pmin)).exp().sum();
  const double log_z = -pmin + std::log(sum * grid.cell_volume());
  p.array() += log_z;
  return p;
}

DensityField equilibrium_density(const Grid& grid, const ScalarField& phi) {
  DensityField u;
  u.grid = grid;
  u.values = (-normalized_potential(grid, phi).array()).exp();
  return u;
}

DensityField gaussian_density(const Grid& grid, const Vector& mu,
                              const Matrix& Sigma) {
  const Eigen::LLT<Matrix> chol(Sigma);
  if (chol.info() != Eigen::Success) {
    throw InvalidArgument("gaussian_density: covariance is not SPD");
  }
  DensityField u;
  u.grid = grid;
  u.values.resize(static_cast<Eigen::Index>(grid.size()));
  Vector x(grid.dim());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    grid.center(c, view(x));
    const Vector d = x - mu;
    u.values[static_cast<Eigen::Index>(c)] = -0.5 * d.dot(chol.solve(d));
  }
  const double vmax = u.values.maxCoeff();
  u.values = (u.values.array() - vmax).exp();
  u.values /= u.values.sum() * grid.cell_volume();
  return u;
}

void require_normalized(const DensityField& u, double tol) {
  if (u.values.size() != static_cast<Eigen::Index>(u.grid.size())) {
    throw DensityError("density size does not match its grid");
  }
  if (!u.values.allFinite()) throw DensityError("density has non-finite values");
  if (u.values.minCoeff() < 0.0) throw DensityError("density has negative values");
  const double m = u.mass();
  if (std::abs(m - 1.0) > tol) {
    throw DensityError("density is not normalized: mass = " + std::to_string(m));
  }
}

double interpolate(const Grid& grid, const Vector& values, ConstPoint x) {
  const int n = grid.dim();
  std::array<int, kMaxGridDim> lo{0, 0, 0};
  std::array<double, kMaxGridDim> frac{0.0, 0.0, 0.0};
  for (int i = 0; i < n; ++i) {
    const double s =
        (x[static_cast<std::size_t>(i)] - grid.box().lower[i]) / grid.h(i) - 0.5;
    const int last = grid.cells(i) - 1;
    if (s <= 0.0) {
      lo[static_cast<std::size_t>(i)] = 0;
      frac[static_cast<std::size_t>(i)] = 0.0;
    } else if (s >= last) {
      lo[static_cast<std::size_t>(i)] = last - 1;
      frac[static_cast<std::size_t>(i)] = 1.0;
    } else {
      const int k = static_cast<int>(s);
      lo[static_cast<std::size_t>(i)] = std::min(k, last - 1);
      frac[static_cast<std::size_t>(i)] = s - lo[static_cast<std::size_t>(i)];
    }
  }
  double acc = 0.0;
  for (int corner = 0; corner < (1 << n); ++corner) {
    double w = 1.0;
    Grid::Index idx{0, 0, 0};
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const int bit = (corner >> i) & 1;
      idx[ui] = lo[ui] + bit;
      w *= bit ? frac[ui] : 1.0 - frac[ui];
    }
    if (w != 0.0) acc += w * values[static_cast<Eigen::Index>(grid.flatten(idx))];
  }
  return acc;
}

double l1_distance(const Grid& grid, const Vector& u, const Vector& v) {
  return (u - v).cwiseAbs().sum() * grid.cell_volume();
}

}  // namespace orthoflux
