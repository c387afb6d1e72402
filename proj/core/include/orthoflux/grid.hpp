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

#include <array>
#include <cstddef>
#include <vector>

#include "orthoflux/fields.hpp"

namespace orthoflux {

inline constexpr std::size_t kDefaultCellCap = std::size_t{1} << 22;
inline constexpr int kMaxGridDim = 3;

/// Uniform cell-centred mesh on a box, at most three axes. Cells are stored
/// row-major: the last axis varies fastest.
class Grid {
 public:
  using Index = std::array<int, kMaxGridDim>;

  Grid() = default;
  Grid(Box box, std::vector<int> cells, std::size_t cap = kDefaultCellCap);
  /// Same count on every axis.
  static Grid uniform(const Box& box, int cells_per_axis,
                      std::size_t cap = kDefaultCellCap);

  int dim() const noexcept { return static_cast<int>(cells_.size()); }
  const Box& box() const noexcept { return box_; }
  int cells(int axis) const { return cells_[static_cast<std::size_t>(axis)]; }
  const std::vector<int>& shape() const noexcept { return cells_; }
  std::size_t size() const noexcept { return size_; }
  double h(int axis) const { return h_[axis]; }
  double cell_volume() const noexcept { return volume_; }
  std::size_t stride(int axis) const {
    return strides_[static_cast<std::size_t>(axis)];
  }

  Index unflatten(std::size_t flat) const noexcept;
  std::size_t flatten(const Index& idx) const noexcept;
  void center(std::size_t flat, PointOut out) const;
  Vector center(std::size_t flat) const;
  /// Cell containing x, clamped to the grid.
  std::size_t locate(ConstPoint x) const;

  bool operator==(const Grid& other) const;

 private:
  Box box_;
  std::vector<int> cells_;
  std::vector<std::size_t> strides_;
  Vector h_;
  std::size_t size_ = 0;
  double volume_ = 0.0;
};

/// A probability density sampled at cell centres.
struct DensityField {
  Grid grid;
  Vector values;
  double t = 0.0;

  double mass() const { return values.sum() * grid.cell_volume(); }
};

/// Raw phi at the cell centres.
Vector cell_values(const Grid& grid, const ScalarField& f);

/// phi at the cell centres shifted so that sum exp(-phi_c) vol = 1.
Vector normalized_potential(const Grid& grid, const ScalarField& phi);

/// exp(-phi) at the cell centres, normalized to unit discrete mass.
DensityField equilibrium_density(const Grid& grid, const ScalarField& phi);

/// Normalized Gaussian N(mu, Sigma) sampled at the cell centres.
DensityField gaussian_density(const Grid& grid, const Vector& mu,
                              const Matrix& Sigma);

/// Throws DensityError if |mass - 1| > tol or a value is negative or not
/// finite.
void require_normalized(const DensityField& u, double tol = 1e-6);

/// Multilinear interpolation of cell values at x, with constant
/// extrapolation beyond the outermost centres.
double interpolate(const Grid& grid, const Vector& values, ConstPoint x);

/// Sum of |u - v| vol.
double l1_distance(const Grid& grid, const Vector& u, const Vector& v);

}  // namespace orthoflux
