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

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "orthoflux/fpe.hpp"
#include "orthoflux/grid.hpp"
#include "orthoflux/sde.hpp"
#include "orthoflux/thermo.hpp"

namespace orthoflux {

/// Full-precision scientific notation, 17 significant digits.
std::string format_double(double v);

/// Binary array file: a text header
///   orthoflux-array v1
///   shape <d0> <d1> ...
///   bounds <lo0> <hi0> <lo1> <hi1> ...   (may be empty)
///   time <t>
///   end
/// followed by prod(shape) little-endian float64 values in row-major order.
struct ArrayFile {
  std::vector<std::size_t> shape;
  std::vector<double> bounds;
  double time = 0.0;
  std::vector<double> data;
};

void write_array(std::ostream& os, const ArrayFile& a);
ArrayFile read_array(std::istream& is);
void write_array_file(const std::string& path, const ArrayFile& a);
ArrayFile read_array_file(const std::string& path);

ArrayFile to_array(const DensityField& u);
/// Shape [paths, records, dim]; bounds empty; time is the last record time.
ArrayFile to_array(const Ensemble& ens);

/// Columns i0.., x0.., u.
void write_density_csv(std::ostream& os, const DensityField& u);
/// Columns path_id, step, t, x1..xn.
void write_ensemble_csv(std::ostream& os, const Ensemble& ens);
/// Columns t, U, S, F, ep, hd.
void write_thermo_csv(std::ostream& os, std::span<const ThermoRecord> records);

/// 8-bit binary PGM heatmap of a 2D density (row 0 = largest last
/// coordinate). Throws for non-2D grids.
void write_pgm(std::ostream& os, const DensityField& u);

}  // namespace orthoflux
