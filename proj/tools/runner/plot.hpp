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

namespace orthoflux::runner {

/// Binary PGM line chart of y against x: white canvas, grey frame, black
/// polyline scaled to the data range.
void write_line_plot(std::ostream& os, std::span<const double> x, std::span<const double> y,
                     int width = 480, int height = 270);

}  // namespace orthoflux::runner
