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

#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace orthoflux::runner {

void write_line_plot(std::ostream& os, std::span<const double> x, std::span<const double> y,
                     int width, int height) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("write_line_plot: need two or more matching points");
  }
  constexpr int kMargin = 12;
  std::vector<unsigned char> px(static_cast<std::size_t>(width * height), 255);
  auto set = [&](int i, int j, unsigned char v) {
    if (i >= 0 && i < width && j >= 0 && j < height) {
      px[static_cast<std::size_t>(j * width + i)] = v;
    }
  };
  for (int i = kMargin; i < width - kMargin; ++i) {
    set(i, kMargin, 170);
    set(i, height - kMargin, 170);
  }
  for (int j = kMargin; j <= height - kMargin; ++j) {
    set(kMargin, j, 170);
    set(width - kMargin - 1, j, 170);
  }

  const auto [xlo, xhi] = std::minmax_element(x.begin(), x.end());
  const auto [ylo, yhi] = std::minmax_element(y.begin(), y.end());
  const double xs = *xhi > *xlo ? *xhi - *xlo : 1.0;
  const double ys = *yhi > *ylo ? *yhi - *ylo : 1.0;
  auto col = [&](double v) {
    return kMargin + static_cast<int>(std::lround((v - *xlo) / xs * (width - 2 * kMargin - 1)));
  };
  auto row = [&](double v) {
    return height - kMargin - static_cast<int>(std::lround((v - *ylo) / ys * (height - 2 * kMargin)));
  };
  for (std::size_t k = 1; k < x.size(); ++k) {
    int x0 = col(x[k - 1]), y0 = row(y[k - 1]);
    const int x1 = col(x[k]), y1 = row(y[k]);
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set(x0, y0, 0);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }
  os << "P5\n" << width << ' ' << height << "\n255\n";
  os.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

}  // namespace orthoflux::runner
