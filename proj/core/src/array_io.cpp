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

#include "orthoflux/array_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "orthoflux/errors.hpp"

namespace orthoflux {

namespace {

constexpr const char* kMagic = "orthoflux-array v1";

void put_le(std::ostream& os, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

double get_le(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) {
    throw Error("array file: truncated payload");
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

void write_array(std::ostream& os, const ArrayFile& a) {
  std::size_t count = 1;
  for (std::size_t d : a.shape) count *= d;
  if (count != a.data.size()) throw InvalidArgument("write_array: shape does not match data");
  os << kMagic << '\n' << "shape";
  for (std::size_t d : a.shape) os << ' ' << d;
  os << '\n' << "bounds";
  for (double b : a.bounds) os << ' ' << format_double(b);
  os << '\n' << "time " << format_double(a.time) << '\n' << "end\n";
  for (double v : a.data) put_le(os, v);
}

ArrayFile read_array(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kMagic) throw Error("array file: bad magic line");
  ArrayFile a;
  bool have_shape = false;
  while (std::getline(is, line)) {
    if (line == "end") break;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "shape") {
      std::size_t d;
      while (ls >> d) a.shape.push_back(d);
      have_shape = true;
    } else if (key == "bounds") {
      double b;
      while (ls >> b) a.bounds.push_back(b);
    } else if (key == "time") {
      ls >> a.time;
    } else {
      throw Error("array file: unknown header key '" + key + "'");
    }
  }
  if (!have_shape) throw Error("array file: missing shape");
  std::size_t count = 1;
  for (std::size_t d : a.shape) count *= d;
  a.data.resize(count);
  for (double& v : a.data) v = get_le(is);
  return a;
}

void write_array_file(const std::string& path, const ArrayFile& a) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_array(os, a);
}

ArrayFile read_array_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  return read_array(is);
}

ArrayFile to_array(const DensityField& u) {
  ArrayFile a;
  for (int c : u.grid.shape()) a.shape.push_back(static_cast<std::size_t>(c));
  for (int i = 0; i < u.grid.dim(); ++i) {
    a.bounds.push_back(u.grid.box().lower[i]);
    a.bounds.push_back(u.grid.box().upper[i]);
  }
  a.time = u.t;
  a.data.assign(u.values.data(), u.values.data() + u.values.size());
  return a;
}

ArrayFile to_array(const Ensemble& ens) {
  ArrayFile a;
  a.shape = {ens.n_paths, ens.records(), static_cast<std::size_t>(ens.dim)};
  a.time = ens.times.empty() ? 0.0 : ens.times.back();
  a.data = ens.data;
  return a;
}

void write_density_csv(std::ostream& os, const DensityField& u) {
  const int n = u.grid.dim();
  for (int i = 0; i < n; ++i) os << 'i' << i << ',';
  for (int i = 0; i < n; ++i) os << 'x' << i << ',';
  os << "u\n";
  Vector x(n);
  for (std::size_t c = 0; c < u.grid.size(); ++c) {
    const auto idx = u.grid.unflatten(c);
    u.grid.center(c, view(x));
    for (int i = 0; i < n; ++i) os << idx[static_cast<std::size_t>(i)] << ',';
    for (int i = 0; i < n; ++i) os << format_double(x[i]) << ',';
    os << format_double(u.values[static_cast<Eigen::Index>(c)]) << '\n';
  }
}

void write_ensemble_csv(std::ostream& os, const Ensemble& ens) {
  os << "path_id,step,t";
  for (int i = 1; i <= ens.dim; ++i) os << ",x" << i;
  os << '\n';
  for (std::size_t p = 0; p < ens.n_paths; ++p) {
    for (std::size_t r = 0; r < ens.records(); ++r) {
      os << p << ',' << ens.steps[r] << ',' << format_double(ens.times[r]);
      for (double v : ens.state(p, r)) os << ',' << format_double(v);
      os << '\n';
    }
  }
}

void write_thermo_csv(std::ostream& os, std::span<const ThermoRecord> records) {
  os << "t,U,S,F,ep,hd\n";
  for (const ThermoRecord& r : records) {
    os << format_double(r.t) << ',' << format_double(r.U) << ',' << format_double(r.S)
       << ',' << format_double(r.F) << ',' << format_double(r.ep) << ','
       << format_double(r.hd) << '\n';
  }
}

void write_pgm(std::ostream& os, const DensityField& u) {
  if (u.grid.dim() != 2) throw InvalidArgument("write_pgm: needs a 2D grid");
  const int nx = u.grid.cells(0), ny = u.grid.cells(1);
  const double vmax = u.values.maxCoeff();
  os << "P5\n" << nx << ' ' << ny << "\n255\n";
  for (int j = ny - 1; j >= 0; --j) {
    for (int i = 0; i < nx; ++i) {
      const double v = u.values[static_cast<Eigen::Index>(u.grid.flatten({i, j, 0}))];
      const double s = vmax > 0.0 ? v / vmax : 0.0;
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * std::clamp(s, 0.0, 1.0)))));
    }
  }
}

}  // namespace orthoflux
