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

#include "orthoflux/thermo.hpp"

#include <algorithm>
#include <cmath>

#include "orthoflux/errors.hpp"

namespace orthoflux {

namespace {

constexpr double kLogFloor = 1e-300;

Vector log_omega(const FpeOperator& op, const Vector& u) {
  return u.array().max(kLogFloor).log() + op.potential().array();
}

// sum over interior faces of flux_f * (a_n - a_c) / h_k
double face_pairing(const FpeOperator& op, const Vector& flux, const Vector& a) {
  const Grid& grid = op.grid();
  const std::size_t N = grid.size();
  double acc = 0.0;
  for (std::size_t f = 0; f < op.face_count(); ++f) {
    if (op.is_boundary_face(f)) continue;
    const int k = static_cast<int>(f / N);
    const std::size_t c = f % N;
    const std::size_t nb = c + grid.stride(k);
    acc += flux[static_cast<Eigen::Index>(f)] *
           (a[static_cast<Eigen::Index>(nb)] - a[static_cast<Eigen::Index>(c)]) /
           grid.h(k);
  }
  return acc;
}

double log_mean(double a, double b) {
  if (a == b) return a;
  const double la = std::log(a), lb = std::log(b);
  if (std::abs(la - lb) < 1e-6) {
    const double m = 0.5 * (a + b);
    const double r = (b - a) / (b + a);
    return m * (1.0 - r * r / 3.0);
  }
  return (b - a) / (lb - la);
}

}  // namespace

double entropy_production(const FpeOperator& op, const Vector& u) {
  const Vector jd = op.dissipative_flux() * u;
  return -face_pairing(op, jd, log_omega(op, u)) * op.grid().cell_volume();
}

double entropy_production_quadratic(const FpeOperator& op, const Vector& u) {
  const Grid& grid = op.grid();
  const std::size_t N = grid.size();
  const SparseMatrix& Jd = op.dissipative_flux();
  const Vector& phi = op.potential();
  const Vector omega = u.array().max(kLogFloor) * phi.array().exp();
  double acc = 0.0;
  for (std::size_t f = 0; f < op.face_count(); ++f) {
    const auto fi = static_cast<Eigen::Index>(f);
    if (Jd.outerIndexPtr()[fi + 1] - Jd.outerIndexPtr()[fi] > 2) {
      throw InvalidArgument(
          "entropy_production_quadratic: operator has mixed-derivative terms");
    }
    if (op.is_boundary_face(f)) continue;
    const int k = static_cast<int>(f / N);
    const auto c = static_cast<Eigen::Index>(f % N);
    const auto nb = c + static_cast<Eigen::Index>(grid.stride(k));
    // Jd_f = -W (Omega_n - Omega_c) with W = Jd(f, c) exp(-phi_c).
    const double W = Jd.coeff(fi, c) * std::exp(-phi[c]);
    const double dl = std::log(omega[nb]) - std::log(omega[c]);
    acc += W * log_mean(omega[c], omega[nb]) * dl * dl / grid.h(k);
  }
  return acc * grid.cell_volume();
}

double heat_flux(const FpeOperator& op, const Vector& u) {
  return -op.potential().dot(op.apply(u)) * op.grid().cell_volume();
}

ThermoRecord thermo_snapshot(const FpeOperator& op, const DensityField& u) {
  if (!(u.grid == op.grid())) {
    throw InvalidArgument("thermo_snapshot: density lives on a different grid");
  }
  require_normalized(u, 1e-6);
  const double vol = op.grid().cell_volume();
  const Vector& phi = op.potential();
  ThermoRecord r;
  r.t = u.t;
  double U = 0.0, S = 0.0, F = 0.0;
  for (Eigen::Index c = 0; c < u.values.size(); ++c) {
    const double uc = u.values[c];
    U += uc * phi[c];
    if (uc > 0.0) {
      const double lu = std::log(uc);
      S -= uc * lu;
      F += uc * (lu + phi[c]);
    }
  }
  r.U = U * vol;
  r.S = S * vol;
  r.F = F * vol;
  r.ep = entropy_production(op, u.values);
  r.hd = heat_flux(op, u.values);
  return r;
}

double h_functional(const Grid& grid, const Vector& omega, const Vector& phi) {
  if (omega.size() != static_cast<Eigen::Index>(grid.size()) ||
      phi.size() != omega.size()) {
    throw InvalidArgument("h_functional: size mismatch");
  }
  double acc = 0.0;
  for (Eigen::Index c = 0; c < omega.size(); ++c) {
    const double w = omega[c];
    if (!(w > 0.0)) {
      throw DensityError("h_functional: Omega is not positive at cell " +
                         std::to_string(c));
    }
    acc += w * std::log(w) * std::exp(-phi[c]);
  }
  return acc * grid.cell_volume();
}

std::vector<double> time_derivative(std::span<const double> v, double dt) {
  const std::size_t n = v.size();
  if (n < 3) throw InvalidArgument("time_derivative: need at least three samples");
  std::vector<double> d(n);
  d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dt);
  d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dt);
  return d;
}

BalanceReport balance_check(std::span<const ThermoRecord> records) {
  const std::size_t n = records.size();
  if (n < 3) throw InvalidArgument("balance_check: need at least three records");
  const double dt = records[1].t - records[0].t;
  if (!(dt > 0.0)) throw InvalidArgument("balance_check: times must increase");
  for (std::size_t i = 1; i < n; ++i) {
    const double step = records[i].t - records[i - 1].t;
    if (std::abs(step - dt) > 1e-9 * std::max(1.0, std::abs(records[i].t))) {
      throw InvalidArgument("balance_check: non-uniform time series at record " +
                            std::to_string(i));
    }
  }
  std::vector<double> F(n), S(n);
  for (std::size_t i = 0; i < n; ++i) {
    F[i] = records[i].F;
    S[i] = records[i].S;
  }
  const auto dF = time_derivative(F, dt);
  const auto dS = time_derivative(S, dt);
  BalanceReport rep;
  for (std::size_t i = 0; i < n; ++i) {
    const ThermoRecord& r = records[i];
    rep.second_law = std::max(rep.second_law, std::abs(dF[i] + r.ep));
    rep.entropy_balance = std::max(rep.entropy_balance, std::abs(dS[i] - r.ep + r.hd));
    if (i > 0) rep.max_F_increase = std::max(rep.max_F_increase, F[i] - F[i - 1]);
  }
  return rep;
}

Relaxation relax(const FpeOperator& op, DensityField u0,
                 const RelaxationOptions& options) {
  if (options.record_every == 0) {
    throw InvalidArgument("relax: record_every must be positive");
  }
  const Propagator prop = forward_propagator(op, options.dt, options.method);
  Relaxation out;
  DensityField u = std::move(u0);
  const double t0 = u.t;
  auto record = [&] {
    out.records.push_back(thermo_snapshot(op, u));
    if (options.keep_history) out.history.push_back(u);
  };
  record();
  for (std::size_t s = 1; s <= options.steps; ++s) {
    u.values = prop.step(u.values);
    // Accumulating t += dt drifts; recompute from the step count.
    u.t = t0 + static_cast<double>(s) * options.dt;
    if (s % options.record_every == 0) record();
  }
  out.final_state = std::move(u);
  return out;
}

}  // namespace orthoflux
