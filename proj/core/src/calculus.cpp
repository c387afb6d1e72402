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

#include "orthoflux/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "orthoflux/errors.hpp"
#include "orthoflux/rng.hpp"

namespace orthoflux {

namespace {

std::string describe(const Vector& x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) os << ", ";
    os << x[i];
  }
  os << ')';
  return os.str();
}

void require_finite(double v, const Vector& x, const char* what) {
  if (!std::isfinite(v)) {
    throw NonFiniteValue(std::string(what) + " is not finite at probe " +
                         describe(x));
  }
}

void require_finite(const Vector& v, const Vector& x, const char* what) {
  if (!v.allFinite()) {
    throw NonFiniteValue(std::string(what) + " is not finite at probe " +
                         describe(x));
  }
}

class StatsAccumulator {
 public:
  void add(double v) {
    max_ = std::max(max_, std::abs(v));
    sum_sq_ += v * v;
    ++n_;
  }
  ResidualStats result() const {
    ResidualStats r;
    r.max_abs = max_;
    r.rms = n_ ? std::sqrt(sum_sq_ / static_cast<double>(n_)) : 0.0;
    return r;
  }

 private:
  double max_ = 0.0;
  double sum_sq_ = 0.0;
  std::size_t n_ = 0;
};

}  // namespace

std::vector<Vector> random_probes(const Box& box, std::size_t count,
                                  std::uint64_t seed, double margin) {
  CounterStream rng(seed, 0, StreamDomain::probes);
  const int n = box.dim();
  const Vector w = box.width();
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Vector x(n);
    for (int i = 0; i < n; ++i) {
      x[i] = box.lower[i] + w[i] * (margin + (1.0 - 2.0 * margin) * rng.uniform());
    }
    out.push_back(std::move(x));
  }
  return out;
}

ResidualStats orthogonality_residual(const ScalarField& phi,
                                     const VectorField& g,
                                     std::span<const Vector> probes) {
  if (probes.empty()) throw InvalidArgument("orthogonality_residual: no probes");
  StatsAccumulator acc;
  for (const Vector& x : probes) {
    const Vector grad = phi.gradient(x);
    const Vector gx = g(x);
    require_finite(grad, x, "grad phi");
    require_finite(gx, x, "g");
    acc.add(grad.dot(gx));
  }
  return acc.result();
}

ResidualStats divergence_residual(const VectorField& g,
                                  std::span<const Vector> probes) {
  if (probes.empty()) throw InvalidArgument("divergence_residual: no probes");
  StatsAccumulator acc;
  for (const Vector& x : probes) {
    const double d = g.divergence(x);
    require_finite(d, x, "div g");
    acc.add(d);
  }
  return acc.result();
}

Decomposition decompose_drift(const VectorField& b, const MatrixField& D,
                              const ScalarField& phi,
                              std::span<const Vector> probes) {
  Decomposition out;
  out.g = b + apply(D, phi);
  if (!probes.empty()) {
    out.div_g = divergence_residual(out.g, probes);
    out.ortho = orthogonality_residual(phi, out.g, probes);
  }
  return out;
}

VectorField eta_from_phi(const MatrixField& D, const ScalarField& phi) {
  const VectorField dissipative = apply(D, phi);
  if (D.is_constant()) return dissipative.negated();
  const int n = D.dim();
  auto value = [D, dissipative, n](ConstPoint x, PointOut out) {
    std::vector<double> tmp(static_cast<std::size_t>(n));
    D.row_divergence(x, out);
    dissipative(x, tmp);
    for (int i = 0; i < n; ++i) out[i] -= tmp[static_cast<std::size_t>(i)];
  };
  // The divergence of eta needs second derivatives of D; leave it to
  // finite differences of the value.
  return VectorField(n, std::move(value));
}

ParallelPerp split_parallel_perp(const VectorField& j, const ScalarField& phi,
                                 const Vector& x, double eps_grad) {
  const Vector grad = phi.gradient(x);
  const Vector jx = j(x);
  ParallelPerp out;
  const double norm2 = grad.squaredNorm();
  if (std::sqrt(norm2) < eps_grad) {
    out.parallel = Vector::Zero(jx.size());
    out.perp = jx;
    return out;
  }
  out.parallel = (jx.dot(grad) / norm2) * grad;
  out.perp = jx - out.parallel;
  return out;
}

ConservativeFlow canonical_conservative(const VectorField& b,
                                        const MatrixField& D,
                                        const ScalarField& phi,
                                        std::span<const Vector> probes) {
  ConservativeFlow out;
  out.j = b + apply(D, phi);
  StatsAccumulator acc;
  for (const Vector& x : probes) {
    // div(e^{-phi} j) = e^{-phi} (div j - grad phi . j)
    const Vector grad = phi.gradient(x);
    const Vector jx = out.j(x);
    const double r =
        std::exp(-phi(x)) * (out.j.divergence(x) - grad.dot(jx));
    require_finite(r, x, "div(exp(-phi) j)");
    acc.add(r);
  }
  out.residual = acc.result();
  return out;
}

EquilibriumReport validate_equilibrium(const FieldModel& model,
                                       std::size_t probes, double ortho_tol,
                                       double div_tol) {
  const auto pts = random_probes(model.box, probes, 0x5eed);
  EquilibriumReport r;
  r.ortho = orthogonality_residual(model.phi, model.g, pts);
  r.div_g = divergence_residual(model.g, pts);
  double ortho_scale = 1.0, div_scale = 1.0;
  for (const Vector& x : pts) {
    const double gx = model.g(x).norm();
    ortho_scale = std::max(ortho_scale, model.phi.gradient(x).norm() * gx);
    div_scale = std::max(div_scale, gx);
  }
  r.ok = r.ortho.max_abs <= ortho_tol * ortho_scale &&
         r.div_g.max_abs <= div_tol * div_scale;
  if (model.equilibrium && !r.ok) {
    std::ostringstream msg;
    msg << "model '" << model.name << "' is tagged equilibrium but has "
        << "orthogonality residual " << r.ortho.max_abs
        << " and divergence residual " << r.div_g.max_abs;
    throw InvalidArgument(msg.str());
  }
  return r;
}

}  // namespace orthoflux
