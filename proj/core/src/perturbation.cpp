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

#include "orthoflux/perturbation.hpp"

#include <algorithm>
#include <cmath>

#include "orthoflux/errors.hpp"

namespace orthoflux {

namespace {

void require_probes(std::span<const Vector> probes) {
  if (probes.empty()) throw InvalidArgument("perturbation residuals need probes");
}

}  // namespace

Phi0Residual residual_phi0(const EpsilonModel& m, std::span<const Vector> probes) {
  require_probes(probes);
  const VectorField flow = m.b + apply(m.D, m.phi0);
  Phi0Residual r;
  for (const Vector& x : probes) {
    r.orthogonality =
        std::max(r.orthogonality, std::abs(m.phi0.gradient(x).dot(flow(x))));
    r.divergence = std::max(r.divergence, std::abs(flow.divergence(x)));
  }
  return r;
}

double residual_phi1(const EpsilonModel& m, std::span<const Vector> probes) {
  require_probes(probes);
  const VectorField dphi0 = apply(m.D, m.phi0);
  const VectorField flow = m.b + dphi0;
  double worst = 0.0;
  for (const Vector& x : probes) {
    const Vector transport = 2.0 * dphi0(x) + m.b(x);
    const double r = m.phi1.gradient(x).dot(transport) - flow.divergence(x);
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

double residual_phi2(const EpsilonModel& m, std::span<const Vector> probes) {
  require_probes(probes);
  const VectorField dphi0 = apply(m.D, m.phi0);
  const VectorField dphi1 = apply(m.D, m.phi1);
  double worst = 0.0;
  for (const Vector& x : probes) {
    const Vector transport = 2.0 * dphi0(x) + m.b(x);
    const Vector g1 = m.phi1.gradient(x);
    const double r = m.phi2.gradient(x).dot(transport) - dphi1.divergence(x) +
                     g1.dot(dphi1(x));
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

std::string to_string(ReversalClass c) {
  switch (c) {
    case ReversalClass::overdamped:
      return "overdamped";
    case ReversalClass::underdamped:
      return "underdamped";
    case ReversalClass::neither:
      break;
  }
  return "neither";
}

Classification reversal_classify(const VectorField& b, const MatrixField& D,
                                 const ScalarField& phi,
                                 std::span<const Vector> probes) {
  require_probes(probes);
  const VectorField j = b + apply(D, phi);
  Classification c;
  for (const Vector& x : probes) {
    const Vector jx = j(x);
    const Vector grad = phi.gradient(x);
    c.scale = std::max(c.scale, b(x).norm());
    c.grad_scale = std::max(c.grad_scale, grad.norm());
    c.current = std::max(c.current, jx.norm());
    c.divergence = std::max(c.divergence, std::abs(j.divergence(x)));
    c.orthogonality = std::max(c.orthogonality, std::abs(grad.dot(jx)));
  }
  const double zero = 1e-6 * c.scale;
  if (c.current <= zero) {
    c.label = ReversalClass::overdamped;
  } else if (c.divergence <= zero &&
             c.orthogonality <= zero * std::max(1.0, c.grad_scale)) {
    c.label = ReversalClass::underdamped;
  } else {
    c.label = ReversalClass::neither;
  }
  return c;
}

}  // namespace orthoflux
