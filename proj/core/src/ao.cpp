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

#include "orthoflux/ao.hpp"

#include <cmath>
#include <sstream>

#include "orthoflux/errors.hpp"

namespace orthoflux {

namespace {

std::string point_string(ConstPoint x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) os << ", ";
    os << x[i];
  }
  os << ')';
  return os.str();
}

// Inverse of S + A with a conditioning guard; returns the condition estimate.
double invert_checked(const Matrix& S, const Matrix& A, ConstPoint x,
                      Matrix& G) {
  const Eigen::PartialPivLU<Matrix> lu(S + A);
  const double rcond = lu.rcond();
  if (!(rcond > 0.0) || 1.0 / rcond > kMaxConditionNumber) {
    throw SingularMatrix("S + A is singular at " + point_string(x));
  }
  G = lu.inverse();
  return 1.0 / rcond;
}

}  // namespace

FieldModel AoAssembly::field_model(const AoModel& m) const {
  FieldModel out;
  out.name = "ao";
  out.phi = m.phi;
  out.g = g;
  out.D = Deff;
  out.box = m.box;
  out.equilibrium = true;
  return out;
}

AoAssembly assemble_ao(const AoModel& m, std::span<const Vector> probes) {
  const int n = m.phi.dim();
  if (m.S.dim() != n || m.A.dim() != n) {
    throw InvalidArgument("assemble_ao: S, A and phi must share a dimension");
  }
  AoAssembly out;
  Matrix S, A, G;
  for (const Vector& x : probes) {
    m.S(view(x), S);
    m.A(view(x), A);
    if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw InvalidArgument("assemble_ao: S is not symmetric at " +
                            point_string(view(x)));
    }
    if ((A + A.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw InvalidArgument("assemble_ao: A is not antisymmetric at " +
                            point_string(view(x)));
    }
    out.max_condition =
        std::max(out.max_condition, invert_checked(S, A, view(x), G));
  }

  if (m.S.is_constant() && m.A.is_constant()) {
    const Matrix& Sc = m.S.constant_value();
    const Matrix& Ac = m.A.constant_value();
    std::vector<double> origin(static_cast<std::size_t>(n), 0.0);
    out.max_condition =
        std::max(out.max_condition, invert_checked(Sc, Ac, origin, G));
    Matrix Deff = G * Sc * G.transpose();
    Deff = 0.5 * (Deff + Deff.transpose()).eval();
    out.G = MatrixField::constant(G);
    out.Deff = MatrixField::constant(Deff);
    out.b = apply(out.G, m.phi).negated();
    // Deff - G = G (S - (S + A)^T) G^T = G A G^T, exactly antisymmetric.
    Matrix K = G * Ac * G.transpose();
    K = 0.5 * (K - K.transpose()).eval();
    out.g = apply(MatrixField::constant(K), m.phi);
    return out;
  }

  const MatrixField Sf = m.S, Af = m.A;
  out.G = MatrixField(n, [Sf, Af](ConstPoint x, Matrix& G) {
    Matrix S, A;
    Sf(x, S);
    Af(x, A);
    invert_checked(S, A, x, G);
  });
  const MatrixField Gf = out.G;
  out.Deff = MatrixField(n, [Sf, Gf](ConstPoint x, Matrix& D) {
    Matrix S, G;
    Sf(x, S);
    Gf(x, G);
    D = G * S * G.transpose();
    D = 0.5 * (D + D.transpose()).eval();
  });
  out.b = apply(out.G, m.phi).negated();
  const ScalarField phi = m.phi;
  out.g = VectorField(n, [Gf, Af, phi, n](ConstPoint x, PointOut o) {
    Matrix G, A;
    Gf(x, G);
    Af(x, A);
    Vector grad(n);
    phi.gradient(x, view(grad));
    const Vector w = G.transpose() * grad;
    Eigen::Map<Vector>(o.data(), n) = G * (0.5 * (A - A.transpose()) * w);
  });
  return out;
}

double ao_orthogonality_check(const AoModel& m, std::span<const Vector> probes) {
  const AoAssembly a = assemble_ao(m, probes);
  double worst = 0.0;
  for (const Vector& x : probes) {
    worst = std::max(worst, std::abs(m.phi.gradient(x).dot(a.g(x))));
  }
  return worst;
}

AoModel random_ao_model(int n, CounterStream& rng, double quartic) {
  Matrix C(n, n), R(n, n);
  Vector q(n);
  for (int i = 0; i < n; ++i) {
    q[i] = 0.5 + 1.5 * rng.uniform();
    for (int j = 0; j < n; ++j) {
      C(i, j) = rng.normal();
      R(i, j) = rng.normal();
    }
  }
  AoModel m;
  m.S = MatrixField::constant(C * C.transpose() / n +
                              0.5 * Matrix::Identity(n, n));
  m.A = MatrixField::constant(0.5 * (R - R.transpose()));
  m.phi = ScalarField(
      n,
      [q, quartic](ConstPoint x) {
        double v = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double xi = x[i];
          v += 0.5 * q[static_cast<Eigen::Index>(i)] * xi * xi +
               quartic * xi * xi * xi * xi;
        }
        return v;
      },
      [q, quartic](ConstPoint x, PointOut out) {
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double xi = x[i];
          out[i] = q[static_cast<Eigen::Index>(i)] * xi +
                   4.0 * quartic * xi * xi * xi;
        }
      },
      [q, quartic](ConstPoint x, Matrix& H) {
        const auto dim = static_cast<Eigen::Index>(x.size());
        H.setZero(dim, dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
          const double xi = x[static_cast<std::size_t>(i)];
          H(i, i) = q[i] + 12.0 * quartic * xi * xi;
        }
      });
  const Vector sd = q.cwiseSqrt().cwiseInverse();
  m.box = Box(-6.0 * sd, 6.0 * sd);
  return m;
}

}  // namespace orthoflux
