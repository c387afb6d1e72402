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

#include "orthoflux/models.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "orthoflux/calculus.hpp"
#include "orthoflux/errors.hpp"

namespace orthoflux {

namespace {

constexpr int kNormalizerCells = 256;

double second_derivative_at_zero(const ScalarField& U) {
  const Vector x0 = Vector::Zero(1);
  return U.hessian(x0)(0, 0);
}

}  // namespace

ScalarField anharmonic_potential(double k, double a) {
  return ScalarField(
      1, [k, a](ConstPoint x) { return 0.5 * k * x[0] * x[0] + 0.25 * a * std::pow(x[0], 4); },
      [k, a](ConstPoint x, PointOut out) { out[0] = k * x[0] + a * x[0] * x[0] * x[0]; },
      [k, a](ConstPoint x, Matrix& H) {
        H.resize(1, 1);
        H(0, 0) = k + 3.0 * a * x[0] * x[0];
      });
}

FieldModel klein_kramers(const KramersParams& p) {
  if (!(p.mass > 0.0) || !(p.kT > 0.0)) {
    throw InvalidArgument("klein_kramers: mass and kT must be positive");
  }
  if (p.U.dim() != 1 || p.friction.dim() != 1) {
    throw InvalidArgument("klein_kramers: U and friction are functions of x only");
  }
  const double m = p.mass, kT = p.kT;
  const ScalarField U = p.U, eta = p.friction;
  FieldModel out;
  out.name = "klein_kramers";
  out.phi = ScalarField(
      2,
      [U, m, kT](ConstPoint x) { return (0.5 * m * x[1] * x[1] + U(x.first(1))) / kT; },
      [U, m, kT](ConstPoint x, PointOut o) {
        double dU;
        U.gradient(x.first(1), PointOut(&dU, 1));
        o[0] = dU / kT;
        o[1] = m * x[1] / kT;
      },
      [U, m, kT](ConstPoint x, Matrix& H) {
        Matrix h1;
        U.hessian(x.first(1), h1);
        H.setZero(2, 2);
        H(0, 0) = h1(0, 0) / kT;
        H(1, 1) = m / kT;
      });
  out.g = VectorField(
      2,
      [U, m](ConstPoint x, PointOut o) {
        double dU;
        U.gradient(x.first(1), PointOut(&dU, 1));
        o[0] = x[1];
        o[1] = -dU / m;
      },
      [](ConstPoint) { return 0.0; });

  // Friction depends on x only, so the row divergence of D vanishes.
  out.D = MatrixField(
      2,
      [eta, m, kT](ConstPoint x, Matrix& D) {
        const double e = eta(x.first(1));
        if (e < 0.0) throw InvalidArgument("klein_kramers: friction must be nonnegative");
        D.setZero(2, 2);
        D(1, 1) = kT * e / (m * m);
      },
      [](ConstPoint, PointOut o) { o[0] = o[1] = 0.0; });

  double xw = p.x_half_width, yw = p.y_half_width;
  if (!(xw > 0.0)) {
    const double k = second_derivative_at_zero(U);
    xw = k > 0.0 ? 6.0 * std::sqrt(kT / k) : 6.0;
  }
  if (!(yw > 0.0)) yw = 6.0 * std::sqrt(kT / m);
  Vector w(2);
  w << xw, yw;
  out.box = Box(-w, w);
  out.log_z = box_log_normalizer(out.phi, out.box, kNormalizerCells);
  out.singular_diffusion = true;
  out.equilibrium = true;
  return out;
}

HamiltonianModel stochastic_hamiltonian(const HamiltonianParams& p) {
  const int n2 = p.H.dim();
  if (n2 % 2 != 0) throw InvalidArgument("stochastic_hamiltonian: H needs 2n variables");
  if (p.Gamma.dim() != n2) throw InvalidArgument("stochastic_hamiltonian: Gamma has wrong size");
  if (p.box.dim() != n2) throw InvalidArgument("stochastic_hamiltonian: box has wrong size");
  const int n = n2 / 2;
  const ScalarField H = p.H;
  HamiltonianModel out;
  FieldModel& fm = out.model;
  fm.name = "stochastic_hamiltonian";
  fm.phi = H;
  fm.g = VectorField(
      n2,
      [H, n, n2](ConstPoint x, PointOut o) {
        std::vector<double> grad(static_cast<std::size_t>(n2));
        H.gradient(x, grad);
        for (int i = 0; i < n; ++i) {
          o[static_cast<std::size_t>(i)] = grad[static_cast<std::size_t>(n + i)];
          o[static_cast<std::size_t>(n + i)] = -grad[static_cast<std::size_t>(i)];
        }
      },
      // The symplectic flow is divergence-free by the symmetry of Hess H.
      [](ConstPoint) { return 0.0; });
  if (p.Gamma.is_constant()) {
    const Matrix& G = p.Gamma.constant_value();
    fm.D = MatrixField::constant(0.5 * G * G.transpose());
  } else {
    const MatrixField Gamma = p.Gamma;
    fm.D = MatrixField(n2, [Gamma](ConstPoint x, Matrix& D) {
      Matrix G;
      Gamma(x, G);
      D = 0.5 * G * G.transpose();
    });
  }
  fm.box = p.box;
  const Vector centre = 0.5 * (p.box.lower + p.box.upper);
  Eigen::SelfAdjointEigenSolver<Matrix> es(fm.D(centre), Eigen::EigenvaluesOnly);
  fm.singular_diffusion = es.eigenvalues().minCoeff() <= 1e-14;
  fm.log_z = n2 <= 3 ? box_log_normalizer(H, p.box, kNormalizerCells) : 0.0;
  fm.equilibrium = true;
  out.eta = eta_from_phi(fm.D, H);
  return out;
}

FieldModel rotational_ou(double gamma, double omega, double d) {
  if (!(gamma > 0.0) || !(d > 0.0)) {
    throw InvalidArgument("rotational_ou: gamma and d must be positive");
  }
  Matrix B(2, 2);
  B << -gamma, omega, -omega, -gamma;
  FieldModel m = linear_equilibrium_fields(
      LinearModel::make(B, d * Matrix::Identity(2, 2)));
  m.name = omega == 0.0 ? "reversible_ou" : "rotational_ou";
  return m;
}

FieldModel reversible_ou(double gamma, double d) {
  return rotational_ou(gamma, 0.0, d);
}

AoModel ao_linear_model(double s, double a, double q) {
  if (!(s > 0.0) || !(q > 0.0)) throw InvalidArgument("ao_linear: s and q must be positive");
  Matrix A(2, 2);
  A << 0.0, a, -a, 0.0;
  AoModel m;
  m.S = MatrixField::constant(s * Matrix::Identity(2, 2));
  m.A = MatrixField::constant(A);
  m.phi = ScalarField::quadratic(q * Matrix::Identity(2, 2));
  m.box = Box::cube(2, 6.0 / std::sqrt(q));
  return m;
}

FieldModel ao_linear(double s, double a, double q) {
  const AoModel am = ao_linear_model(s, a, q);
  const auto probes = random_probes(am.box, 64, 17);
  FieldModel m = assemble_ao(am, probes).field_model(am);
  m.name = "ao_linear";
  m.log_z = std::log(2.0 * std::numbers::pi / q);
  return m;
}

namespace {

double param(const std::map<std::string, double>& p, const std::string& key,
             double fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

std::vector<ModelInfo> build_registry() {
  std::vector<ModelInfo> reg;
  reg.push_back({"rotational_ou",
                 "2D Ornstein-Uhlenbeck with rotation: B = [[-gamma, omega], [-omega, -gamma]], D = d I",
                 {{"gamma", 1.0, "damping rate (> 0)", kPositive},
                  {"omega", 1.0, "angular speed of the conservative flow"},
                  {"d", 1.0, "diffusion coefficient (> 0)", kPositive}},
                 true,
                 [](const std::map<std::string, double>& p) {
                   return rotational_ou(param(p, "gamma", 1.0), param(p, "omega", 1.0),
                                        param(p, "d", 1.0));
                 }});
  reg.push_back({"reversible_ou", "2D Ornstein-Uhlenbeck with g = 0",
                 {{"gamma", 1.0, "damping rate (> 0)", kPositive},
                  {"d", 1.0, "diffusion coefficient (> 0)", kPositive}},
                 true,
                 [](const std::map<std::string, double>& p) {
                   return reversible_ou(param(p, "gamma", 1.0), param(p, "d", 1.0));
                 }});
  reg.push_back({"klein_kramers",
                 "underdamped Langevin particle in U(x) = k x^2/2 + a x^4/4; D is singular",
                 {{"mass", 1.0, "particle mass (> 0)", kPositive},
                  {"k", 1.0, "harmonic stiffness (> 0)", kPositive},
                  {"a", 0.0, "quartic coefficient (>= 0)", 0.0},
                  {"friction", 1.0, "friction coefficient (>= 0)", 0.0},
                  {"kT", 1.0, "temperature (> 0)", kPositive}},
                 true,
                 [](const std::map<std::string, double>& p) {
                   KramersParams kp;
                   kp.mass = param(p, "mass", 1.0);
                   kp.kT = param(p, "kT", 1.0);
                   kp.U = anharmonic_potential(param(p, "k", 1.0), param(p, "a", 0.0));
                   kp.friction = ScalarField::constant(1, param(p, "friction", 1.0));
                   return klein_kramers(kp);
                 }});
  reg.push_back({"stochastic_hamiltonian",
                 "H = y^2/2 + k x^2/2 with noise matrix Gamma = diag(gamma_x, gamma_y)",
                 {{"k", 1.0, "harmonic stiffness (> 0)", kPositive},
                  {"gamma_x", 0.0, "noise amplitude on x"},
                  {"gamma_y", 1.0, "noise amplitude on y"}},
                 true,
                 [](const std::map<std::string, double>& p) {
                   const double k = param(p, "k", 1.0);
                   if (!(k > 0.0)) throw InvalidArgument("stochastic_hamiltonian: k must be positive");
                   Matrix Q(2, 2);
                   Q << k, 0.0, 0.0, 1.0;
                   Matrix G = Matrix::Zero(2, 2);
                   G(0, 0) = param(p, "gamma_x", 0.0);
                   G(1, 1) = param(p, "gamma_y", 1.0);
                   HamiltonianParams hp;
                   hp.H = ScalarField::quadratic(Q);
                   hp.Gamma = MatrixField::constant(G);
                   Vector w(2);
                   w << 6.0 / std::sqrt(k), 6.0;
                   hp.box = Box(-w, w);
                   return stochastic_hamiltonian(hp).model;
                 }});
  reg.push_back({"ao_linear",
                 "Ao construction with S = s I, A = [[0, a], [-a, 0]], phi = q |x|^2 / 2",
                 {{"s", 1.0, "symmetric friction (> 0)", kPositive},
                  {"a", 1.0, "antisymmetric coupling"},
                  {"q", 1.0, "potential curvature (> 0)", kPositive}},
                 true,
                 [](const std::map<std::string, double>& p) {
                   return ao_linear(param(p, "s", 1.0), param(p, "a", 1.0), param(p, "q", 1.0));
                 }});
  return reg;
}

}  // namespace

const std::vector<ModelInfo>& model_registry() {
  static const std::vector<ModelInfo> reg = build_registry();
  return reg;
}

const ModelInfo& find_model(const std::string& name) {
  for (const ModelInfo& m : model_registry()) {
    if (m.name == name) return m;
  }
  throw InvalidArgument("unknown model '" + name + "'");
}

FieldModel make_model(const std::string& name,
                      const std::map<std::string, double>& params) {
  const ModelInfo& info = find_model(name);
  for (const auto& [key, value] : params) {
    const bool known = std::any_of(info.params.begin(), info.params.end(),
                                   [&](const ParamDoc& d) { return d.name == key; });
    if (!known) {
      throw InvalidArgument("model '" + name + "' has no parameter '" + key + "'");
    }
    if (!std::isfinite(value)) {
      throw InvalidArgument("parameter '" + key + "' is not finite");
    }
    const ParamDoc& doc = *std::find_if(info.params.begin(), info.params.end(),
                                        [&](const ParamDoc& d) { return d.name == key; });
    if (value < doc.lo || value > doc.hi) {
      throw InvalidArgument("parameter '" + key + "' is out of range: " + doc.doc);
    }
  }
  FieldModel model = info.make(params);
  if (model.equilibrium) validate_equilibrium(model);
  return model;
}

}  // namespace orthoflux
