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

#include "orthoflux/fpe.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "orthoflux/errors.hpp"

namespace orthoflux {

namespace {

// z / (e^z - 1), the exponential-fitting weight.
double bernoulli(double z) {
  if (std::abs(z) < 1e-5) return 1.0 - 0.5 * z + z * z / 12.0;
  return z / std::expm1(z);
}

using Triplets = std::vector<Eigen::Triplet<double>>;

// Five-point Gauss-Legendre rule on [0, 1].
constexpr double kGaussNodes[5] = {0.046910077030668, 0.230765344947158, 0.5,
                                   0.769234655052842, 0.953089922969332};
constexpr double kGaussWeights[5] = {0.118463442528095, 0.239314335249683,
                                     0.284444444444444, 0.239314335249683,
                                     0.118463442528095};

}  // namespace

class OperatorBuilder {
 public:
  static FpeOperator build(const Grid& grid, Vector phi, const FieldModel& model,
                           const OperatorOptions& options, double max_speed);
};

FpeOperator OperatorBuilder::build(const Grid& grid, Vector phi,
                                   const FieldModel& model,
                                   const OperatorOptions& options,
                                   double max_speed) {
  const int n = grid.dim();
  const std::size_t N = grid.size();
  const std::size_t faces = static_cast<std::size_t>(n) * N;
  if (model.dim() != n) {
    throw InvalidArgument("build_operator: model and grid dimensions differ");
  }

  FpeOperator op;
  op.grid_ = grid;
  op.phi_ = std::move(phi);
  const Vector& p = op.phi_;

  // Diffusion matrices at the cell centres, row-major n x n per cell.
  std::vector<double> Dc(N * static_cast<std::size_t>(n * n), 0.0);
  bool has_cross = false;
  double max_trace = 0.0;
  if (options.diffusion) {
    Matrix m;
    Vector x(n);
    for (std::size_t c = 0; c < N; ++c) {
      grid.center(c, view(x));
      model.D(view(x), m);
      if (!m.allFinite()) {
        throw NonFiniteValue("D is not finite at cell " + std::to_string(c));
      }
      double tr = 0.0;
      for (int i = 0; i < n; ++i) {
        tr += m(i, i);
        for (int j = 0; j < n; ++j) {
          Dc[c * static_cast<std::size_t>(n * n) + static_cast<std::size_t>(i * n + j)] =
              0.5 * (m(i, j) + m(j, i));
          if (i != j && m(i, j) != 0.0) has_cross = true;
        }
      }
      max_trace = std::max(max_trace, tr);
    }
  }
  auto D_at = [&](std::size_t c, int i, int j) {
    return Dc[c * static_cast<std::size_t>(n * n) + static_cast<std::size_t>(i * n + j)];
  };

  // Face geometry and the uncorrected stationary current.
  std::vector<char> interior(faces, 0);
  Vector delta = Vector::Zero(static_cast<Eigen::Index>(faces));
  Vector weight = Vector::Zero(static_cast<Eigen::Index>(faces));
  Vector gface = Vector::Zero(static_cast<Eigen::Index>(faces));
  {
    Vector x(n), gx(n);
    for (int k = 0; k < n; ++k) {
      const std::size_t s = grid.stride(k);
      for (std::size_t c = 0; c < N; ++c) {
        const auto idx = grid.unflatten(c);
        if (idx[static_cast<std::size_t>(k)] == grid.cells(k) - 1) continue;
        const std::size_t f = static_cast<std::size_t>(k) * N + c;
        const auto fi = static_cast<Eigen::Index>(f);
        interior[f] = 1;
        const double d = p[static_cast<Eigen::Index>(c + s)] - p[static_cast<Eigen::Index>(c)];
        delta[fi] = d;
        weight[fi] = std::exp(-p[static_cast<Eigen::Index>(c)]) * bernoulli(d);
        if (options.advection) {
          grid.center(c, view(x));
          x[k] += 0.5 * grid.h(k);
          model.g(view(x), view(gx));
          if (!gx.allFinite()) {
            throw NonFiniteValue("g is not finite on face " + std::to_string(f));
          }
          gface[fi] = gx[k];
        }
      }
    }
  }

  auto divergence = [&](const Vector& flux) {
    Vector div = Vector::Zero(static_cast<Eigen::Index>(N));
    for (std::size_t f = 0; f < faces; ++f) {
      if (!interior[f]) continue;
      const int k = static_cast<int>(f / N);
      const std::size_t c = f % N;
      const double q = flux[static_cast<Eigen::Index>(f)] / grid.h(k);
      div[static_cast<Eigen::Index>(c)] -= q;
      div[static_cast<Eigen::Index>(c + grid.stride(k))] += q;
    }
    return div;
  };

  const Vector raw_flux = gface.cwiseProduct(weight);
  const Vector raw_div = divergence(raw_flux);
  op.raw_div_ = raw_div.cwiseAbs().maxCoeff();

  Vector velocity = gface;
  if (options.advection && options.project_current && op.raw_div_ > 0.0) {
    // Solve div(w grad q) = div(m_raw) with q pinned at the potential
    // minimum, then v = g - grad q. `divergence` returns the net inflow and
    // A below is -div(w grad .), so both sides carry the same sign. Rows are
    // scaled by their diagonal.
    Eigen::Index ref = 0;
    p.minCoeff(&ref);
    Vector diag = Vector::Zero(static_cast<Eigen::Index>(N));
    Triplets t;
    t.reserve(4 * faces);
    for (std::size_t f = 0; f < faces; ++f) {
      if (!interior[f]) continue;
      const int k = static_cast<int>(f / N);
      const auto c = static_cast<Eigen::Index>(f % N);
      const auto nb = c + static_cast<Eigen::Index>(grid.stride(k));
      const double a = weight[static_cast<Eigen::Index>(f)] / (grid.h(k) * grid.h(k));
      diag[c] += a;
      diag[nb] += a;
      t.emplace_back(c, nb, -a);
      t.emplace_back(nb, c, -a);
    }
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(N); ++c) {
      t.emplace_back(c, c, diag[c]);
    }
    Triplets scaled;
    scaled.reserve(t.size() + 1);
    for (const auto& e : t) {
      if (e.row() == ref) continue;
      scaled.emplace_back(e.row(), e.col(), e.value() / diag[e.row()]);
    }
    scaled.emplace_back(ref, ref, 1.0);
    Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(N),
                                  static_cast<Eigen::Index>(N));
    A.setFromTriplets(scaled.begin(), scaled.end());
    Vector rhs = raw_div;
    for (Eigen::Index c = 0; c < rhs.size(); ++c) {
      rhs[c] = c == ref ? 0.0 : rhs[c] / diag[c];
    }
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) {
      throw SingularMatrix("stationary-current correction: factorization failed");
    }
    const Vector q = lu.solve(rhs);
    for (std::size_t f = 0; f < faces; ++f) {
      if (!interior[f]) continue;
      const int k = static_cast<int>(f / N);
      const auto c = static_cast<Eigen::Index>(f % N);
      const auto nb = c + static_cast<Eigen::Index>(grid.stride(k));
      const double grad = (q[nb] - q[c]) / grid.h(k);
      velocity[static_cast<Eigen::Index>(f)] -= grad;
      op.correction_ = std::max(op.correction_, std::abs(grad));
    }
  }
  op.velocity_ = velocity;

  Triplets jd, ja;
  jd.reserve(2 * faces);
  ja.reserve(2 * faces);
  double max_nu = 0.0;
  for (std::size_t f = 0; f < faces; ++f) {
    if (!interior[f]) continue;
    const int k = static_cast<int>(f / N);
    const std::size_t c = f % N;
    const std::size_t nb = c + grid.stride(k);
    const auto fi = static_cast<Eigen::Index>(f);
    const double h = grid.h(k);
    const double dkk = 0.5 * (D_at(c, k, k) + D_at(nb, k, k));
    const double v = velocity[fi];
    const double nu = options.limiter ? std::max(0.0, 0.5 * std::abs(v) * h - dkk) : 0.0;
    max_nu = std::max(max_nu, nu);
    const double bp = bernoulli(delta[fi]);
    const double bm = bernoulli(-delta[fi]);
    const double a = (dkk + nu) / h;
    if (a != 0.0) {
      jd.emplace_back(fi, static_cast<Eigen::Index>(c), a * bp);
      jd.emplace_back(fi, static_cast<Eigen::Index>(nb), -a * bm);
    }
    if (v != 0.0) {
      ja.emplace_back(fi, static_cast<Eigen::Index>(c), 0.5 * v * bp);
      ja.emplace_back(fi, static_cast<Eigen::Index>(nb), 0.5 * v * bm);
    }
  }

  if (has_cross) {
    // Mixed derivatives through the cell corners: the k-flux picks up
    // -D_kl exp(-phi) d_l Omega, with the corner gradient shared equally
    // by the two adjacent k-faces.
    for (int k = 0; k < n; ++k) {
      for (int l = k + 1; l < n; ++l) {
        const std::size_t sk = grid.stride(k), sl = grid.stride(l);
        const double hk = grid.h(k), hl = grid.h(l);
        for (std::size_t base = 0; base < N; ++base) {
          const auto idx = grid.unflatten(base);
          if (idx[static_cast<std::size_t>(k)] == grid.cells(k) - 1 ||
              idx[static_cast<std::size_t>(l)] == grid.cells(l) - 1) {
            continue;
          }
          const std::size_t cell[4] = {base, base + sk, base + sl, base + sk + sl};
          double dkl = 0.0;
          for (std::size_t q : cell) dkl += 0.25 * D_at(q, k, l);
          if (dkl == 0.0) continue;
          double rho[4];
          for (int i = 0; i < 4; ++i) {
            double s = 0.0;
            for (int j = 0; j < 4; ++j) {
              s += std::exp(p[static_cast<Eigen::Index>(cell[i])] -
                            p[static_cast<Eigen::Index>(cell[j])]);
            }
            rho[i] = 0.25 * s;
          }
          // cell order: 00, 10 (+k), 01 (+l), 11
          const double dl[4] = {-1.0, -1.0, 1.0, 1.0};
          const double dk[4] = {-1.0, 1.0, -1.0, 1.0};
          const std::size_t kfaces[2] = {static_cast<std::size_t>(k) * N + cell[0],
                                         static_cast<std::size_t>(k) * N + cell[2]};
          const std::size_t lfaces[2] = {static_cast<std::size_t>(l) * N + cell[0],
                                         static_cast<std::size_t>(l) * N + cell[1]};
          for (int i = 0; i < 4; ++i) {
            const double ck = -0.5 * dkl * rho[i] * dl[i] / (2.0 * hl);
            const double cl = -0.5 * dkl * rho[i] * dk[i] / (2.0 * hk);
            for (std::size_t fk : kfaces) {
              jd.emplace_back(static_cast<Eigen::Index>(fk),
                              static_cast<Eigen::Index>(cell[i]), ck);
            }
            for (std::size_t fl : lfaces) {
              jd.emplace_back(static_cast<Eigen::Index>(fl),
                              static_cast<Eigen::Index>(cell[i]), cl);
            }
          }
        }
      }
    }
  }

  const auto F = static_cast<Eigen::Index>(faces);
  const auto C = static_cast<Eigen::Index>(N);
  op.Jd_.resize(F, C);
  op.Jd_.setFromTriplets(jd.begin(), jd.end());
  op.Ja_.resize(F, C);
  op.Ja_.setFromTriplets(ja.begin(), ja.end());

  // (L u)_c = sum_k [J(c - e_k) - J(c)] / h_k
  Triplets lt;
  lt.reserve(2 * (jd.size() + ja.size()));
  for (const SparseMatrix* J : {&op.Jd_, &op.Ja_}) {
    for (Eigen::Index f = 0; f < J->outerSize(); ++f) {
      const int k = static_cast<int>(static_cast<std::size_t>(f) / N);
      const auto c = static_cast<Eigen::Index>(static_cast<std::size_t>(f) % N);
      const auto nb = c + static_cast<Eigen::Index>(grid.stride(k));
      const double inv_h = 1.0 / grid.h(k);
      for (SparseMatrix::InnerIterator it(*J, f); it; ++it) {
        lt.emplace_back(c, it.col(), -it.value() * inv_h);
        lt.emplace_back(nb, it.col(), it.value() * inv_h);
      }
    }
  }
  op.L_.resize(C, C);
  op.L_.setFromTriplets(lt.begin(), lt.end());
  op.L_.makeCompressed();

  double hmin = grid.h(0);
  for (int k = 1; k < n; ++k) hmin = std::min(hmin, grid.h(k));
  double bound = std::numeric_limits<double>::infinity();
  const double trace = max_trace + n * max_nu;
  if (trace > 0.0) bound = std::min(bound, 0.4 * hmin * hmin / (2.0 * trace));
  if (max_speed > 0.0) bound = std::min(bound, 0.4 * hmin / max_speed);
  double max_diag = 0.0;
  for (Eigen::Index c = 0; c < C; ++c) {
    max_diag = std::max(max_diag, std::abs(op.L_.coeff(c, c)));
  }
  if (max_diag > 0.0) bound = std::min(bound, 1.0 / max_diag);
  op.dt_bound_ = bound;
  return op;
}

bool FpeOperator::is_boundary_face(std::size_t face) const {
  const std::size_t N = grid_.size();
  const int k = static_cast<int>(face / N);
  const auto idx = grid_.unflatten(face % N);
  return idx[static_cast<std::size_t>(k)] == grid_.cells(k) - 1;
}

CurrentField FpeOperator::current(const Vector& u) const {
  CurrentField j;
  j.grid = grid_;
  j.flux = Jd_ * u + Ja_ * u;
  return j;
}

CurrentField FpeOperator::dissipative_current(const Vector& u) const {
  CurrentField j;
  j.grid = grid_;
  j.flux = Jd_ * u;
  return j;
}

SparseMatrix FpeOperator::backward_generator() const {
  SparseMatrix out = L_.transpose();
  out.makeCompressed();
  return out;
}

SparseMatrix FpeOperator::omega_generator() const {
  SparseMatrix out = L_;
  for (Eigen::Index r = 0; r < out.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(out, r); it; ++it) {
      it.valueRef() *= std::exp(phi_[r] - phi_[it.col()]);
    }
  }
  return out;
}

namespace {

double max_drift_speed(const Grid& grid, const VectorField& drift) {
  double speed = 0.0;
  Vector x(grid.dim()), b(grid.dim());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    grid.center(c, view(x));
    drift(view(x), view(b));
    speed = std::max(speed, b.norm());
  }
  return speed;
}

}  // namespace

FpeOperator build_operator(const Grid& grid, const FieldModel& model,
                           const OperatorOptions& options) {
  Vector phi = normalized_potential(grid, model.phi);
  double speed = 0.0;
  if (options.advection && options.diffusion) {
    speed = max_drift_speed(grid, model.drift());
  } else if (options.advection) {
    speed = max_drift_speed(grid, model.g);
  } else if (options.diffusion) {
    speed = max_drift_speed(grid, apply(model.D, model.phi));
  }
  return OperatorBuilder::build(grid, std::move(phi), model, options, speed);
}

Vector integrate_potential(const Grid& grid, const VectorField& grad_phi) {
  const int n = grid.dim();
  const std::size_t N = grid.size();
  Vector phi = Vector::Zero(static_cast<Eigen::Index>(N));
  Vector x0(n), x(n), gp(n);
  for (std::size_t c = 1; c < N; ++c) {
    const auto idx = grid.unflatten(c);
    int axis = n - 1;
    while (idx[static_cast<std::size_t>(axis)] == 0) --axis;
    const std::size_t parent = c - grid.stride(axis);
    grid.center(parent, view(x0));
    const double h = grid.h(axis);
    double acc = 0.0;
    for (int q = 0; q < 5; ++q) {
      x = x0;
      x[axis] += kGaussNodes[q] * h;
      grad_phi(view(x), view(gp));
      acc += kGaussWeights[q] * gp[axis];
    }
    if (!std::isfinite(acc)) {
      throw NonFiniteValue("potential gradient is not finite near cell " +
                           std::to_string(c));
    }
    phi[static_cast<Eigen::Index>(c)] = phi[static_cast<Eigen::Index>(parent)] + acc * h;
  }
  const double pmin = phi.minCoeff();
  const double sum = (-(phi.array() - pmin)).exp().sum();
  phi.array() += -pmin + std::log(sum * grid.cell_volume());
  return phi;
}

FpeOperator build_operator_ito(const Grid& grid, const FieldModel& model,
                               const VectorField& eta,
                               const OperatorOptions& options) {
  const int n = model.dim();
  if (model.singular_diffusion) {
    throw InvalidArgument("build_operator_ito: D must be nonsingular");
  }
  const MatrixField D = model.D;
  // grad phi = D^{-1} (div D - eta)
  VectorField grad_phi(n, [D, eta, n](ConstPoint x, PointOut out) {
    Matrix m;
    D(x, m);
    Vector rd(n), e(n);
    D.row_divergence(x, view(rd));
    eta(x, view(e));
    const Eigen::LDLT<Matrix> ldlt(m);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) {
      throw SingularMatrix("build_operator_ito: D is singular");
    }
    Eigen::Map<Vector>(out.data(), n) = ldlt.solve(rd - e);
  });
  Vector phi = integrate_potential(grid, grad_phi);
  // Ito drift minus the noise-induced part: g + eta - div D = g - D grad phi.
  VectorField drift(n, [model, eta, D, n](ConstPoint x, PointOut out) {
    Vector gx(n), e(n), rd(n);
    model.g(x, view(gx));
    eta(x, view(e));
    D.row_divergence(x, view(rd));
    Eigen::Map<Vector>(out.data(), n) = gx + e - rd;
  });
  const double speed = max_drift_speed(grid, drift);
  return OperatorBuilder::build(grid, std::move(phi), model, options, speed);
}

StationaryResidual stationary_residual(const Grid& grid, const FieldModel& model,
                                       OperatorOptions options) {
  options.project_current = false;
  const FpeOperator op = build_operator(grid, model, options);
  const Vector ueq = (-op.potential().array()).exp();
  StationaryResidual r;
  r.res_sup = op.apply(ueq).cwiseAbs().maxCoeff();
  r.res_full = r.res_sup * grid.cell_volume();
  r.res_conservative = op.raw_conservative_residual();
  return r;
}

// ---------------------------------------------------------------- stepping

struct Propagator::Factor {
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
};

Propagator::Propagator(SparseMatrix A, double dt, double bound,
                       StepMethod method)
    : A_(std::move(A)), dt_(dt), method_(method) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidArgument("time step must be positive and finite");
  }
  if (method_ == StepMethod::heun) {
    if (dt > bound) {
      std::ostringstream os;
      os.precision(6);
      os << "time step " << dt << " exceeds the explicit stability bound "
         << bound;
      throw StabilityViolation(os.str(), bound);
    }
    return;
  }
  factor_ = std::make_unique<Factor>();
  Eigen::SparseMatrix<double> I(A_.rows(), A_.cols());
  I.setIdentity();
  Eigen::SparseMatrix<double> M = I - dt * Eigen::SparseMatrix<double>(A_);
  factor_->lu.compute(M);
  if (factor_->lu.info() != Eigen::Success) {
    throw SingularMatrix("implicit step: factorization of I - dt A failed");
  }
}

Propagator::~Propagator() = default;
Propagator::Propagator(Propagator&&) noexcept = default;
Propagator& Propagator::operator=(Propagator&&) noexcept = default;

Vector Propagator::step(const Vector& v) const {
  if (method_ == StepMethod::implicit_euler) return factor_->lu.solve(v);
  const Vector k1 = A_ * v;
  const Vector v1 = v + dt_ * k1;
  const Vector k2 = A_ * v1;
  return v + 0.5 * dt_ * (k1 + k2);
}

Propagator forward_propagator(const FpeOperator& op, double dt,
                              StepMethod method) {
  return Propagator(op.generator(), dt, op.stability_bound(), method);
}

Propagator backward_propagator(const FpeOperator& op, double dt,
                               StepMethod method) {
  return Propagator(op.backward_generator(), dt, op.stability_bound(), method);
}

Propagator omega_propagator(const FpeOperator& op, double dt,
                            StepMethod method) {
  return Propagator(op.omega_generator(), dt, op.stability_bound(), method);
}

DensityField step_forward(const FpeOperator& op, const DensityField& u,
                          double dt) {
  if (!(u.grid == op.grid())) {
    throw InvalidArgument("step_forward: density lives on a different grid");
  }
  DensityField out;
  out.grid = u.grid;
  out.values = forward_propagator(op, dt).step(u.values);
  out.t = u.t + dt;
  return out;
}

Vector evolve_backward(const FpeOperator& op, const Vector& v, double dt) {
  return backward_propagator(op, dt).step(v);
}

Vector evolve_omega(const FpeOperator& op, const Vector& omega, double dt) {
  return omega_propagator(op, dt).step(omega);
}

}  // namespace orthoflux
