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

#include "orthoflux/fields.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "orthoflux/calculus.hpp"
#include "orthoflux/errors.hpp"

namespace orthoflux {

double fd_step(double xi) noexcept {
  return std::max(1e-5, 1e-5 * std::abs(xi));
}

Box::Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw InvalidArgument("Box: bounds dimension mismatch");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(upper[i] > lower[i])) {
      throw InvalidArgument("Box: upper bound must exceed lower bound on axis " +
                            std::to_string(i));
    }
  }
}

Box Box::cube(int dim, double half_width) {
  return Box(Vector::Constant(dim, -half_width),
             Vector::Constant(dim, half_width));
}

bool Box::contains(ConstPoint x) const noexcept {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lower[static_cast<Eigen::Index>(i)] ||
        x[i] > upper[static_cast<Eigen::Index>(i)]) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------- scalar

ScalarField::ScalarField(int dim, Value value, Gradient gradient,
                         Hessian hessian)
    : dim_(dim),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      hessian_(std::move(hessian)) {
  if (dim_ <= 0 || !value_) {
    throw InvalidArgument("ScalarField: needs positive dimension and a value");
  }
}

ScalarField ScalarField::constant(int dim, double c) {
  return ScalarField(
      dim, [c](ConstPoint) { return c; },
      [](ConstPoint, PointOut out) { std::fill(out.begin(), out.end(), 0.0); },
      [dim](ConstPoint, Matrix& H) { H.setZero(dim, dim); });
}

ScalarField ScalarField::quadratic(const Matrix& Q) {
  const Matrix Qs = 0.5 * (Q + Q.transpose());
  const int n = static_cast<int>(Qs.rows());
  return ScalarField(
      n,
      [Qs](ConstPoint x) {
        Eigen::Map<const Vector> v(x.data(), static_cast<Eigen::Index>(x.size()));
        return 0.5 * v.dot(Qs * v);
      },
      [Qs](ConstPoint x, PointOut out) {
        Eigen::Map<const Vector> v(x.data(), static_cast<Eigen::Index>(x.size()));
        Eigen::Map<Vector> o(out.data(), static_cast<Eigen::Index>(out.size()));
        o.noalias() = Qs * v;
      },
      [Qs](ConstPoint, Matrix& H) { H = Qs; });
}

void ScalarField::fd_gradient(ConstPoint x, PointOut out) const {
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = fd_step(x[i]);
    probe[i] = x[i] + h;
    const double fp = value_(probe);
    probe[i] = x[i] - h;
    const double fm = value_(probe);
    probe[i] = x[i];
    out[i] = (fp - fm) / (2.0 * h);
  }
}

void ScalarField::gradient(ConstPoint x, PointOut out) const {
  if (gradient_) {
    gradient_(x, out);
  } else {
    fd_gradient(x, out);
  }
}

Vector ScalarField::gradient(const Vector& x) const {
  Vector out(x.size());
  gradient(view(x), view(out));
  return out;
}

void ScalarField::hessian(ConstPoint x, Matrix& out) const {
  if (hessian_) {
    hessian_(x, out);
    return;
  }
  const auto n = static_cast<Eigen::Index>(x.size());
  out.resize(n, n);
  std::vector<double> probe(x.begin(), x.end());
  Vector gp(n), gm(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = fd_step(x[j]);
    probe[j] = x[j] + h;
    gradient(probe, view(gp));
    probe[j] = x[j] - h;
    gradient(probe, view(gm));
    probe[j] = x[j];
    out.col(j) = (gp - gm) / (2.0 * h);
  }
  out = 0.5 * (out + out.transpose()).eval();
}

Matrix ScalarField::hessian(const Vector& x) const {
  Matrix H;
  hessian(view(x), H);
  return H;
}

ScalarField ScalarField::shifted(double c) const {
  ScalarField out = *this;
  auto v = value_;
  out.value_ = [v, c](ConstPoint x) { return v(x) + c; };
  return out;
}

// ---------------------------------------------------------------- vector

VectorField::VectorField(int dim, Value value, Divergence divergence)
    : dim_(dim), value_(std::move(value)), divergence_(std::move(divergence)) {
  if (dim_ <= 0 || !value_) {
    throw InvalidArgument("VectorField: needs positive dimension and a value");
  }
}

VectorField VectorField::zero(int dim) {
  return VectorField(
      dim,
      [](ConstPoint, PointOut out) { std::fill(out.begin(), out.end(), 0.0); },
      [](ConstPoint) { return 0.0; });
}

VectorField VectorField::linear(const Matrix& M) {
  const double tr = M.trace();
  return VectorField(
      static_cast<int>(M.rows()),
      [M](ConstPoint x, PointOut out) {
        Eigen::Map<const Vector> v(x.data(), static_cast<Eigen::Index>(x.size()));
        Eigen::Map<Vector> o(out.data(), static_cast<Eigen::Index>(out.size()));
        o.noalias() = M * v;
      },
      [tr](ConstPoint) { return tr; });
}

Vector VectorField::operator()(const Vector& x) const {
  Vector out(x.size());
  value_(view(x), view(out));
  return out;
}

double VectorField::fd_divergence(ConstPoint x) const {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> fp(x.size()), fm(x.size());
  double div = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = fd_step(x[i]);
    probe[i] = x[i] + h;
    value_(probe, fp);
    probe[i] = x[i] - h;
    value_(probe, fm);
    probe[i] = x[i];
    div += (fp[i] - fm[i]) / (2.0 * h);
  }
  return div;
}

double VectorField::divergence(ConstPoint x) const {
  return divergence_ ? divergence_(x) : fd_divergence(x);
}

VectorField VectorField::negated() const { return scaled(-1.0); }

VectorField VectorField::scaled(double s) const {
  auto v = value_;
  Divergence div;
  if (divergence_) {
    auto d = divergence_;
    div = [d, s](ConstPoint x) { return s * d(x); };
  }
  return VectorField(
      dim_,
      [v, s](ConstPoint x, PointOut out) {
        v(x, out);
        for (double& o : out) o *= s;
      },
      std::move(div));
}

namespace {

VectorField combine(const VectorField& a, const VectorField& b, double sign) {
  if (a.dim() != b.dim()) {
    throw InvalidArgument("VectorField: dimension mismatch in sum");
  }
  VectorField::Divergence div;
  if (a.has_analytic_divergence() && b.has_analytic_divergence()) {
    div = [a, b, sign](ConstPoint x) {
      return a.divergence(x) + sign * b.divergence(x);
    };
  }
  const int n = a.dim();
  return VectorField(
      n,
      [a, b, sign, n](ConstPoint x, PointOut out) {
        a(x, out);
        double tmp[16];
        std::vector<double> heap;
        double* buf = tmp;
        if (n > 16) {
          heap.resize(static_cast<std::size_t>(n));
          buf = heap.data();
        }
        b(x, PointOut(buf, static_cast<std::size_t>(n)));
        for (int i = 0; i < n; ++i) out[i] += sign * buf[i];
      },
      std::move(div));
}

}  // namespace

VectorField operator+(const VectorField& a, const VectorField& b) {
  return combine(a, b, 1.0);
}

VectorField operator-(const VectorField& a, const VectorField& b) {
  return combine(a, b, -1.0);
}

// ---------------------------------------------------------------- matrix

MatrixField::MatrixField(int dim, Value value, RowDivergence row_divergence)
    : dim_(dim),
      value_(std::move(value)),
      row_divergence_(std::move(row_divergence)) {
  if (dim_ <= 0 || !value_) {
    throw InvalidArgument("MatrixField: needs positive dimension and a value");
  }
}

MatrixField MatrixField::constant(Matrix M) {
  if (M.rows() != M.cols() || M.rows() == 0) {
    throw InvalidArgument("MatrixField: constant value must be square");
  }
  MatrixField f;
  f.dim_ = static_cast<int>(M.rows());
  f.constant_ = true;
  f.value_constant_ = std::move(M);
  return f;
}

void MatrixField::operator()(ConstPoint x, Matrix& out) const {
  if (constant_) {
    out = value_constant_;
  } else {
    value_(x, out);
  }
}

Matrix MatrixField::operator()(const Vector& x) const {
  Matrix out;
  (*this)(view(x), out);
  return out;
}

void MatrixField::row_divergence(ConstPoint x, PointOut out) const {
  std::fill(out.begin(), out.end(), 0.0);
  if (constant_) return;
  if (row_divergence_) {
    row_divergence_(x, out);
    return;
  }
  std::vector<double> probe(x.begin(), x.end());
  Matrix mp, mm;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double h = fd_step(x[j]);
    probe[j] = x[j] + h;
    value_(probe, mp);
    probe[j] = x[j] - h;
    value_(probe, mm);
    probe[j] = x[j];
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      out[i] += (mp(ii, jj) - mm(ii, jj)) / (2.0 * h);
    }
  }
}

Vector MatrixField::row_divergence(const Vector& x) const {
  Vector out(x.size());
  row_divergence(view(x), view(out));
  return out;
}

VectorField apply(const MatrixField& M, const ScalarField& phi) {
  if (M.dim() != phi.dim()) {
    throw InvalidArgument("apply: matrix and scalar field dimensions differ");
  }
  const int n = phi.dim();
  auto value = [M, phi, n](ConstPoint x, PointOut out) {
    Vector grad(n);
    phi.gradient(x, view(grad));
    Eigen::Map<Vector> o(out.data(), n);
    if (M.is_constant()) {
      o.noalias() = M.constant_value() * grad;
    } else {
      Matrix m;
      M(x, m);
      o.noalias() = m * grad;
    }
  };
  auto divergence = [M, phi, n](ConstPoint x) {
    Matrix H;
    phi.hessian(x, H);
    Matrix m;
    M(x, m);
    double div = (m.array() * H.transpose().array()).sum();
    if (!M.is_constant()) {
      Vector rd(n), grad(n);
      M.row_divergence(x, view(rd));
      phi.gradient(x, view(grad));
      // d_i (M_ij d_j phi) = (d_i M_ij) d_j phi + M_ij d_i d_j phi; the
      // first term uses column sums of dM, equal to row sums for symmetric M.
      div += rd.dot(grad);
    }
    return div;
  };
  return VectorField(n, std::move(value), std::move(divergence));
}

DiffusionCheck check_diffusion(const MatrixField& D,
                               std::span<const Vector> probes) {
  DiffusionCheck report;
  report.min_eigenvalue = std::numeric_limits<double>::infinity();
  Matrix m;
  for (const Vector& x : probes) {
    D(view(x), m);
    report.max_asymmetry =
        std::max(report.max_asymmetry, (m - m.transpose()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()),
                                             Eigen::EigenvaluesOnly);
    report.min_eigenvalue = std::min(report.min_eigenvalue, es.eigenvalues().minCoeff());
  }
  return report;
}

// ---------------------------------------------------------------- model

VectorField FieldModel::drift() const { return g - apply(D, phi); }

VectorField FieldModel::ito_drift() const { return g + eta_from_phi(D, phi); }

FieldModel FieldModel::reversed() const {
  FieldModel out = *this;
  out.g = g.negated();
  return out;
}

double box_log_normalizer(const ScalarField& phi, const Box& box,
                          int cells_per_axis) {
  const int n = box.dim();
  if (n > 3) {
    throw InvalidArgument("box_log_normalizer: quadrature supports dim <= 3");
  }
  const Vector h = box.width() / cells_per_axis;
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(cells_per_axis);
  std::vector<double> values(total);
  std::vector<double> x(static_cast<std::size_t>(n));
  double vmin = std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (int i = n - 1; i >= 0; --i) {
      const auto k = rem % static_cast<std::size_t>(cells_per_axis);
      rem /= static_cast<std::size_t>(cells_per_axis);
      x[static_cast<std::size_t>(i)] = box.lower[i] + (static_cast<double>(k) + 0.5) * h[i];
    }
    values[idx] = phi(x);
    vmin = std::min(vmin, values[idx]);
  }
  double sum = 0.0;
  for (double v : values) sum += std::exp(-(v - vmin));
  return -vmin + std::log(sum * h.prod());
}

}  // namespace orthoflux
