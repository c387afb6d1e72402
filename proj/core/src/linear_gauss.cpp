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

#include "orthoflux/linear_gauss.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

#include "orthoflux/errors.hpp"

namespace orthoflux {

void require_hurwitz(const Matrix& B, double tol) {
  if (B.rows() != B.cols() || B.rows() == 0) {
    throw InvalidArgument("B must be a nonempty square matrix");
  }
  Eigen::EigenSolver<Matrix> es(B, false);
  const double re = es.eigenvalues().real().maxCoeff();
  if (!(re < -tol)) {
    throw NotHurwitz("B is not Hurwitz: max Re(eig) = " + std::to_string(re));
  }
}

Matrix solve_lyapunov(const Matrix& B, const Matrix& D) {
  require_hurwitz(B);
  const Eigen::Index n = B.rows();
  if (D.rows() != n || D.cols() != n) {
    throw InvalidArgument("solve_lyapunov: D must match B");
  }
  // Column-major vec: vec(B S) = (I kron B) vec S, vec(S B^T) = (B kron I) vec S.
  const Matrix I = Matrix::Identity(n, n);
  Matrix K = Matrix::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) += I(i, j) * B;
      K.block(i * n, j * n, n, n) += B(i, j) * I;
    }
  }
  const Vector rhs = -2.0 * D.reshaped();
  const auto lu = K.partialPivLu();
  Matrix Sigma = lu.solve(rhs).reshaped(n, n);
  Sigma = 0.5 * (Sigma + Sigma.transpose()).eval();
  // Two refinement passes; the antisymmetry of Q Grot inherits this residual
  // amplified by |Q|^2.
  for (int pass = 0; pass < 2; ++pass) {
    const Matrix R = B * Sigma + Sigma * B.transpose() + 2.0 * D;
    Matrix dS = lu.solve(-R.reshaped()).reshaped(n, n);
    Sigma += 0.5 * (dS + dS.transpose());
  }
  return Sigma;
}

LinearModel LinearModel::make(Matrix B, Matrix D) {
  LinearModel m;
  m.B = std::move(B);
  m.D = 0.5 * (D + D.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.D, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw InvalidArgument("LinearModel: D must be positive definite");
  }
  m.Sigma = solve_lyapunov(m.B, m.D);
  const Matrix I = Matrix::Identity(m.B.rows(), m.B.cols());
  const auto ldlt = m.Sigma.ldlt();
  m.Q = ldlt.solve(I);
  m.Q += ldlt.solve(I - m.Sigma * m.Q);
  m.Q = 0.5 * (m.Q + m.Q.transpose()).eval();
  m.Grot = m.B + m.D * m.Q;
  return m;
}

double LinearModel::lyapunov_residual() const {
  return (B * Sigma + Sigma * B.transpose() + 2.0 * D).cwiseAbs().maxCoeff();
}

double LinearModel::antisymmetry_residual() const {
  const Matrix P = Q * Grot;
  return (0.5 * (P + P.transpose())).cwiseAbs().maxCoeff();
}

FieldModel linear_equilibrium_fields(const LinearModel& m, double box_sigmas) {
  const int n = m.dim();
  FieldModel out;
  out.name = "linear";
  out.phi = ScalarField::quadratic(m.Q);
  out.g = VectorField::linear(m.Grot);
  out.D = MatrixField::constant(m.D);
  const Vector sd = m.Sigma.diagonal().cwiseSqrt();
  out.box = Box(-box_sigmas * sd, box_sigmas * sd);
  out.log_z = 0.5 * (n * std::log(2.0 * std::numbers::pi) +
                     std::log(m.Sigma.determinant()));
  out.equilibrium = true;
  return out;
}

double gaussian_entropy(const Matrix& S) {
  const double n = static_cast<double>(S.rows());
  return 0.5 * (n * std::log(2.0 * std::numbers::pi * std::numbers::e) +
                std::log(S.determinant()));
}

double gaussian_relative_entropy(const Vector& mu, const Matrix& S,
                                 const Matrix& Sigma) {
  const Eigen::LLT<Matrix> chol(Sigma);
  const double n = static_cast<double>(S.rows());
  const double trace = chol.solve(S).trace();
  const double quad = mu.dot(chol.solve(mu));
  const double logdet = std::log(Sigma.determinant() / S.determinant());
  return 0.5 * (trace + quad - n + logdet);
}

GaussianState gaussian_flow_oracle(const LinearModel& m, const Vector& mu0,
                                   const Matrix& Sigma0, double t) {
  if (t < 0.0) throw InvalidArgument("gaussian_flow_oracle: t must be >= 0");
  Eigen::LLT<Matrix> chol(Sigma0);
  if (chol.info() != Eigen::Success) {
    throw InvalidArgument("gaussian_flow_oracle: Sigma0 is not SPD");
  }
  const Matrix E = (m.B * t).exp();
  GaussianState s;
  s.mu = E * mu0;
  s.Sigma = E * (Sigma0 - m.Sigma) * E.transpose() + m.Sigma;
  s.Sigma = 0.5 * (s.Sigma + s.Sigma.transpose()).eval();
  s.F = gaussian_relative_entropy(s.mu, s.Sigma, m.Sigma);
  s.S = gaussian_entropy(s.Sigma);
  s.U = s.F + s.S;
  return s;
}

LinearModel random_linear_model(int n, CounterStream& rng, double margin) {
  Matrix R(n, n), C(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      R(i, j) = rng.normal();
      C(i, j) = rng.normal();
    }
  }
  Eigen::EigenSolver<Matrix> es(R, false);
  const double shift = es.eigenvalues().real().maxCoeff() + margin;
  Matrix B = R - shift * Matrix::Identity(n, n);
  Matrix D = C * C.transpose() / n + 0.1 * Matrix::Identity(n, n);
  return LinearModel::make(std::move(B), std::move(D));
}

}  // namespace orthoflux
