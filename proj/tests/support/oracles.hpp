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

#pragma once

// Independent reference computations. Nothing here calls the library code
// it is used to check; values derived from these are frozen in the tests.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Stationary covariance of dx = B x dt + sqrt(2D) dW by integrating
// dS/dt = B S + S B^T + 2 D with classical RK4 until it settles.
inline Mat lyapunov_rk4(const Mat& B, const Mat& D, double dt = 1e-3, double T = 60.0) {
  Mat S = Mat::Zero(B.rows(), B.cols());
  auto f = [&](const Mat& X) -> Mat { return B * X + X * B.transpose() + 2.0 * D; };
  const int steps = static_cast<int>(T / dt);
  for (int i = 0; i < steps; ++i) {
    const Mat k1 = f(S);
    const Mat k2 = f(S + 0.5 * dt * k1);
    const Mat k3 = f(S + 0.5 * dt * k2);
    const Mat k4 = f(S + dt * k3);
    S += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return S;
}

struct Moments {
  Vec mu;
  Mat S;
};

// Mean and covariance of the linear SDE at time t by RK4 on the moment ODEs.
inline Moments linear_moments_rk4(const Mat& B, const Mat& D, Vec mu, Mat S, double t,
                                  double dt = 1e-4) {
  const int steps = static_cast<int>(std::lround(t / dt));
  auto fs = [&](const Mat& X) -> Mat { return B * X + X * B.transpose() + 2.0 * D; };
  for (int i = 0; i < steps; ++i) {
    const Vec a1 = B * mu, a2 = B * (mu + 0.5 * dt * a1), a3 = B * (mu + 0.5 * dt * a2),
              a4 = B * (mu + dt * a3);
    mu += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    const Mat k1 = fs(S), k2 = fs(S + 0.5 * dt * k1), k3 = fs(S + 0.5 * dt * k2),
              k4 = fs(S + dt * k3);
    S += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return {mu, S};
}

// KL(N(mu, S) || N(0, Sigma)) by midpoint quadrature of p ln(p / q) on a
// square of half-width L in 2D.
inline double kl_quadrature_2d(const Vec& mu, const Mat& S, const Mat& Sigma, double L = 9.0,
                               int n = 600) {
  const double h = 2.0 * L / n;
  const Mat Si = S.inverse(), Qi = Sigma.inverse();
  const double ns = 1.0 / (2.0 * M_PI * std::sqrt(S.determinant()));
  const double nq = 1.0 / (2.0 * M_PI * std::sqrt(Sigma.determinant()));
  double acc = 0.0;
  Vec x(2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      x << -L + (i + 0.5) * h, -L + (j + 0.5) * h;
      const Vec d = x - mu;
      const double lp = std::log(ns) - 0.5 * d.dot(Si * d);
      const double lq = std::log(nq) - 0.5 * x.dot(Qi * x);
      acc += std::exp(lp) * (lp - lq);
    }
  }
  return acc * h * h;
}

// z / (e^z - 1) by its Taylor series (valid for |z| < 0.5).
inline double bernoulli_series(double z) {
  return 1.0 - z / 2.0 + z * z / 12.0 - std::pow(z, 4) / 720.0 + std::pow(z, 6) / 30240.0;
}

// Dense 1D Scharfetter-Gummel generator for du/dt = d/dx[D (u' + u phi')]
// on n cells of width h with zero-flux ends; phi given at the centres.
inline Mat sg_generator_1d(const std::vector<double>& phi, double D, double h) {
  const int n = static_cast<int>(phi.size());
  auto B = [](double z) { return std::abs(z) < 1e-8 ? 1.0 - z / 2.0 : z / std::expm1(z); };
  Mat L = Mat::Zero(n, n);
  for (int c = 0; c + 1 < n; ++c) {
    const double d = phi[c + 1] - phi[c];
    // Flux from c to c+1: J = -D/h [B(-d) u_{c+1} - B(d) u_c].
    const double a = D / h * B(d), b = D / h * B(-d);
    L(c, c) -= a / h;
    L(c, c + 1) += b / h;
    L(c + 1, c) += a / h;
    L(c + 1, c + 1) -= b / h;
  }
  return L;
}

// Total variation between two probability tables.
inline double tv(const Mat& P, const Mat& Q) { return 0.5 * (P - Q).cwiseAbs().sum(); }

}  // namespace oracle
