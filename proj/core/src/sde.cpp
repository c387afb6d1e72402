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

#include "orthoflux/sde.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>

#include "orthoflux/errors.hpp"
#include "orthoflux/parallel.hpp"

namespace orthoflux {

namespace {

std::size_t sample_cdf(const std::vector<double>& cdf, double u) {
  const double target = u * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()),
                               cdf.size() - 1);
}

void uniform_in_cell(const Grid& grid, std::size_t cell, CounterStream& rng,
                     PointOut out) {
  grid.center(cell, out);
  for (int i = 0; i < grid.dim(); ++i) {
    out[static_cast<std::size_t>(i)] += (rng.uniform() - 0.5) * grid.h(i);
  }
}

// Symmetric square root of 2 D, negative eigenvalues clipped to zero.
void noise_root(const Matrix& D, Matrix& out) {
  if (D.rows() == 2) {
    // sqrt(M) = (M + sqrt(det M) I) / sqrt(tr M + 2 sqrt(det M)) for PSD 2x2 M.
    const double a = 2.0 * D(0, 0), d = 2.0 * D(1, 1), b = D(0, 1) + D(1, 0);
    const double det = a * d - b * b;
    if (a >= 0.0 && d >= 0.0 && det >= 0.0) {
      const double s = std::sqrt(det), t = std::sqrt(a + d + 2.0 * s);
      out.resize(2, 2);
      if (t == 0.0) {
        out.setZero();
      } else {
        out << (a + s) / t, b / t, b / t, (d + s) / t;
      }
      return;
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (D + D.transpose()));
  const Vector lam = (2.0 * es.eigenvalues()).cwiseMax(0.0).cwiseSqrt();
  out = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

Matrix noise_root(const Matrix& D) {
  Matrix out;
  noise_root(D, out);
  return out;
}

}  // namespace

// ---------------------------------------------------------------- samplers

StationarySampler::StationarySampler(const Grid& grid, ScalarField phi)
    : grid_(grid), phi_(std::move(phi)) {
  const int n = grid_.dim();
  const std::size_t N = grid_.size();
  phi_c_ = cell_values(grid_, phi_);
  envelope_.resize(static_cast<Eigen::Index>(N));
  const double pmin = phi_c_.minCoeff();
  cdf_.resize(N);
  double acc = 0.0;
  Vector x(n), corner(n);
  for (std::size_t c = 0; c < N; ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    grid_.center(c, view(x));
    double m = 1.0;
    for (int mask = 0; mask < (1 << n); ++mask) {
      for (int i = 0; i < n; ++i) {
        corner[i] = x[i] + (((mask >> i) & 1) ? 0.5 : -0.5) * grid_.h(i);
      }
      m = std::max(m, std::exp(-(phi_(corner) - phi_c_[ci])));
    }
    envelope_[ci] = 1.25 * m;
    acc += std::exp(-(phi_c_[ci] - pmin)) * envelope_[ci];
    cdf_[c] = acc;
  }
}

void StationarySampler::sample(CounterStream& rng, PointOut out,
                               std::size_t& violations) const {
  for (;;) {
    const std::size_t c = sample_cdf(cdf_, rng.uniform());
    uniform_in_cell(grid_, c, rng, out);
    const auto ci = static_cast<Eigen::Index>(c);
    const double ratio = std::exp(-(phi_(out) - phi_c_[ci])) / envelope_[ci];
    if (ratio > 1.0) ++violations;
    if (rng.uniform() < ratio) return;
  }
}

DensitySampler::DensitySampler(const DensityField& u) : grid_(u.grid) {
  cdf_.resize(grid_.size());
  double acc = 0.0;
  for (std::size_t c = 0; c < grid_.size(); ++c) {
    acc += std::max(0.0, u.values[static_cast<Eigen::Index>(c)]);
    cdf_[c] = acc;
  }
  if (!(acc > 0.0)) throw DensityError("DensitySampler: density has no mass");
}

void DensitySampler::sample(CounterStream& rng, PointOut out) const {
  uniform_in_cell(grid_, sample_cdf(cdf_, rng.uniform()), rng, out);
}

// ---------------------------------------------------------------- config

InitialCondition InitialCondition::at(Vector x) {
  InitialCondition ic;
  ic.kind = InitialKind::point;
  ic.point = std::move(x);
  return ic;
}

InitialCondition InitialCondition::gaussian(Vector mu, Matrix cov) {
  InitialCondition ic;
  ic.kind = InitialKind::gaussian;
  ic.mean = std::move(mu);
  ic.cov = std::move(cov);
  return ic;
}

InitialCondition InitialCondition::stationary(Grid grid) {
  InitialCondition ic;
  ic.kind = InitialKind::stationary;
  ic.grid = std::move(grid);
  return ic;
}

InitialCondition InitialCondition::from_density(DensityField u) {
  InitialCondition ic;
  ic.kind = InitialKind::density;
  ic.density = std::make_shared<const DensityField>(std::move(u));
  return ic;
}

std::size_t SimConfig::n_steps() const {
  return static_cast<std::size_t>(std::llround(T / dt));
}

std::size_t reflect(const Box& box, PointOut x) {
  std::size_t bounces = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double lo = box.lower[ii], hi = box.upper[ii];
    double v = x[i];
    for (int guard = 0; (v < lo || v > hi) && guard < 16; ++guard) {
      v = v < lo ? 2.0 * lo - v : 2.0 * hi - v;
      ++bounces;
    }
    if (v < lo || v > hi) {
      // Far outside: fold by the period of the reflected motion.
      const double w = hi - lo;
      double r = std::fmod(v - lo, 2.0 * w);
      if (r < 0.0) r += 2.0 * w;
      v = r <= w ? lo + r : hi - (r - w);
    }
    x[i] = v;
  }
  return bounces;
}

FieldModel reverse_model(const FieldModel& model) { return model.reversed(); }

// ---------------------------------------------------------------- simulate

Ensemble simulate(const FieldModel& model, const SimConfig& cfg) {
  if (!(cfg.dt > 0.0) || !(cfg.T >= cfg.dt) || cfg.n_paths < 1) {
    throw InvalidArgument("SimConfig: need dt > 0, T >= dt and n_paths >= 1");
  }
  const int n = model.dim();
  const std::size_t n_steps = cfg.n_steps();

  Ensemble ens;
  ens.model_name = model.name;
  ens.dim = n;
  ens.n_paths = cfg.n_paths;
  ens.dt = cfg.dt;
  if (!cfg.record_steps.empty()) {
    std::set<std::size_t> s(cfg.record_steps.begin(), cfg.record_steps.end());
    if (*s.rbegin() > n_steps) {
      throw InvalidArgument("SimConfig: record step beyond the horizon");
    }
    ens.steps.assign(s.begin(), s.end());
  } else {
    if (cfg.record_every == 0) throw InvalidArgument("SimConfig: record_every must be positive");
    for (std::size_t s = 0; s <= n_steps; s += cfg.record_every) ens.steps.push_back(s);
  }
  for (std::size_t s : ens.steps) ens.times.push_back(static_cast<double>(s) * cfg.dt);
  const std::size_t R = ens.records();
  ens.data.assign(cfg.n_paths * R * static_cast<std::size_t>(n), 0.0);

  const VectorField drift = model.ito_drift();
  const bool constant_D = model.D.is_constant();
  const Matrix root = constant_D ? noise_root(model.D.constant_value()) : Matrix();
  const double sqdt = std::sqrt(cfg.dt);

  std::optional<StationarySampler> stationary;
  std::optional<DensitySampler> from_density;
  Matrix chol;
  switch (cfg.initial.kind) {
    case InitialKind::point:
      if (cfg.initial.point.size() != n) throw InvalidArgument("initial point has wrong dimension");
      break;
    case InitialKind::gaussian: {
      const Eigen::LLT<Matrix> llt(cfg.initial.cov);
      if (llt.info() != Eigen::Success || cfg.initial.mean.size() != n) {
        throw InvalidArgument("initial Gaussian needs a matching SPD covariance");
      }
      chol = llt.matrixL();
      break;
    }
    case InitialKind::stationary:
      if (!cfg.initial.grid) throw InvalidArgument("stationary start needs a grid");
      stationary.emplace(*cfg.initial.grid, model.phi);
      break;
    case InitialKind::density:
      if (!cfg.initial.density) throw InvalidArgument("density start needs a density");
      from_density.emplace(*cfg.initial.density);
      break;
  }

  std::vector<std::size_t> bounces(cfg.n_paths, 0), violations(cfg.n_paths, 0);
  parallel_for(
      cfg.n_paths,
      [&](std::size_t begin, std::size_t end) {
        Vector x(n), b(n), z(n), dx(n);
        Matrix Dx, rx;
        for (std::size_t p = begin; p < end; ++p) {
          const std::uint64_t stream = cfg.stream_offset + p;
          CounterStream init(cfg.seed, stream, StreamDomain::initial_condition);
          switch (cfg.initial.kind) {
            case InitialKind::point:
              x = cfg.initial.point;
              break;
            case InitialKind::gaussian:
              for (int i = 0; i < n; ++i) z[i] = init.normal();
              x = cfg.initial.mean + chol * z;
              break;
            case InitialKind::stationary:
              stationary->sample(init, view(x), violations[p]);
              break;
            case InitialKind::density:
              from_density->sample(init, view(x));
              break;
          }
          bounces[p] += reflect(model.box, view(x));

          CounterStream rng(cfg.seed, stream, StreamDomain::dynamics);
          std::size_t next = 0;
          auto store = [&](std::size_t step) {
            while (next < R && ens.steps[next] == step) {
              double* dst = ens.data.data() + (p * R + next) * static_cast<std::size_t>(n);
              std::copy(x.data(), x.data() + n, dst);
              ++next;
            }
          };
          store(0);
          for (std::size_t s = 1; s <= n_steps; ++s) {
            drift(view(x), view(b));
            for (int i = 0; i < n; ++i) z[i] = rng.normal();
            if (constant_D) {
              dx.noalias() = root * z;
            } else {
              model.D(view(x), Dx);
              noise_root(Dx, rx);
              dx.noalias() = rx * z;
            }
            x += b * cfg.dt + dx * sqdt;
            if (!x.allFinite()) {
              throw NonFiniteValue("state is not finite on path " + std::to_string(p) +
                                   " at step " + std::to_string(s));
            }
            bounces[p] += reflect(model.box, view(x));
            store(s);
          }
        }
      },
      cfg.threads);

  for (std::size_t p = 0; p < cfg.n_paths; ++p) {
    ens.reflections += bounces[p];
    ens.envelope_violations += violations[p];
  }
  return ens;
}

Moments ensemble_moments(const Ensemble& ens, std::size_t record) {
  const int n = ens.dim;
  Moments m;
  m.mean = Vector::Zero(n);
  m.cov = Matrix::Zero(n, n);
  for (std::size_t p = 0; p < ens.n_paths; ++p) {
    m.mean += Eigen::Map<const Vector>(ens.state(p, record).data(), n);
  }
  m.mean /= static_cast<double>(ens.n_paths);
  for (std::size_t p = 0; p < ens.n_paths; ++p) {
    const Vector d = Eigen::Map<const Vector>(ens.state(p, record).data(), n) - m.mean;
    m.cov += d * d.transpose();
  }
  m.cov /= static_cast<double>(std::max<std::size_t>(1, ens.n_paths - 1));
  return m;
}

Vector histogram_masses(const Ensemble& ens, std::size_t record,
                        const Grid& grid) {
  if (grid.dim() != ens.dim) throw InvalidArgument("histogram grid has wrong dimension");
  Vector m = Vector::Zero(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t p = 0; p < ens.n_paths; ++p) {
    m[static_cast<Eigen::Index>(grid.locate(ens.state(p, record)))] += 1.0;
  }
  return m / static_cast<double>(ens.n_paths);
}

Vector coarse_masses(const DensityField& fine, int factor) {
  const Grid& g = fine.grid;
  std::vector<int> coarse_cells;
  for (int i = 0; i < g.dim(); ++i) {
    if (g.cells(i) % factor != 0) {
      throw InvalidArgument("coarse_masses: factor must divide every axis");
    }
    coarse_cells.push_back(g.cells(i) / factor);
  }
  // The coarse grid may have fewer than 8 cells per axis; index by hand.
  std::vector<std::size_t> stride(static_cast<std::size_t>(g.dim()), 1);
  for (int i = g.dim() - 2; i >= 0; --i) {
    stride[static_cast<std::size_t>(i)] =
        stride[static_cast<std::size_t>(i) + 1] *
        static_cast<std::size_t>(coarse_cells[static_cast<std::size_t>(i) + 1]);
  }
  std::size_t total = 1;
  for (int c : coarse_cells) total *= static_cast<std::size_t>(c);
  Vector m = Vector::Zero(static_cast<Eigen::Index>(total));
  for (std::size_t c = 0; c < g.size(); ++c) {
    const auto idx = g.unflatten(c);
    std::size_t flat = 0;
    for (int i = 0; i < g.dim(); ++i) {
      flat += static_cast<std::size_t>(idx[static_cast<std::size_t>(i)] / factor) *
              stride[static_cast<std::size_t>(i)];
    }
    m[static_cast<Eigen::Index>(flat)] += fine.values[static_cast<Eigen::Index>(c)];
  }
  return m * g.cell_volume();
}

// ------------------------------------------------------- two-time reversal test

namespace {

std::vector<std::vector<double>> quantile_edges(const Grid& grid,
                                                const ScalarField& phi,
                                                int bins) {
  const DensityField ueq = equilibrium_density(grid, phi);
  std::vector<std::vector<double>> edges;
  for (int axis = 0; axis < grid.dim(); ++axis) {
    std::vector<double> marginal(static_cast<std::size_t>(grid.cells(axis)), 0.0);
    for (std::size_t c = 0; c < grid.size(); ++c) {
      marginal[static_cast<std::size_t>(grid.unflatten(c)[static_cast<std::size_t>(axis)])] +=
          ueq.values[static_cast<Eigen::Index>(c)] * grid.cell_volume();
    }
    std::vector<double> e;
    double acc = 0.0;
    int q = 1;
    for (int k = 0; k < grid.cells(axis) && q < bins; ++k) {
      const double next = acc + marginal[static_cast<std::size_t>(k)];
      while (q < bins && next >= static_cast<double>(q) / bins) {
        const double frac = (static_cast<double>(q) / bins - acc) /
                            marginal[static_cast<std::size_t>(k)];
        e.push_back(grid.box().lower[axis] + (k + frac) * grid.h(axis));
        ++q;
      }
      acc = next;
    }
    edges.push_back(std::move(e));
  }
  return edges;
}

std::size_t spatial_bin(const std::vector<std::vector<double>>& edges, int bins,
                        std::span<const double> x) {
  std::size_t b = 0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto k = static_cast<std::size_t>(
        std::upper_bound(edges[i].begin(), edges[i].end(), x[i]) - edges[i].begin());
    b = b * static_cast<std::size_t>(bins) + k;
  }
  return b;
}

Matrix joint_counts(const Ensemble& ens,
                    const std::vector<std::vector<double>>& edges, int bins,
                    std::size_t B) {
  Matrix H = Matrix::Zero(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(B));
  for (std::size_t p = 0; p < ens.n_paths; ++p) {
    const std::size_t b1 = spatial_bin(edges, bins, ens.state(p, 0));
    const std::size_t b2 = spatial_bin(edges, bins, ens.state(p, 1));
    H(static_cast<Eigen::Index>(b1), static_cast<Eigen::Index>(b2)) += 1.0;
  }
  return H;
}

double total_variation(const Matrix& P, const Matrix& Q) {
  return 0.5 * (P - Q).cwiseAbs().sum();
}

}  // namespace

JointTestResult two_time_joint_test(const FieldModel& model,
                                    const JointTestConfig& cfg) {
  if (cfg.bins_per_axis < 1) throw InvalidArgument("bins_per_axis must be positive");
  if (!(cfg.t_lag >= cfg.dt)) throw InvalidArgument("t_lag must be at least dt");
  JointTestResult res;
  res.edges = quantile_edges(cfg.grid, model.phi, cfg.bins_per_axis);
  std::size_t B = 1;
  for (int i = 0; i < model.dim(); ++i) B *= static_cast<std::size_t>(cfg.bins_per_axis);

  SimConfig sim;
  sim.dt = cfg.dt;
  sim.T = cfg.t_lag;
  sim.n_paths = cfg.n_paths;
  sim.seed = cfg.seed;
  sim.initial = InitialCondition::stationary(cfg.grid);
  sim.record_steps = {0, sim.n_steps()};
  sim.threads = cfg.threads;

  const FieldModel reversed = model.reversed();
  sim.stream_offset = 0;
  const Matrix Hf = joint_counts(simulate(model, sim), res.edges, cfg.bins_per_axis, B);
  sim.stream_offset = cfg.n_paths;
  const Matrix Hr = joint_counts(simulate(reversed, sim), res.edges, cfg.bins_per_axis, B);
  sim.stream_offset = 2 * cfg.n_paths;
  const Matrix Hi = joint_counts(simulate(model, sim), res.edges, cfg.bins_per_axis, B);

  res.min_count = static_cast<std::size_t>(
      std::min({Hf.minCoeff(), Hr.minCoeff(), Hi.minCoeff()}));
  if (res.min_count < cfg.min_count) {
    throw InsufficientSamples(
        "two_time_joint_test: a joint cell holds only " + std::to_string(res.min_count) +
        " samples (need " + std::to_string(cfg.min_count) +
        "); use coarser bins or more paths");
  }
  const double inv = 1.0 / static_cast<double>(cfg.n_paths);
  res.forward = Hf * inv;
  res.reversed = Hr * inv;
  res.independent = Hi * inv;
  res.distance = total_variation(res.forward, res.reversed.transpose());
  res.baseline = total_variation(res.forward, res.independent);
  res.control = total_variation(res.forward, res.independent.transpose());
  return res;
}

// ---------------------------------------------------------------- e_p estimator

EpEstimate estimate_ep_pathwise(const Ensemble& ens, const FieldModel& model,
                                std::span<const DensityField> u_ref,
                                std::size_t slice_steps, int threads) {
  const int n = ens.dim;
  const std::size_t R = ens.records();
  if (slice_steps == 0) throw InvalidArgument("slice_steps must be positive");
  if (R < 2) throw InvalidArgument("estimate_ep_pathwise: need at least two records");
  for (std::size_t r = 1; r < R; ++r) {
    if (ens.steps[r] != ens.steps[r - 1] + 1) {
      throw InvalidArgument("estimate_ep_pathwise: ensemble must record every step");
    }
  }
  if (u_ref.size() < R) {
    throw InvalidArgument("estimate_ep_pathwise: reference history is too short");
  }
  for (std::size_t r = 0; r < R; ++r) {
    if (std::abs(u_ref[r].t - ens.times[r]) > 1e-9 * std::max(1.0, ens.times[r])) {
      throw InvalidArgument("estimate_ep_pathwise: reference times do not match the ensemble");
    }
  }
  if (model.singular_diffusion) {
    throw InvalidArgument("estimate_ep_pathwise: D must be nonsingular");
  }

  const std::size_t slices = (R - 1) / slice_steps;
  if (slices == 0) throw InvalidArgument("estimate_ep_pathwise: horizon shorter than one slice");
  const double dt = ens.dt;
  const VectorField bplus = model.ito_drift();
  const VectorField bminus = model.reversed().ito_drift();
  const bool constant_D = model.D.is_constant();
  Matrix inv2D;
  if (constant_D) inv2D = (2.0 * model.D.constant_value()).inverse();

  std::vector<double> per_path(ens.n_paths * slices, 0.0);
  parallel_for(
      ens.n_paths,
      [&](std::size_t begin, std::size_t end) {
        Vector x(n), y(n), bp(n), bm(n), r1(n), r2(n);
        Matrix Dx, Dy;
        for (std::size_t p = begin; p < end; ++p) {
          for (std::size_t s = 0; s < slices; ++s) {
            double acc = 0.0;
            for (std::size_t k = 0; k < slice_steps; ++k) {
              const std::size_t r = s * slice_steps + k;
              x = Eigen::Map<const Vector>(ens.state(p, r).data(), n);
              y = Eigen::Map<const Vector>(ens.state(p, r + 1).data(), n);
              bplus(view(x), view(bp));
              bminus(view(y), view(bm));
              r1 = y - x - bp * dt;
              r2 = x - y - bm * dt;
              double log_ratio;
              if (constant_D) {
                log_ratio = (r2.dot(inv2D * r2) - r1.dot(inv2D * r1)) / (2.0 * dt);
              } else {
                model.D(view(x), Dx);
                model.D(view(y), Dy);
                const Eigen::LDLT<Matrix> lx(2.0 * Dx), ly(2.0 * Dy);
                log_ratio = (r2.dot(ly.solve(r2)) - r1.dot(lx.solve(r1))) / (2.0 * dt) -
                            0.5 * (lx.vectorD().array().log().sum() -
                                   ly.vectorD().array().log().sum());
              }
              const double ux = interpolate(u_ref[r].grid, u_ref[r].values, view(x));
              const double uy = interpolate(u_ref[r + 1].grid, u_ref[r + 1].values, view(y));
              if (!(ux > 0.0) || !(uy > 0.0)) {
                throw DensityError("estimate_ep_pathwise: reference density vanishes on path " +
                                   std::to_string(p) + " at record " + std::to_string(r));
              }
              acc += (log_ratio + std::log(ux) - std::log(uy)) / dt;
            }
            per_path[p * slices + s] = acc / static_cast<double>(slice_steps);
          }
        }
      },
      threads);

  EpEstimate out;
  out.slice_steps = slice_steps;
  const double np = static_cast<double>(ens.n_paths);
  for (std::size_t s = 0; s < slices; ++s) {
    double mean = 0.0;
    for (std::size_t p = 0; p < ens.n_paths; ++p) mean += per_path[p * slices + s];
    mean /= np;
    double var = 0.0;
    for (std::size_t p = 0; p < ens.n_paths; ++p) {
      const double d = per_path[p * slices + s] - mean;
      var += d * d;
    }
    var /= std::max(1.0, np - 1.0);
    const std::size_t r0 = s * slice_steps;
    out.t.push_back(0.5 * (ens.times[r0] + ens.times[r0 + slice_steps]));
    out.estimate.push_back(mean);
    out.std_error.push_back(std::sqrt(var / np));
  }
  return out;
}

}  // namespace orthoflux
