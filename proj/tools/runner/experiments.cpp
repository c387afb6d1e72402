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

#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>

#include "orthoflux/ao.hpp"
#include "orthoflux/array_io.hpp"
#include "orthoflux/calculus.hpp"
#include "orthoflux/errors.hpp"
#include "orthoflux/fpe.hpp"
#include "orthoflux/linear_gauss.hpp"
#include "orthoflux/models.hpp"
#include "orthoflux/perturbation.hpp"
#include "orthoflux/rng.hpp"
#include "orthoflux/sde.hpp"
#include "orthoflux/thermo.hpp"
#include "orthoflux/version.hpp"
#include "plot.hpp"

namespace orthoflux::runner {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ----------------------------------------------------------------- registry

std::vector<KeyDoc> common_keys() {
  return {{"experiment.kind", "(required)", "experiment to run"},
          {"experiment.seed", "1", "master seed for every random stream"},
          {"experiment.output", "out", "output directory (overridden by --out)"},
          {"experiment.plots", "true", "write PGM plot files"},
          {"model.name", "(required)", "zoo model, see list-models"},
          {"model.<param>", "model default", "model parameters"},
          {"grid.box", "model box", "lo0 hi0 lo1 hi1 ...: override the model box"}};
}

std::vector<KeyDoc> with_common(std::vector<KeyDoc> extra, bool model = true) {
  std::vector<KeyDoc> keys;
  for (KeyDoc& k : common_keys()) {
    if (!model && (k.key.rfind("model.", 0) == 0 || k.key == "grid.box")) continue;
    keys.push_back(std::move(k));
  }
  for (KeyDoc& k : extra) keys.push_back(std::move(k));
  return keys;
}

const std::vector<KeyDoc> kInitialKeys = {
    {"initial.mean", "a quarter box width along axis 0", "mean of the Gaussian start"},
    {"initial.cov", "(box width / 12)^2 per axis", "diagonal variances of the Gaussian start"}};

std::vector<ExperimentInfo> build_registry() {
  std::vector<ExperimentInfo> reg;
  {
    std::vector<KeyDoc> keys = {
        {"sim.mode", "grid (ensemble for singular D)", "grid | ensemble"},
        {"grid.cells", "64", "cells per axis (one value or one per axis)"},
        {"sim.refinements", "1", "grid mode: number of grid doublings for the order estimate"},
        {"sim.T", "10", "relaxation (grid) or simulation (ensemble) horizon"},
        {"sim.dt", "auto", "grid: 0.9 of the stability bound; ensemble: 0.01"},
        {"sim.method", "heun", "grid time stepper: heun | implicit_euler"},
        {"sim.paths", "100000", "ensemble mode: number of paths"},
        {"sim.bins", "16", "ensemble mode: histogram cells per axis"},
        {"initial.kind", "gaussian", "ensemble mode: gaussian | point | stationary"},
        {"initial.point", "initial.mean", "ensemble mode: start for kind = point"},
        {"check.min_order", "1.8", "grid mode: smallest accepted observed order"},
        {"check.l1", "1e-3 (grid) / 0.05 (ensemble)", "largest accepted L1 distance to exp(-phi)"},
        {"experiment.write_paths", "false", "ensemble mode: write paths.csv"}};
    keys.insert(keys.end(), kInitialKeys.begin(), kInitialKeys.end());
    reg.push_back(
        {"stationarity", "exp(-phi) is the stationary state of the model",
         "Grid mode evaluates L exp(-phi) for the uncorrected operator on successively doubled "
         "grids, reports the observed convergence order, then relaxes a displaced Gaussian for "
         "time T and reports its L1 distance to the discrete equilibrium. Ensemble mode "
         "simulates the SDE to time T and compares the histogram of the final states with the "
         "cell masses of exp(-phi).",
         with_common(keys)});
  }
  {
    std::vector<KeyDoc> keys = {
        {"grid.cells", "128", "cells per axis"},
        {"sim.T", "2", "relaxation horizon"},
        {"sim.dt", "0.5 of the stability bound", "time step"},
        {"sim.method", "heun", "heun | implicit_euler"},
        {"sim.record_every", "1", "steps between thermo records"},
        {"check.second_law", "1e-3", "max |dF/dt + ep|"},
        {"check.entropy_balance", "1e-3", "max |dS/dt - ep + hd|"},
        {"check.monotone", "1e-10", "largest accepted increase of F between records"}};
    keys.insert(keys.end(), kInitialKeys.begin(), kInitialKeys.end());
    reg.push_back({"thermo-balance", "free-energy and entropy balance of a grid relaxation",
                   "Relaxes a displaced Gaussian on the grid and records U, S, F, ep and hd. "
                   "Time derivatives use centered differences inside the series and "
                   "second-order one-sided differences at its ends.",
                   with_common(keys)});
  }
  {
    std::vector<KeyDoc> keys = {
        {"grid.cells", "128", "grid for stationary sampling and the quantile bin edges"},
        {"sim.dt", "5e-3", "Euler-Maruyama step"},
        {"sim.paths", "100000", "paths per run"},
        {"sim.lag", "1", "time between the two observations"},
        {"sim.bins", "4", "quantile bins per axis"},
        {"sim.min_count", "20", "smallest accepted joint-cell count"},
        {"check.distance", "2", "largest accepted distance / baseline"},
        {"check.control", "5", "smallest accepted control / baseline"},
        {"check.expect_current", "auto", "auto | true | false: judge the control"}};
    reg.push_back(
        {"fig1-reversal", "the -g process is the time reversal of the +g process",
         "Runs the +g model from its stationary law and records the state at 0 and after the "
         "lag, binned into per-axis quantile cells of exp(-phi). The -g model is run the same "
         "way on fresh streams and its joint histogram is transposed. The total-variation "
         "distance between the +g joint law and the transposed -g joint law is judged against "
         "the distance between two independent +g runs (the Monte Carlo baseline). As a "
         "control, the +g joint law is also compared with a transposed independent +g run, "
         "which differs from it whenever the stationary current is nonzero.",
         with_common(keys)});
  }
  {
    std::vector<KeyDoc> keys = {
        {"ao.count", "10", "random models"},
        {"ao.dim", "2", "state dimension (grid order check for dim <= 3)"},
        {"ao.quartic", "0.05", "quartic coefficient of the random potentials"},
        {"ao.probes", "200", "probe points per model"},
        {"grid.cells", "64 (16 in 3D)", "coarse grid of the order check"},
        {"check.orthogonality", "1e-10", "max |grad phi . g|"},
        {"check.divergence", "1e-8", "max |div g|"},
        {"check.min_order", "1.8", "smallest accepted observed order"},
        {"check.zero_a_current", "1e-12", "max |g| when A = 0"}};
    reg.push_back({"ao-check", "drift assembled from random S, A and potentials",
                   "Draws random constant S (SPD) and A (antisymmetric) with quadratic plus "
                   "quartic potentials, assembles drift and diffusion, and checks that the "
                   "conservative part is orthogonal to grad phi and divergence-free, that the "
                   "grid stationary residual converges, and that A = 0 leaves no current.",
                   with_common(keys, false)});
  }
  {
    std::vector<KeyDoc> keys = {
        {"perturbation.probes", "200", "probe points"},
        {"perturbation.epsilon", "0.1", "noise strength recorded with the candidate"},
        {"perturbation.linear_models", "20", "random linear models to classify"},
        {"perturbation.linear_dim", "2", "dimension of the random linear models"},
        {"check.residual", "1e-10", "largest accepted phi0/phi1/phi2 residual"}};
    reg.push_back({"perturbation-check", "small-noise expansion residuals and reversal classes",
                   "Evaluates the phi0, phi1 and phi2 residuals with phi0 = phi and "
                   "phi1 = phi2 = 0 on the model and on random linear models, and classifies "
                   "each as overdamped, underdamped or neither.",
                   with_common(keys)});
  }
  {
    std::vector<KeyDoc> keys = {
        {"grid.cells", "64", "cells per axis"},
        {"sim.dt", "2e-3", "Euler-Maruyama step (the grid substeps below its bound)"},
        {"sim.T", "0.5", "horizon"},
        {"sim.paths", "50000", "paths for the density comparison"},
        {"sim.record_every", "25", "steps between density comparisons"},
        {"sim.coarsen", "8", "fine cells per histogram cell along each axis"},
        {"sim.ep_check", "true for nonsingular D", "run the pathwise ep estimator"},
        {"sim.ep_paths", "10000", "paths for each ep run"},
        {"check.l1", "0.05", "largest accepted histogram L1 distance"},
        {"check.ep", "1", "largest accepted |mc - grid| / (3 se + dt bias)"}};
    keys.insert(keys.end(), kInitialKeys.begin(), kInitialKeys.end());
    reg.push_back(
        {"ensemble-vs-grid", "SDE ensemble against the grid solution from the same start",
         "Simulates paths from a Gaussian start, compares histograms with the grid density at "
         "the record times, and (nonsingular D) compares the window-averaged pathwise ep "
         "estimate with the grid ep. The estimator's dt bias is bounded by repeating it at "
         "dt / 2.",
         with_common(keys)});
  }
  return reg;
}

// ------------------------------------------------------------------ context

struct Context {
  Resolver& r;
  fs::path out;
  std::uint64_t seed = 0;
  int threads = 0;
  bool plots = true;
  RunResult& result;
  json diagnostics = json::object();

  void check(const std::string& name, double value, const std::string& relation,
             double tolerance) {
    const bool pass = relation == "<=" ? value <= tolerance : value >= tolerance;
    result.checks.push_back({name, value, relation, tolerance, pass && std::isfinite(value)});
  }

  void file(const std::string& name, const std::string& schema,
            const std::function<void(std::ostream&)>& body) {
    fs::create_directories(out);
    std::ofstream os(out / name, std::ios::binary);
    if (!os) throw Error("cannot write '" + (out / name).string() + "'");
    body(os);
    if (!os) throw Error("write to '" + (out / name).string() + "' failed");
    result.artifacts.push_back({name, schema});
  }
};

[[noreturn]] void config_fail(const Resolver& r, const std::string& section,
                              const std::string& key, const std::string& message) {
  const Config::Entry* e = r.config().find(section, key);
  const int line = e ? e->line : 0;
  const std::string prefix = line > 0 ? "line " + std::to_string(line) + ": " : "";
  throw ConfigError(prefix + section + "." + key + ": " + message, section + "." + key, line);
}

FieldModel resolve_model(Resolver& r) {
  const std::string name = r.required_text("model", "name");
  const ModelInfo* info = nullptr;
  try {
    info = &find_model(name);
  } catch (const InvalidArgument&) {
    config_fail(r, "model", "name", "unknown model '" + name + "'");
  }
  std::map<std::string, double> params;
  for (const ParamDoc& p : info->params) {
    params[p.name] = r.number("model", p.name, p.default_value, p.lo, p.hi);
  }
  FieldModel m;
  try {
    m = make_model(name, params);
  } catch (const InvalidArgument& e) {
    config_fail(r, "model", "name", e.what());
  }
  const int n = m.dim();
  if (r.config().find("grid", "box")) {
    const auto b = r.numbers("grid", "box", {}, static_cast<std::size_t>(2 * n),
                             static_cast<std::size_t>(2 * n));
    Vector lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      lo[i] = b[static_cast<std::size_t>(2 * i)];
      hi[i] = b[static_cast<std::size_t>(2 * i + 1)];
      if (!(hi[i] > lo[i])) config_fail(r, "grid", "box", "needs lo < hi on every axis");
    }
    m.box = Box(lo, hi);
  } else {
    std::vector<double> b;
    for (int i = 0; i < n; ++i) {
      b.push_back(m.box.lower[i]);
      b.push_back(m.box.upper[i]);
    }
    r.set_resolved("grid", "box", b);
  }
  return m;
}

std::vector<int> resolve_cells(Resolver& r, int dim, int fallback) {
  const auto v = r.numbers("grid", "cells", {static_cast<double>(fallback)}, 1,
                           static_cast<std::size_t>(dim));
  std::vector<int> cells;
  for (int i = 0; i < dim; ++i) {
    const double c = v.size() == 1 ? v[0] : v[static_cast<std::size_t>(i)];
    if (c != std::floor(c) || c < 8 || c > 4096) {
      config_fail(r, "grid", "cells", "cell counts must be integers in [8, 4096]");
    }
    cells.push_back(static_cast<int>(c));
  }
  return cells;
}

Grid make_grid(Resolver& r, const Box& box, std::vector<int> cells) {
  try {
    return Grid(box, std::move(cells));
  } catch (const InvalidArgument& e) {
    config_fail(r, "grid", "cells", e.what());
  }
}

struct GaussianStart {
  Vector mean;
  Matrix cov;
};

GaussianStart resolve_gaussian(Resolver& r, const FieldModel& m) {
  const int n = m.dim();
  const Vector half = 0.5 * m.box.width();
  std::vector<double> mean(static_cast<std::size_t>(n), 0.0), var;
  mean[0] = 0.25 * half[0];
  for (int i = 0; i < n; ++i) var.push_back(std::pow(half[i] / 6.0, 2));
  const auto mu = r.numbers("initial", "mean", mean, static_cast<std::size_t>(n),
                            static_cast<std::size_t>(n));
  const auto cv = r.numbers("initial", "cov", var, static_cast<std::size_t>(n),
                            static_cast<std::size_t>(n));
  GaussianStart g{Vector(n), Matrix::Zero(n, n)};
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!(cv[k] > 0.0)) config_fail(r, "initial", "cov", "variances must be positive");
    if (mu[k] <= m.box.lower[i] || mu[k] >= m.box.upper[i]) {
      config_fail(r, "initial", "mean", "mean lies outside the box");
    }
    g.mean[i] = mu[k];
    g.cov(i, i) = cv[k];
  }
  return g;
}

std::vector<double> column(std::span<const ThermoRecord> recs, double ThermoRecord::*field) {
  std::vector<double> out;
  out.reserve(recs.size());
  for (const ThermoRecord& r : recs) out.push_back(r.*field);
  return out;
}

void write_heatmap(Context& ctx, const std::string& name, const DensityField& u) {
  if (!ctx.plots || u.grid.dim() != 2) return;
  ctx.file(name, "pgm", [&](std::ostream& os) { write_pgm(os, u); });
}

void write_series_plot(Context& ctx, const std::string& name, const std::vector<double>& t,
                       const std::vector<double>& y) {
  if (!ctx.plots || t.size() < 2) return;
  ctx.file(name, "pgm", [&](std::ostream& os) { write_line_plot(os, t, y); });
}

/// Fixed-step relaxation whose step divides `dt_outer` exactly and stays
/// below `fraction` of the stability bound.
Relaxation relax_aligned(const FpeOperator& op, const DensityField& u0, double dt_outer,
                         std::size_t outer_steps, std::size_t record_every_outer,
                         bool keep_history, double fraction = 0.5) {
  const auto sub = static_cast<std::size_t>(
      std::max(1.0, std::ceil(dt_outer / (fraction * op.stability_bound()))));
  RelaxationOptions o;
  o.dt = dt_outer / static_cast<double>(sub);
  o.steps = outer_steps * sub;
  o.record_every = record_every_outer * sub;
  o.keep_history = keep_history;
  return relax(op, u0, o);
}

// -------------------------------------------------------------- experiments

void stationarity_grid(Context& ctx, const FieldModel& m) {
  Resolver& r = ctx.r;
  const std::vector<int> base = resolve_cells(r, m.dim(), 64);
  const auto refinements = r.integer("sim", "refinements", 1, 1, 3);
  const double min_order = r.number("check", "min_order", 1.8, 0.0, 10.0);
  const double l1_tol = r.number("check", "l1", 1e-3, 0.0, 2.0);
  const double T = r.number("sim", "T", 10.0, kPositive, 1e6);
  const double dt_in = r.number("sim", "dt", 0.0, 0.0, 1e3);
  const std::string method = r.choice("sim", "method", "heun", {"heun", "implicit_euler"});
  const GaussianStart start = resolve_gaussian(r, m);
  r.finish();

  struct Row {
    std::vector<int> cells;
    double h;
    StationaryResidual res;
    double order;
  };
  std::vector<Row> rows;
  for (int k = 0; k <= refinements; ++k) {
    std::vector<int> cells = base;
    for (int& c : cells) c <<= k;
    const Grid g = make_grid(r, m.box, cells);
    double h = g.h(0);
    for (int i = 1; i < g.dim(); ++i) h = std::min(h, g.h(i));
    const StationaryResidual s = stationary_residual(g, m);
    const double order = rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                                      : std::log2(rows.back().res.res_sup / s.res_sup);
    rows.push_back({cells, h, s, order});
  }
  ctx.file("residuals.csv", "residuals/1", [&](std::ostream& os) {
    os << "cells,h,res_sup,res_full,res_conservative,observed_order\n";
    for (const Row& row : rows) {
      std::string cells;
      for (int c : row.cells) cells += (cells.empty() ? "" : "x") + std::to_string(c);
      os << cells << ',' << format_double(row.h) << ',' << format_double(row.res.res_sup) << ','
         << format_double(row.res.res_full) << ',' << format_double(row.res.res_conservative)
         << ',' << format_double(row.order) << '\n';
    }
  });
  ctx.check("observed_order", rows.back().order, ">=", min_order);

  const Grid g = make_grid(r, m.box, base);
  const FpeOperator op = build_operator(g, m);
  RelaxationOptions o;
  o.method = method == "heun" ? StepMethod::heun : StepMethod::implicit_euler;
  if (dt_in > 0.0) {
    o.steps = static_cast<std::size_t>(std::llround(T / dt_in));
    o.dt = dt_in;
  } else {
    o.steps = static_cast<std::size_t>(std::ceil(T / (0.9 * op.stability_bound())));
    o.dt = T / static_cast<double>(o.steps);
  }
  if (o.steps == 0) config_fail(r, "sim", "dt", "horizon shorter than one step");
  o.record_every = o.steps;
  const Relaxation rel = relax(op, gaussian_density(g, start.mean, start.cov), o);
  const DensityField eq = equilibrium_density(g, m.phi);
  const double l1 = l1_distance(g, rel.final_state.values, eq.values);
  ctx.diagnostics["relaxation_dt"] = o.dt;
  ctx.diagnostics["relaxation_steps"] = o.steps;
  ctx.diagnostics["projection_correction"] = op.projection_correction();
  ctx.file("final_density.csv", "density/1",
           [&](std::ostream& os) { write_density_csv(os, rel.final_state); });
  write_heatmap(ctx, "final_density.pgm", rel.final_state);
  ctx.check("l1_long_time", l1, "<=", l1_tol);
}

InitialCondition resolve_sde_start(Resolver& r, const FieldModel& m, const Grid& sampling) {
  const std::string kind =
      r.choice("initial", "kind", "gaussian", {"gaussian", "point", "stationary"});
  if (kind == "stationary") return InitialCondition::stationary(sampling);
  const GaussianStart g = resolve_gaussian(r, m);
  if (kind == "gaussian") return InitialCondition::gaussian(g.mean, g.cov);
  std::vector<double> fallback(g.mean.data(), g.mean.data() + g.mean.size());
  const auto p = r.numbers("initial", "point", fallback, g.mean.size(), g.mean.size());
  Vector x(m.dim());
  for (int i = 0; i < m.dim(); ++i) x[i] = p[static_cast<std::size_t>(i)];
  if (!m.box.contains(view(x))) config_fail(r, "initial", "point", "point lies outside the box");
  return InitialCondition::at(x);
}

void stationarity_ensemble(Context& ctx, const FieldModel& m) {
  Resolver& r = ctx.r;
  const int n = m.dim();
  const double dt = r.number("sim", "dt", 1e-2, kPositive, 10.0);
  const double T = r.number("sim", "T", 10.0, kPositive, 1e6);
  const auto paths = r.integer("sim", "paths", 100000, 1, 100000000);
  const auto bins = r.integer("sim", "bins", 16, 2, 512);
  const double l1_tol = r.number("check", "l1", 0.05, 0.0, 2.0);
  const bool write_paths = r.flag("experiment", "write_paths", false);
  constexpr int kFine = 8;
  const Grid coarse = make_grid(r, m.box, std::vector<int>(static_cast<std::size_t>(n),
                                                           static_cast<int>(bins)));
  const Grid fine = make_grid(r, m.box, std::vector<int>(static_cast<std::size_t>(n),
                                                         static_cast<int>(bins) * kFine));
  SimConfig sc;
  sc.dt = dt;
  sc.T = T;
  sc.n_paths = static_cast<std::size_t>(paths);
  sc.seed = ctx.seed;
  sc.initial = resolve_sde_start(r, m, fine);
  sc.threads = ctx.threads;
  r.finish();
  if (T < dt) config_fail(r, "sim", "T", "horizon shorter than one step");
  sc.record_steps = {0, sc.n_steps()};

  const Ensemble ens = simulate(m, sc);
  const Vector ref = coarse_masses(equilibrium_density(fine, m.phi), kFine);
  const Vector emp = histogram_masses(ens, 1, coarse);
  const double l1 = (emp - ref).cwiseAbs().sum();
  ctx.diagnostics["reflections"] = ens.reflections;
  ctx.diagnostics["envelope_violations"] = ens.envelope_violations;

  const double vol = coarse.cell_volume();
  ctx.file("ensemble_density.csv", "density/1", [&](std::ostream& os) {
    write_density_csv(os, DensityField{coarse, emp / vol, ens.times.back()});
  });
  ctx.file("reference_density.csv", "density/1", [&](std::ostream& os) {
    write_density_csv(os, DensityField{coarse, ref / vol, ens.times.back()});
  });
  ctx.file("moments.csv", "moments/1", [&](std::ostream& os) {
    os << "t,axis,mean,variance\n";
    for (std::size_t rec = 0; rec < ens.records(); ++rec) {
      const Moments mo = ensemble_moments(ens, rec);
      for (int i = 0; i < n; ++i) {
        os << format_double(ens.times[rec]) << ',' << i << ',' << format_double(mo.mean[i])
           << ',' << format_double(mo.cov(i, i)) << '\n';
      }
    }
  });
  if (write_paths) {
    ctx.file("paths.csv", "ensemble/1", [&](std::ostream& os) { write_ensemble_csv(os, ens); });
  }
  write_heatmap(ctx, "ensemble_density.pgm", DensityField{coarse, emp / vol, ens.times.back()});
  ctx.check("l1_density", l1, "<=", l1_tol);
}

void stationarity(Context& ctx) {
  const FieldModel m = resolve_model(ctx.r);
  const std::string mode =
      ctx.r.choice("sim", "mode", m.singular_diffusion ? "ensemble" : "grid", {"grid", "ensemble"});
  if (mode == "grid") {
    stationarity_grid(ctx, m);
  } else {
    stationarity_ensemble(ctx, m);
  }
}

void thermo_balance(Context& ctx) {
  Resolver& r = ctx.r;
  const FieldModel m = resolve_model(r);
  const Grid g = make_grid(r, m.box, resolve_cells(r, m.dim(), 128));
  const double T = r.number("sim", "T", 2.0, kPositive, 1e6);
  const double dt_in = r.number("sim", "dt", 0.0, 0.0, 1e3);
  const std::string method = r.choice("sim", "method", "heun", {"heun", "implicit_euler"});
  const auto every = r.integer("sim", "record_every", 1, 1, 1000000);
  const double tol_second = r.number("check", "second_law", 1e-3, 0.0, kInf);
  const double tol_balance = r.number("check", "entropy_balance", 1e-3, 0.0, kInf);
  const double tol_monotone = r.number("check", "monotone", 1e-10, 0.0, kInf);
  const GaussianStart start = resolve_gaussian(r, m);
  r.finish();

  const FpeOperator op = build_operator(g, m);
  RelaxationOptions o;
  o.method = method == "heun" ? StepMethod::heun : StepMethod::implicit_euler;
  if (dt_in > 0.0) {
    o.dt = dt_in;
    o.steps = static_cast<std::size_t>(std::llround(T / dt_in));
  } else {
    o.steps = static_cast<std::size_t>(std::ceil(T / (0.5 * op.stability_bound())));
    o.dt = T / static_cast<double>(o.steps);
  }
  o.record_every = static_cast<std::size_t>(every);
  if (o.steps < 2 * o.record_every) {
    config_fail(r, "sim", "record_every", "fewer than three records in the horizon");
  }
  const Relaxation rel = relax(op, gaussian_density(g, start.mean, start.cov), o);
  const BalanceReport bal = balance_check(rel.records);
  ctx.diagnostics["dt"] = o.dt;
  ctx.diagnostics["steps"] = o.steps;

  ctx.file("thermo.csv", "thermo/1",
           [&](std::ostream& os) { write_thermo_csv(os, rel.records); });
  const std::vector<double> t = column(rel.records, &ThermoRecord::t);
  const std::vector<double> F = column(rel.records, &ThermoRecord::F);
  const std::vector<double> S = column(rel.records, &ThermoRecord::S);
  const std::vector<double> ep = column(rel.records, &ThermoRecord::ep);
  const double spacing = o.dt * static_cast<double>(o.record_every);
  const std::vector<double> dF = time_derivative(F, spacing);
  const std::vector<double> dS = time_derivative(S, spacing);
  ctx.file("balance.csv", "balance/1", [&](std::ostream& os) {
    os << "t,dF_dt,ep,dF_dt_plus_ep,dS_dt,dS_dt_minus_ep_plus_hd\n";
    for (std::size_t i = 0; i < rel.records.size(); ++i) {
      const ThermoRecord& rec = rel.records[i];
      os << format_double(rec.t) << ',' << format_double(dF[i]) << ',' << format_double(rec.ep)
         << ',' << format_double(dF[i] + rec.ep) << ',' << format_double(dS[i]) << ','
         << format_double(dS[i] - rec.ep + rec.hd) << '\n';
    }
  });
  write_series_plot(ctx, "free_energy.pgm", t, F);
  write_series_plot(ctx, "entropy_production.pgm", t, ep);
  write_heatmap(ctx, "final_density.pgm", rel.final_state);
  ctx.check("max_abs_dF_dt_plus_ep", bal.second_law, "<=", tol_second);
  ctx.check("max_abs_dS_dt_minus_ep_plus_hd", bal.entropy_balance, "<=", tol_balance);
  ctx.check("max_F_increase", bal.max_F_increase, "<=", tol_monotone);
}

void fig1_reversal(Context& ctx) {
  Resolver& r = ctx.r;
  const FieldModel m = resolve_model(r);
  JointTestConfig c;
  c.grid = make_grid(r, m.box, resolve_cells(r, m.dim(), 128));
  c.dt = r.number("sim", "dt", 5e-3, kPositive, 10.0);
  c.n_paths = static_cast<std::size_t>(r.integer("sim", "paths", 100000, 100, 100000000));
  c.t_lag = r.number("sim", "lag", 1.0, kPositive, 1e4);
  c.bins_per_axis = static_cast<int>(r.integer("sim", "bins", 4, 2, 16));
  c.min_count = static_cast<std::size_t>(r.integer("sim", "min_count", 20, 0, 1000000));
  c.seed = ctx.seed;
  c.threads = ctx.threads;
  const double tol_distance = r.number("check", "distance", 2.0, 0.0, kInf);
  const double tol_control = r.number("check", "control", 5.0, 0.0, kInf);
  const std::string expect =
      r.choice("check", "expect_current", "auto", {"auto", "true", "false"});
  r.finish();
  if (c.t_lag < c.dt) config_fail(r, "sim", "lag", "lag shorter than one step");

  const JointTestResult res = two_time_joint_test(m, c);
  ctx.diagnostics["distance"] = res.distance;
  ctx.diagnostics["baseline"] = res.baseline;
  ctx.diagnostics["control"] = res.control;
  ctx.diagnostics["min_count"] = res.min_count;
  ctx.diagnostics["edges"] = res.edges;
  ctx.file("joint.csv", "joint/1", [&](std::ostream& os) {
    os << "bin_start,bin_end,p_forward,p_reversed,p_independent\n";
    for (Eigen::Index i = 0; i < res.forward.rows(); ++i) {
      for (Eigen::Index j = 0; j < res.forward.cols(); ++j) {
        os << i << ',' << j << ',' << format_double(res.forward(i, j)) << ','
           << format_double(res.reversed(i, j)) << ',' << format_double(res.independent(i, j))
           << '\n';
      }
    }
  });
  ctx.check("distance_over_baseline", res.distance / res.baseline, "<=", tol_distance);

  bool current = expect == "true";
  if (expect == "auto") {
    double sup = 0.0;
    for (const Vector& x : random_probes(m.box, 64, ctx.seed)) sup = std::max(sup, m.g(x).norm());
    current = sup > 1e-12;
  }
  if (current) ctx.check("control_over_baseline", res.control / res.baseline, ">=", tol_control);
}

void ao_check(Context& ctx) {
  Resolver& r = ctx.r;
  const auto count = r.integer("ao", "count", 10, 1, 10000);
  const auto dim = static_cast<int>(r.integer("ao", "dim", 2, 1, 8));
  const double quartic = r.number("ao", "quartic", 0.05, 0.0, 10.0);
  const auto n_probes = static_cast<std::size_t>(r.integer("ao", "probes", 200, 1, 1000000));
  const bool grid_check = dim >= 1 && dim <= 3 && dim != 1;
  std::vector<int> cells;
  if (grid_check) cells = resolve_cells(r, dim, dim == 2 ? 64 : 16);
  const double tol_orth = r.number("check", "orthogonality", 1e-10, 0.0, kInf);
  const double tol_div = r.number("check", "divergence", 1e-8, 0.0, kInf);
  const double min_order = r.number("check", "min_order", 1.8, 0.0, 10.0);
  const double tol_zero = r.number("check", "zero_a_current", 1e-12, 0.0, kInf);
  r.finish();

  CounterStream rng(ctx.seed, 0, StreamDomain::models);
  struct Row {
    double orth, div, cond, coarse, fine, order, zero_current;
  };
  std::vector<Row> rows;
  for (std::int64_t i = 0; i < count; ++i) {
    const AoModel am = random_ao_model(dim, rng, quartic);
    const auto probes = random_probes(am.box, n_probes, ctx.seed + 1 + static_cast<std::uint64_t>(i));
    const AoAssembly as = assemble_ao(am, probes);
    const FieldModel fm = as.field_model(am);
    Row row{};
    row.orth = ao_orthogonality_check(am, probes);
    row.div = divergence_residual(fm.g, probes).max_abs;
    row.cond = as.max_condition;
    row.coarse = row.fine = row.order = std::numeric_limits<double>::quiet_NaN();
    if (grid_check) {
      std::vector<int> fine = cells;
      for (int& c : fine) c *= 2;
      row.coarse = stationary_residual(make_grid(r, fm.box, cells), fm).res_sup;
      row.fine = stationary_residual(make_grid(r, fm.box, fine), fm).res_sup;
      row.order = std::log2(row.coarse / row.fine);
    }
    AoModel sym = am;
    sym.A = MatrixField::constant(Matrix::Zero(dim, dim));
    const AoAssembly as0 = assemble_ao(sym, probes);
    row.zero_current = 0.0;
    for (const Vector& x : probes) row.zero_current = std::max(row.zero_current, as0.g(x).norm());
    rows.push_back(row);
  }
  double orth = 0.0, div = 0.0, order = kInf, zero = 0.0;
  for (const Row& row : rows) {
    orth = std::max(orth, row.orth);
    div = std::max(div, row.div);
    if (grid_check) order = std::min(order, row.order);
    zero = std::max(zero, row.zero_current);
  }
  ctx.file("ao_residuals.csv", "ao_residuals/1", [&](std::ostream& os) {
    os << "model,orthogonality,divergence,max_condition,res_coarse,res_fine,observed_order,"
          "zero_a_current\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Row& row = rows[i];
      os << i << ',' << format_double(row.orth) << ',' << format_double(row.div) << ','
         << format_double(row.cond) << ',' << format_double(row.coarse) << ','
         << format_double(row.fine) << ',' << format_double(row.order) << ','
         << format_double(row.zero_current) << '\n';
    }
  });
  ctx.check("max_orthogonality", orth, "<=", tol_orth);
  ctx.check("max_divergence", div, "<=", tol_div);
  if (grid_check) ctx.check("min_observed_order", order, ">=", min_order);
  ctx.check("max_zero_a_current", zero, "<=", tol_zero);
}

void perturbation_check(Context& ctx) {
  Resolver& r = ctx.r;
  const FieldModel m = resolve_model(r);
  const auto n_probes =
      static_cast<std::size_t>(r.integer("perturbation", "probes", 200, 1, 1000000));
  const double eps = r.number("perturbation", "epsilon", 0.1, kPositive, kInf);
  const auto n_linear = r.integer("perturbation", "linear_models", 20, 0, 100000);
  const auto linear_dim = static_cast<int>(r.integer("perturbation", "linear_dim", 2, 1, 16));
  const double tol = r.number("check", "residual", 1e-10, 0.0, kInf);
  r.finish();

  struct Row {
    std::string name;
    Phi0Residual r0;
    double r1, r2;
    Classification cl;
  };
  auto evaluate = [&](const std::string& name, const FieldModel& fm, std::uint64_t probe_seed) {
    const auto probes = random_probes(fm.box, n_probes, probe_seed);
    const ScalarField zero = ScalarField::constant(fm.dim(), 0.0);
    const EpsilonModel em{fm.drift(), fm.D, eps, fm.phi, zero, zero};
    return Row{name, residual_phi0(em, probes), residual_phi1(em, probes),
               residual_phi2(em, probes), reversal_classify(em.b, fm.D, fm.phi, probes)};
  };
  std::vector<Row> rows;
  rows.push_back(evaluate(m.name, m, ctx.seed));
  CounterStream rng(ctx.seed, 1, StreamDomain::models);
  for (std::int64_t i = 0; i < n_linear; ++i) {
    const FieldModel fm = linear_equilibrium_fields(random_linear_model(linear_dim, rng));
    rows.push_back(evaluate("linear_" + std::to_string(i), fm,
                            ctx.seed + 1 + static_cast<std::uint64_t>(i)));
  }
  double worst = 0.0;
  std::size_t neither = 0;
  for (const Row& row : rows) {
    worst = std::max({worst, row.r0.orthogonality, row.r0.divergence, row.r1, row.r2});
    if (row.cl.label == ReversalClass::neither) ++neither;
  }
  ctx.file("perturbation.csv", "perturbation/1", [&](std::ostream& os) {
    os << "case,phi0_orthogonality,phi0_divergence,phi1,phi2,label,current,current_divergence,"
          "current_orthogonality\n";
    for (const Row& row : rows) {
      os << row.name << ',' << format_double(row.r0.orthogonality) << ','
         << format_double(row.r0.divergence) << ',' << format_double(row.r1) << ','
         << format_double(row.r2) << ',' << to_string(row.cl.label) << ','
         << format_double(row.cl.current) << ',' << format_double(row.cl.divergence) << ','
         << format_double(row.cl.orthogonality) << '\n';
    }
  });
  ctx.check("max_residual", worst, "<=", tol);
  ctx.check("neither_count", static_cast<double>(neither), "<=", 0.0);
}

void ensemble_vs_grid(Context& ctx) {
  Resolver& r = ctx.r;
  const FieldModel m = resolve_model(r);
  const int n = m.dim();
  const std::vector<int> cells = resolve_cells(r, n, 64);
  const Grid g = make_grid(r, m.box, cells);
  const double dt = r.number("sim", "dt", 2e-3, kPositive, 10.0);
  const double T = r.number("sim", "T", 0.5, kPositive, 1e6);
  const auto paths = static_cast<std::size_t>(r.integer("sim", "paths", 50000, 1, 100000000));
  const auto every = static_cast<std::size_t>(r.integer("sim", "record_every", 25, 1, 100000000));
  const auto coarsen = static_cast<int>(r.integer("sim", "coarsen", 8, 1, 4096));
  const bool ep_check = r.flag("sim", "ep_check", !m.singular_diffusion);
  const auto ep_paths = static_cast<std::size_t>(r.integer("sim", "ep_paths", 10000, 2, 100000000));
  const double tol_l1 = r.number("check", "l1", 0.05, 0.0, 2.0);
  const double tol_ep = r.number("check", "ep", 1.0, 0.0, kInf);
  const GaussianStart start = resolve_gaussian(r, m);
  r.finish();
  for (int c : cells) {
    if (c % coarsen != 0) config_fail(r, "sim", "coarsen", "must divide grid.cells");
  }
  if (ep_check && m.singular_diffusion) {
    config_fail(r, "sim", "ep_check", "the pathwise estimator needs nonsingular D");
  }
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  if (steps < 2) config_fail(r, "sim", "T", "horizon shorter than two steps");

  const FpeOperator op = build_operator(g, m);
  const DensityField u0 = gaussian_density(g, start.mean, start.cov);
  const Relaxation rel = relax_aligned(op, u0, dt, steps, every, true);

  SimConfig sc;
  sc.dt = dt;
  sc.T = static_cast<double>(steps) * dt;
  sc.n_paths = paths;
  sc.seed = ctx.seed;
  sc.initial = InitialCondition::gaussian(start.mean, start.cov);
  sc.record_every = every;
  sc.threads = ctx.threads;
  const Ensemble ens = simulate(m, sc);
  std::vector<int> coarse_cells = cells;
  for (int& c : coarse_cells) c /= coarsen;
  const Grid coarse(m.box, coarse_cells, std::size_t{1} << 40);
  std::vector<double> l1(ens.records());
  for (std::size_t rec = 0; rec < ens.records(); ++rec) {
    const Vector emp = histogram_masses(ens, rec, coarse);
    const Vector ref = coarse_masses(rel.history[rec], coarsen);
    l1[rec] = (emp - ref).cwiseAbs().sum();
  }
  ctx.diagnostics["reflections"] = ens.reflections;
  ctx.file("comparison.csv", "comparison/1", [&](std::ostream& os) {
    os << "t,l1_density\n";
    for (std::size_t rec = 0; rec < ens.records(); ++rec) {
      os << format_double(ens.times[rec]) << ',' << format_double(l1[rec]) << '\n';
    }
  });
  ctx.check("max_l1_density", *std::max_element(l1.begin(), l1.end()), "<=", tol_l1);

  if (!ep_check) return;
  struct EpRun {
    double dt, mc, se, grid;
  };
  std::vector<EpRun> runs;
  for (int halving = 0; halving < 2; ++halving) {
    const double h = dt / static_cast<double>(1 << halving);
    const std::size_t k = steps << halving;
    const Relaxation ref = relax_aligned(op, u0, h, k, 1, true);
    SimConfig ec = sc;
    ec.dt = h;
    ec.T = static_cast<double>(k) * h;
    ec.n_paths = ep_paths;
    ec.record_every = 1;
    ec.stream_offset = paths + static_cast<std::uint64_t>(halving) * ep_paths;
    const Ensemble e = simulate(m, ec);
    const EpEstimate est = estimate_ep_pathwise(e, m, ref.history, k, ctx.threads);
    double grid = 0.0;
    for (std::size_t s = 0; s < k; ++s) grid += 0.5 * (ref.records[s].ep + ref.records[s + 1].ep);
    runs.push_back({h, est.estimate[0], est.std_error[0], grid / static_cast<double>(k)});
  }
  ctx.file("ep.csv", "ep/1", [&](std::ostream& os) {
    os << "dt,t_start,t_end,ep_pathwise,std_error,ep_grid\n";
    for (const EpRun& run : runs) {
      os << format_double(run.dt) << ',' << format_double(0.0) << ',' << format_double(sc.T)
         << ',' << format_double(run.mc) << ',' << format_double(run.se) << ','
         << format_double(run.grid) << '\n';
    }
  });
  const double bias = std::abs(runs[0].mc - runs[1].mc);
  const double bound = 3.0 * runs[1].se + bias;
  ctx.diagnostics["ep_dt_bias"] = bias;
  ctx.check("ep_discrepancy_over_bound", std::abs(runs[1].mc - runs[1].grid) / bound, "<=",
            tol_ep);
}

const std::map<std::string, std::function<void(Context&)>>& runners() {
  static const std::map<std::string, std::function<void(Context&)>> table = {
      {"stationarity", stationarity},
      {"thermo-balance", thermo_balance},
      {"fig1-reversal", fig1_reversal},
      {"ao-check", ao_check},
      {"perturbation-check", perturbation_check},
      {"ensemble-vs-grid", ensemble_vs_grid}};
  return table;
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_registry() {
  static const std::vector<ExperimentInfo> reg = build_registry();
  return reg;
}

const ExperimentInfo* find_experiment(const std::string& kind) {
  for (const ExperimentInfo& e : experiment_registry()) {
    if (e.kind == kind) return &e;
  }
  return nullptr;
}

bool RunResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const json& csv_schemas() {
  static const json schemas = {
      {"summary/1", {"experiment", "check", "value", "relation", "tolerance", "pass"}},
      {"density/1", {"i0..", "x0..", "u"}},
      {"ensemble/1", {"path_id", "step", "t", "x1.."}},
      {"thermo/1", {"t", "U", "S", "F", "ep", "hd"}},
      {"balance/1", {"t", "dF_dt", "ep", "dF_dt_plus_ep", "dS_dt", "dS_dt_minus_ep_plus_hd"}},
      {"residuals/1",
       {"cells", "h", "res_sup", "res_full", "res_conservative", "observed_order"}},
      {"moments/1", {"t", "axis", "mean", "variance"}},
      {"joint/1", {"bin_start", "bin_end", "p_forward", "p_reversed", "p_independent"}},
      {"ao_residuals/1",
       {"model", "orthogonality", "divergence", "max_condition", "res_coarse", "res_fine",
        "observed_order", "zero_a_current"}},
      {"perturbation/1",
       {"case", "phi0_orthogonality", "phi0_divergence", "phi1", "phi2", "label", "current",
        "current_divergence", "current_orthogonality"}},
      {"comparison/1", {"t", "l1_density"}},
      {"ep/1", {"dt", "t_start", "t_end", "ep_pathwise", "std_error", "ep_grid"}}};
  return schemas;
}

RunResult run_experiment(const Config& cfg, const RunOptions& options) {
  Resolver r(cfg);
  const std::string kind = r.required_text("experiment", "kind");
  const auto it = runners().find(kind);
  if (it == runners().end()) config_fail(r, "experiment", "kind", "unknown experiment '" + kind + "'");

  std::uint64_t seed;
  if (options.seed) {
    r.consume("experiment", "seed");
    r.set_resolved("experiment", "seed", *options.seed);
    seed = *options.seed;
  } else {
    seed = r.seed("experiment", "seed", 1);
  }
  std::string out;
  if (options.out_dir) {
    r.consume("experiment", "output");
    r.set_resolved("experiment", "output", *options.out_dir);
    out = *options.out_dir;
  } else {
    out = r.text("experiment", "output", "out");
  }
  const bool plots = r.flag("experiment", "plots", true);

  RunResult result;
  result.kind = kind;
  result.out_dir = out;
  Context ctx{r, fs::path(out), seed, options.threads, plots, result};
  it->second(ctx);

  ctx.file("summary.csv", "summary/1", [&](std::ostream& os) {
    os << "experiment,check,value,relation,tolerance,pass\n";
    for (const Check& c : result.checks) {
      os << kind << ',' << c.name << ',' << format_double(c.value) << ',' << c.relation << ','
         << format_double(c.tolerance) << ',' << (c.pass ? "true" : "false") << '\n';
    }
  });

  json schemas = json::object();
  json outputs = json::array();
  for (const Artifact& a : result.artifacts) {
    outputs.push_back({{"file", a.file}, {"schema", a.schema}});
    if (csv_schemas().contains(a.schema)) schemas[a.schema] = csv_schemas()[a.schema];
  }
  json checks = json::array();
  for (const Check& c : result.checks) {
    checks.push_back({{"name", c.name},
                      {"value", c.value},
                      {"relation", c.relation},
                      {"tolerance", c.tolerance},
                      {"pass", c.pass}});
  }
  result.manifest = {{"name", "orthoflux"},
                     {"version", kVersion},
                     {"experiment", kind},
                     {"seed", seed},
                     {"config", r.resolved()},
                     {"outputs", outputs},
                     {"csv_schemas", schemas},
                     {"checks", checks},
                     {"passed", result.passed()},
                     {"diagnostics", ctx.diagnostics}};
  fs::create_directories(out);
  std::ofstream mf(fs::path(out) / "manifest.json", std::ios::binary);
  if (!mf) throw Error("cannot write manifest.json in '" + out + "'");
  mf << result.manifest.dump(2) << '\n';
  return result;
}

}  // namespace orthoflux::runner
