// Copyright 2026 The cbf-laplace Authors
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

#include "cbf/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>

#include "cbf/stats.hpp"

namespace cbf {

double NoiseSpec::decay(int dim) const {
  return std::isnan(s) ? 0.5 * dim + 2.0 : s;
}

double NoiseSpec::eigenvalue(double k2, int dim) const {
  return q0 * std::pow(1.0 + k2, -decay(dim));
}

void NoiseSpec::validate(int dim) const {
  if (!(q0 >= 0.0)) throw DomainError("noise amplitude q0 must be nonnegative");
  if (!(n >= 1.0)) throw DomainError("noise scale n must be >= 1");
  if (!(decay(dim) > 0.5 * dim + 1.0))
    throw DomainError("noise decay must exceed d/2 + 1 for a finite Tr(Q1)");
}

namespace {

double multiplicity(const ModeTable& modes, std::size_t m) {
  const int d = modes.shape().dim;
  return m == modes.zero_index() ? d : d - 1;
}

}  // namespace

double NoiseSpec::trace_q(Shape shape) const {
  const ModeTable& modes = *ModeTable::get(shape);
  double sum = 0.0;
  for (std::size_t m = 0; m < modes.size(); ++m)
    sum += multiplicity(modes, m) * eigenvalue(modes.k2(m), shape.dim);
  return sum;
}

double NoiseSpec::trace_q1(Shape shape) const {
  const ModeTable& modes = *ModeTable::get(shape);
  double sum = 0.0;
  for (std::size_t m = 0; m < modes.size(); ++m)
    sum += multiplicity(modes, m) * modes.k2(m) * eigenvalue(modes.k2(m), shape.dim);
  return sum;
}

void NoiseSpec::apply_sqrt(SpectralField& u) const {
  const auto& modes = u.modes();
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const double root = std::sqrt(eigenvalue(modes.k2(m), u.dim()));
    for (int c = 0; c < u.dim(); ++c) u.at(m, c) *= root;
  }
}

SpectralField NoiseSpec::sqrt_applied(const SpectralField& u) const {
  SpectralField out = u;
  apply_sqrt(out);
  return out;
}

void TimeGrid::validate() const {
  if (steps < 1) throw ConfigurationError("time grid needs at least one step");
  if (!(T > t0)) throw ConfigurationError("time grid needs T > t0");
}

int TimeGrid::index_of(double t) const {
  const double pos = (t - t0) / dt();
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) > 1e-9 || nearest < 0 || nearest > steps)
    throw ConfigurationError("time is not a node of the time grid");
  return static_cast<int>(nearest);
}

namespace {

const std::vector<BasisDirection>& shared_basis(Shape shape) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<std::vector<BasisDirection>>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{shape.dim, shape.n}];
  if (!slot) slot = std::make_unique<std::vector<BasisDirection>>(solenoidal_basis(shape));
  return *slot;
}

const std::vector<BasisDirection>& cached_basis(Shape shape) {
  thread_local std::map<std::pair<int, int>, const std::vector<BasisDirection>*> local;
  auto& slot = local[{shape.dim, shape.n}];
  if (!slot) slot = &shared_basis(shape);
  return *slot;
}

// Coefficient scale of one basis direction: e_0 = a / (2pi)^(d/2) and
// e_k = a (exp(ikx) + exp(-ikx)) / sqrt(2 (2pi)^d), with i a for the sine part.
struct BasisScale {
  double zero;
  double pair;
};

BasisScale basis_scale(int dim) {
  const double volume = std::pow(kTwoPi, dim);
  return {1.0 / std::sqrt(volume), 1.0 / std::sqrt(2.0 * volume)};
}

template <class Draw>
SpectralField assemble(Shape shape, Draw&& draw) {
  SpectralField u(shape);
  const auto& basis = cached_basis(shape);
  const auto scale = basis_scale(shape.dim);
  const ModeTable& modes = u.modes();
  const std::size_t zero = modes.zero_index();
  for (std::size_t j = 0; j < basis.size(); ++j) {
    const auto& e = basis[j];
    const double z = draw(j);
    if (e.mode == zero) {
      for (int c = 0; c < shape.dim; ++c) u.at(zero, c) += z * scale.zero * e.polarization[c];
      continue;
    }
    const Complex unit = e.imaginary ? Complex(0.0, 1.0) : Complex(1.0, 0.0);
    const std::size_t mc = modes.conjugate(e.mode);
    for (int c = 0; c < shape.dim; ++c) {
      const Complex value = z * scale.pair * e.polarization[c] * unit;
      u.at(e.mode, c) += value;
      u.at(mc, c) += std::conj(value);
    }
  }
  return u;
}

}  // namespace

std::size_t basis_size(Shape shape) { return cached_basis(shape).size(); }

SpectralField from_basis_coordinates(Shape shape, std::span<const double> z) {
  if (z.size() != basis_size(shape))
    throw ConfigurationError("coordinate vector does not match the basis");
  return assemble(shape, [&](std::size_t j) { return z[j]; });
}

std::vector<double> basis_coordinates(const SpectralField& u) {
  const Shape shape = u.shape();
  const auto& basis = cached_basis(shape);
  const double volume = std::pow(kTwoPi, shape.dim);
  const ModeTable& modes = u.modes();
  std::vector<double> z(basis.size());
  for (std::size_t j = 0; j < basis.size(); ++j) {
    const auto& e = basis[j];
    Complex dot{};
    for (int c = 0; c < shape.dim; ++c) dot += e.polarization[c] * u.at(e.mode, c);
    if (e.mode == modes.zero_index())
      z[j] = std::sqrt(volume) * dot.real();
    else
      z[j] = std::sqrt(2.0 * volume) * (e.imaginary ? dot.imag() : dot.real());
  }
  return z;
}

SpectralField sample_cylindrical_increment(Shape shape, double dt, CounterRng& rng) {
  if (!(dt > 0.0)) throw DomainError("increment needs dt > 0");
  const double root = std::sqrt(dt);
  return assemble(shape, [&](std::size_t) { return root * rng.normal(); });
}

SpectralField sample_noise_increment(const NoiseSpec& noise, Shape shape,
                                     double dt, CounterRng& rng) {
  SpectralField w = sample_cylindrical_increment(shape, dt, rng);
  noise.apply_sqrt(w);
  w *= 1.0 / std::sqrt(noise.n);
  return w;
}

Integrator::Integrator(Shape shape, const PhysicalParams& params,
                       const ForcingSpec& forcing, double dt)
    : shape_(shape), params_(params), forcing_(forcing), dt_(dt),
      terms_(&nonlinear_terms_for(shape, params.r)), work_(shape) {
  if (!(dt > 0.0)) throw ConfigurationError("time step must be positive");
  const ModeTable& modes = *ModeTable::get(shape);
  factor_.resize(modes.size());
  for (std::size_t m = 0; m < modes.size(); ++m)
    factor_[m] = std::exp(-(params.mu * modes.k2(m) + params.alpha) * dt);
}

void Integrator::apply_factor(SpectralField& u) const {
  const int d = shape_.dim;
  for (std::size_t m = 0; m < factor_.size(); ++m)
    for (int c = 0; c < d; ++c) u.at(m, c) *= factor_[m];
}

void Integrator::advance(SpectralField& u, double t) {
  terms_->evaluate(u, params_.beta, work_, params_.convection_factor());
  forcing_.add_to(t, work_);
  u.axpy(dt_, work_);
  apply_factor(u);
  project_leray_inplace(u);
}

void check_state(const SpectralField& u, double t) {
  if (!u.all_finite()) throw NumericalBlowup("non-finite state", t);
  const double v = norm_v(u);
  if (!(v <= kBlowupThreshold)) throw NumericalBlowup("state V-norm above 1e6", t);
}

double sup_norm(const SpectralField& u) {
  auto& terms = nonlinear_terms_for(u.shape(), 2.0);
  std::vector<double> values;
  terms.values(u, values);
  const int d = u.dim();
  const std::size_t nodes = values.size() / d;
  double top = 0.0;
  for (std::size_t x = 0; x < nodes; ++x) {
    double mag2 = 0.0;
    for (int c = 0; c < d; ++c) mag2 += values[c * nodes + x] * values[c * nodes + x];
    top = std::max(top, mag2);
  }
  return std::sqrt(top);
}

double stable_dt(const SpectralField& y0, const PhysicalParams& params) {
  const double inf = std::numeric_limits<double>::infinity();
  const double v = norm_v(y0);
  const double first = v > 0.0 ? 0.5 / (v * v) : inf;
  const double amp = sup_norm(y0);
  const double growth = params.beta * std::pow(amp, params.r - 1.0);
  const double second = growth > 0.0 ? 0.1 / growth : inf;
  return std::min(first, second);
}

void check_stability(const SpectralField& y0, const PhysicalParams& params,
                     const TimeGrid& grid) {
  if (grid.dt() > stable_dt(y0, params))
    throw ConfigurationError("time step exceeds the stability bound for this initial state");
}

SpectralField step(const SpectralField& state, double t, double dt,
                   const PhysicalParams& params, const ForcingSpec& forcing,
                   const SpectralField* noise_increment) {
  params.validate(state.dim());
  Integrator integrator(state.shape(), params, forcing, dt);
  SpectralField next = state;
  integrator.advance(next, t);
  if (noise_increment) {
    require_same_shape(next, *noise_increment, "step");
    next += *noise_increment;
  }
  check_state(next, t + dt);
  return next;
}

Trajectory simulate(const SpectralField& y0, const PhysicalParams& params,
                    const ForcingSpec& forcing, const std::optional<NoiseSpec>& noise,
                    const TimeGrid& grid, std::uint64_t seed, std::uint64_t sample) {
  params.validate(y0.dim());
  grid.validate();
  if (noise) noise->validate(y0.dim());
  check_stability(y0, params, grid);
  check_state(y0, grid.t0);
  const bool noisy = noise && noise->active();
  Integrator integrator(y0.shape(), params, forcing, grid.dt());
  Trajectory traj;
  traj.times.reserve(grid.steps + 1);
  traj.fields.reserve(grid.steps + 1);
  traj.times.push_back(grid.t0);
  traj.fields.push_back(y0);
  SpectralField u = y0;
  for (int i = 0; i < grid.steps; ++i) {
    const double t = grid.time(i);
    integrator.advance(u, t);
    if (noisy) {
      CounterRng rng = noise_stream(seed, sample, i);
      u += sample_noise_increment(*noise, u.shape(), grid.dt(), rng);
    }
    check_state(u, grid.time(i + 1));
    traj.times.push_back(grid.time(i + 1));
    traj.fields.push_back(u);
  }
  return traj;
}

double energy_budget_residual(const Trajectory& traj, const PhysicalParams& params,
                              const ForcingSpec& forcing) {
  if (traj.size() < 2) throw ConfigurationError("energy budget needs two snapshots");
  const double r = params.r;
  double sum = 0.5 * inner(traj.final(), traj.final()) -
               0.5 * inner(traj.fields.front(), traj.fields.front());
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const SpectralField& y = traj.fields[i];
    const double dt = traj.times[i + 1] - traj.times[i];
    const double g = norm_grad(y);
    double rate = params.mu * g * g + params.alpha * inner(y, y) +
                  params.beta * std::pow(norm_lp(y, r + 1.0), r + 1.0);
    if (!forcing.is_zero()) rate -= inner(forcing.value(traj.times[i], y.shape()), y);
    sum += dt * rate;
  }
  return sum;
}

DependenceReport continuous_dependence_gap(const SpectralField& y1,
                                           const SpectralField& y2,
                                           const PhysicalParams& params,
                                           const ForcingSpec& forcing,
                                           const std::optional<NoiseSpec>& noise,
                                           const TimeGrid& grid, std::uint64_t seed) {
  require_same_shape(y1, y2, "continuous_dependence_gap");
  DependenceReport report;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (!params.convection) report.theory_rate = -params.alpha;
  else if (params.r > 3.0 && params.mu > 0.0 && params.beta > 0.0)
    report.theory_rate = params.rho() - params.alpha;
  else if (params.r == 3.0 && 2.0 * params.beta * params.mu >= 1.0)
    report.theory_rate = -params.alpha;
  else
    report.theory_rate = nan;

  const Trajectory a = simulate(y1, params, forcing, noise, grid, seed);
  const Trajectory b = simulate(y2, params, forcing, noise, grid, seed);
  const double initial = norm_h(y1 - y2);
  report.ratios.resize(a.size(), 0.0);
  if (initial == 0.0) return report;
  double st2 = 0.0, stl = 0.0;
  report.envelope_rate = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ratio = norm_h(a.fields[i] - b.fields[i]) / initial;
    report.ratios[i] = ratio;
    report.max_ratio = std::max(report.max_ratio, ratio);
    const double t = a.times[i] - grid.t0;
    if (t > 0.0 && ratio > 0.0) {
      const double l = std::log(ratio);
      st2 += t * t;
      stl += t * l;
      report.envelope_rate = std::max(report.envelope_rate, l / t);
    }
  }
  report.fitted_rate = st2 > 0.0 ? stl / st2 : 0.0;
  return report;
}

const char* to_string(MomentBranch branch) {
  switch (branch) {
    case MomentBranch::QuarterMax: return "quarter-max";
    case MomentBranch::RhoStar: return "rho-star";
    case MomentBranch::PlanarExemption: return "planar-exemption";
    case MomentBranch::None: return "none";
  }
  return "none";
}

MomentCondition check_moment_condition(const PhysicalParams& params, int dim) {
  MomentCondition out;
  const double mu = params.mu, alpha = params.alpha, beta = params.beta, r = params.r;
  out.quarter_threshold = 0.25 * std::max(1.0 / alpha, 1.0 / beta);
  out.quarter_max = mu >= out.quarter_threshold;
  if (r > 3.0) {
    const double e = (r - 3.0) / (r - 1.0);
    out.rho_star_threshold = std::pow(alpha, -e) *
                             std::pow((r - 3.0) / (2.0 * (r - 1.0)), e) *
                             std::pow(1.0 / (beta * (r - 1.0)), 2.0 / (r - 1.0));
  } else if (r == 3.0) {
    out.rho_star_threshold = 1.0 / (2.0 * beta);
  } else {
    out.rho_star_threshold = std::numeric_limits<double>::infinity();
  }
  out.rho_star = mu >= out.rho_star_threshold;
  if (out.quarter_max) {
    out.satisfied = true;
    out.branch = MomentBranch::QuarterMax;
  } else if (out.rho_star) {
    out.satisfied = true;
    out.branch = MomentBranch::RhoStar;
  }
  if (dim == 2) {
    out.note = "on the 2-torus (B(u), Au) = 0, so the condition is not needed";
    if (!out.satisfied) {
      out.satisfied = true;
      out.branch = MomentBranch::PlanarExemption;
    }
  } else if (!out.satisfied) {
    out.note = "neither mu >= max(1/alpha,1/beta)/4 nor the rho* branch holds";
  }
  return out;
}

double moment_c1_bound(const PhysicalParams& params, const NoiseSpec& noise,
                       Shape shape) {
  const double tr = noise.trace_q1(shape);
  if (tr == 0.0) return std::numeric_limits<double>::infinity();
  if (shape.dim == 2) return params.alpha / tr;
  const auto cond = check_moment_condition(params, shape.dim);
  double bound = -std::numeric_limits<double>::infinity();
  if (cond.rho_star) bound = std::max(bound, (params.alpha - params.rho_star()) / tr);
  if (cond.quarter_max) bound = std::max(bound, (params.alpha - 0.25 / params.mu) / tr);
  if (!cond.satisfied) throw DomainError("moment condition fails: " + cond.note);
  return bound;
}

MomentReport exponential_moment_statistic(const SpectralField& y0,
                                          const PhysicalParams& params,
                                          const ForcingSpec& forcing,
                                          const NoiseSpec& noise,
                                          const TimeGrid& grid, double c1,
                                          int samples,
                                          const std::vector<double>& n_list,
                                          std::uint64_t seed) {
  MomentReport report;
  report.condition = check_moment_condition(params, y0.dim());
  if (!report.condition.satisfied)
    throw DomainError(std::string("moment condition fails (branch ") +
                      to_string(report.condition.branch) + "): " + report.condition.note);
  report.c1 = c1;
  report.c1_bound = moment_c1_bound(params, noise, y0.shape());
  if (!(c1 > 0.0) || !(c1 < report.c1_bound))
    throw DomainError("c1 must lie in (0, c1 bound)");
  if (samples < 1) throw ConfigurationError("need at least one sample");

  for (std::size_t j = 0; j < n_list.size(); ++j) {
    NoiseSpec scaled = noise;
    scaled.n = n_list[j];
    const std::uint64_t run_seed = CounterRng::mix(seed + 0x9e3779b97f4a7c15ULL * (j + 1));
    std::vector<double> exponents(samples), sup_v2(samples), dissipation(samples);
    std::exception_ptr failure;
    std::mutex failure_mutex;
#pragma omp parallel for schedule(static)
    for (int m = 0; m < samples; ++m) {
      try {
        const Trajectory traj = simulate(y0, params, forcing, scaled, grid, run_seed, m);
        double top = 0.0, budget = 0.0;
        for (std::size_t i = 0; i < traj.size(); ++i) {
          const double v = norm_v(traj.fields[i]);
          top = std::max(top, v * v);
          if (i + 1 < traj.size()) {
            const double g = norm_grad(traj.fields[i]);
            const double lr = norm_lp(traj.fields[i], params.r + 1.0);
            budget += grid.dt() * (params.mu * g * g +
                                   params.beta * std::pow(lr, params.r + 1.0));
          }
        }
        exponents[m] = scaled.n * c1 * top;
        sup_v2[m] = top;
        dissipation[m] = budget;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    MomentRow row;
    row.n = scaled.n;
    row.log_statistic = log_mean_exp(exponents);
    row.per_n = row.log_statistic / scaled.n;
    for (int m = 0; m < samples; ++m) {
      row.mean_sup_v2 += sup_v2[m] / samples;
      row.mean_dissipation += dissipation[m] / samples;
    }
    report.rows.push_back(row);
  }
  return report;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj, double r) {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot open " + path);
  out.precision(17);
  out << "t,norm_h,norm_v,norm_lr1\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& u = traj.fields[i];
    out << traj.times[i] << ',' << norm_h(u) << ',' << norm_v(u) << ','
        << norm_lp(u, r + 1.0) << '\n';
  }
}

}  // namespace cbf
