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

#include "cbf/control.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <mutex>

namespace cbf {

ControlPath ControlPath::zeros(Shape shape, const TimeGrid& grid) {
  grid.validate();
  ControlPath path;
  path.grid = grid;
  path.slots.assign(grid.steps, SpectralField(shape));
  return path;
}

double ControlPath::energy(int begin, int end) const {
  double sum = 0.0;
  for (int i = begin; i < end; ++i) sum += cbf::inner(slots[i], slots[i]);
  return 0.5 * grid.dt() * sum;
}

double ControlPath::inner(const ControlPath& other) const {
  if (!(grid == other.grid)) throw ConfigurationError("control grids differ");
  double sum = 0.0;
  for (int i = 0; i < size(); ++i) sum += cbf::inner(slots[i], other.slots[i]);
  return grid.dt() * sum;
}

ControlPath& ControlPath::axpy(double a, const ControlPath& x) {
  if (!(grid == x.grid)) throw ConfigurationError("control grids differ");
  for (int i = 0; i < size(); ++i) slots[i].axpy(a, x.slots[i]);
  return *this;
}

ControlPath ControlPath::tail(int begin) const {
  if (begin < 0 || begin >= size()) throw ConfigurationError("tail start outside the grid");
  ControlPath out;
  out.grid = TimeGrid{grid.time(begin), grid.T, grid.steps - begin};
  out.slots.assign(slots.begin() + begin, slots.end());
  return out;
}

namespace {

void check_control(const SpectralField& y0, const ControlPath& control) {
  control.grid.validate();
  if (control.size() != control.grid.steps)
    throw ConfigurationError("control has the wrong number of slots");
  for (const auto& s : control.slots) require_same_shape(y0, s, "control slot");
}

// Forward sweep returning every state Y_0..Y_M.
std::vector<SpectralField> forward_states(const SpectralField& y0,
                                          const ControlPath& control,
                                          const PhysicalParams& params,
                                          const ForcingSpec& forcing,
                                          const NoiseSpec& noise) {
  const TimeGrid& grid = control.grid;
  Integrator integrator(y0.shape(), params, forcing, grid.dt());
  std::vector<SpectralField> states;
  states.reserve(grid.steps + 1);
  states.push_back(y0);
  SpectralField u = y0;
  SpectralField push(y0.shape());
  for (int i = 0; i < grid.steps; ++i) {
    integrator.advance(u, grid.time(i));
    push = control.slots[i];
    noise.apply_sqrt(push);
    u.axpy(grid.dt(), push);
    check_state(u, grid.time(i + 1));
    states.push_back(u);
  }
  return states;
}

}  // namespace

Trajectory solve_controlled(const SpectralField& y0, const ControlPath& control,
                            const PhysicalParams& params, const ForcingSpec& forcing,
                            const NoiseSpec& noise) {
  params.validate(y0.dim());
  check_control(y0, control);
  check_stability(y0, params, control.grid);
  Trajectory traj;
  traj.fields = forward_states(y0, control, params, forcing, noise);
  for (int i = 0; i <= control.grid.steps; ++i) traj.times.push_back(control.grid.time(i));
  return traj;
}

double control_cost(const SpectralField& y0, const ControlPath& control,
                    const Observable& g, const PhysicalParams& params,
                    const ForcingSpec& forcing, const NoiseSpec& noise) {
  check_control(y0, control);
  try {
    const auto states = forward_states(y0, control, params, forcing, noise);
    return control.energy() + g.value(states.back());
  } catch (const NumericalBlowup&) {
    return std::numeric_limits<double>::infinity();
  }
}

CostGradient cost_and_gradient(const SpectralField& y0, const ControlPath& control,
                               const Observable& g, const PhysicalParams& params,
                               const ForcingSpec& forcing, const NoiseSpec& noise) {
  params.validate(y0.dim());
  check_control(y0, control);
  const TimeGrid& grid = control.grid;
  const double dt = grid.dt();
  const auto states = forward_states(y0, control, params, forcing, noise);
  CostGradient out;
  out.cost = control.energy() + g.value(states.back());
  out.gradient = ControlPath::zeros(y0.shape(), grid);

  Integrator integrator(y0.shape(), params, forcing, dt);
  NonlinearTerms& terms = integrator.terms();
  SpectralField lambda = project_leray(g.gradient(states.back()));
  SpectralField w(y0.shape()), adj(y0.shape());
  for (int i = grid.steps - 1; i >= 0; --i) {
    SpectralField& slot = out.gradient.slots[i];
    slot = lambda;
    noise.apply_sqrt(slot);
    slot *= dt;
    slot.axpy(dt, control.slots[i]);
    w = lambda;
    integrator.apply_factor(w);
    terms.adjoint(states[i], w, params.beta, adj, params.convection_factor());
    lambda = w;
    lambda.axpy(dt, adj);
  }
  return out;
}

double gradient_norm(const ControlPath& gradient) {
  double sum = 0.0;
  for (const auto& s : gradient.slots) sum += inner(s, s);
  return std::sqrt(sum / gradient.grid.dt());
}

namespace {

struct Descent {
  double V = 0.0;
  ControlPath control;
  std::vector<IterationRecord> trace;
  bool converged = false;
  double grad_norm = 0.0;
};

Descent descend(const SpectralField& y0, ControlPath control, const Observable& g,
                const PhysicalParams& params, const ForcingSpec& forcing,
                const NoiseSpec& noise, const OptimizerOptions& opt) {
  Descent out;
  const double dt = control.grid.dt();
  CostGradient cg = cost_and_gradient(y0, control, g, params, forcing, noise);
  double gnorm = gradient_norm(cg.gradient);
  const double g0 = gnorm;
  out.trace.push_back({cg.cost, gnorm, 0.0});
  for (int it = 0; it < opt.max_iters; ++it) {
    if (gnorm <= opt.grad_tol * g0 || gnorm <= 1e-14) {
      out.converged = true;
      break;
    }
    // Direction -G/dt is the steepest descent in the L^2(t0,T;H) metric.
    const double slope = -gnorm * gnorm;
    double step = opt.initial_step;
    bool accepted = false;
    ControlPath trial = control;
    for (int b = 0; b < opt.max_backtracks; ++b) {
      trial = control;
      trial.axpy(-step / dt, cg.gradient);
      const double cost = control_cost(y0, trial, g, params, forcing, noise);
      if (cost <= cg.cost + opt.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= opt.shrink;
    }
    if (!accepted) break;
    control = std::move(trial);
    cg = cost_and_gradient(y0, control, g, params, forcing, noise);
    gnorm = gradient_norm(cg.gradient);
    out.trace.push_back({cg.cost, gnorm, step});
  }
  if (!out.converged && (gnorm <= opt.grad_tol * g0 || gnorm <= 1e-14)) out.converged = true;
  out.V = cg.cost;
  out.control = std::move(control);
  out.grad_norm = gnorm;
  return out;
}

ControlPath random_control(Shape shape, const TimeGrid& grid, std::uint64_t seed,
                           int restart, double amplitude) {
  ControlPath path = ControlPath::zeros(shape, grid);
  CounterRng rng(seed, kRestartStream, static_cast<std::uint64_t>(restart));
  for (auto& slot : path.slots) slot = random_divergence_free(rng.next(), 2.0, amplitude, shape);
  return path;
}

}  // namespace

ValueResult minimize_value(const SpectralField& y0, const Observable& g,
                           const PhysicalParams& params, const ForcingSpec& forcing,
                           const NoiseSpec& noise, const TimeGrid& grid,
                           const OptimizerOptions& opt) {
  params.validate(y0.dim());
  grid.validate();
  if (!(opt.grad_tol > 0.0 && opt.initial_step > 0.0 && opt.shrink > 0.0 &&
        opt.shrink < 1.0 && opt.armijo > 0.0 && opt.armijo < 1.0))
    throw ConfigurationError("optimizer tolerances must be positive");
  check_stability(y0, params, grid);
  const int starts = 1 + std::max(0, opt.restarts);
  std::vector<Descent> runs(starts);
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic) if (opt.parallel)
  for (int k = 0; k < starts; ++k) {
    try {
      ControlPath init = k == 0 ? ControlPath::zeros(y0.shape(), grid)
                                : random_control(y0.shape(), grid, opt.seed, k,
                                                 opt.restart_amplitude);
      runs[k] = descend(y0, std::move(init), g, params, forcing, noise, opt);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  ValueResult result;
  result.zero_control_cost = runs[0].trace.front().cost;
  int best = 0;
  for (int k = 0; k < starts; ++k) {
    result.restarts.push_back({k, runs[k].V, static_cast<int>(runs[k].trace.size()),
                               runs[k].grad_norm, runs[k].converged});
    if (runs[k].V < runs[best].V) best = k;
  }
  Descent& top = runs[best];
  result.V = top.V;
  result.control = std::move(top.control);
  result.trace = std::move(top.trace);
  result.converged = top.converged;
  result.iterations = static_cast<int>(result.trace.size());
  result.grad_norm = top.grad_norm;
  result.restart_id = best;
  result.admissible = result.control.admissible(g);
  return result;
}

DppReport dpp_residual(const SpectralField& y0, const Observable& g, double eta,
                       const PhysicalParams& params, const ForcingSpec& forcing,
                       const NoiseSpec& noise, const TimeGrid& grid,
                       const OptimizerOptions& opt) {
  const int split = grid.index_of(eta);
  DppReport report;
  const ValueResult full = minimize_value(y0, g, params, forcing, noise, grid, opt);
  report.value = full.V;
  if (split == 0) {
    report.first_leg = 0.0;
    report.tail_value = minimize_value(y0, g, params, forcing, noise, grid, opt).V;
  } else {
    const auto states = forward_states(y0, full.control, params, forcing, noise);
    report.first_leg = full.control.energy(0, split);
    if (split == grid.steps) {
      report.tail_value = g.value(states.back());
    } else {
      const TimeGrid tail{grid.time(split), grid.T, grid.steps - split};
      report.tail_value =
          minimize_value(states[split], g, params, forcing, noise, tail, opt).V;
    }
  }
  report.residual = std::abs(report.value - (report.first_leg + report.tail_value));
  return report;
}

}  // namespace cbf
