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

#pragma once

#include <cstdint>
#include <vector>

#include "cbf/observable.hpp"
#include "cbf/simulator.hpp"

namespace cbf {

/// Piecewise-constant control, one field per step of `grid`.
struct ControlPath {
  TimeGrid grid;
  std::vector<SpectralField> slots;

  static ControlPath zeros(Shape shape, const TimeGrid& grid);
  Shape shape() const { return slots.front().shape(); }
  int size() const { return static_cast<int>(slots.size()); }

  /// (1/2) dt sum ||u_i||^2 over slots [begin, end).
  double energy(int begin, int end) const;
  double energy() const { return energy(0, size()); }
  /// dt sum (u_i, v_i)
  double inner(const ControlPath& other) const;
  ControlPath& axpy(double a, const ControlPath& x);
  /// Slots [begin, steps) on the grid (time(begin), T).
  ControlPath tail(int begin) const;
  /// Energy within the cap 2 sup|g| that bounds the useful controls.
  bool admissible(const Observable& g) const { return energy() <= 2.0 * g.sup_norm(); }
};

/// dY = drift(Y, t) dt + Q^(1/2) u(t) dt with the simulator's scheme; the
/// control enters after the exponential map.
Trajectory solve_controlled(const SpectralField& y0, const ControlPath& control,
                            const PhysicalParams& params, const ForcingSpec& forcing,
                            const NoiseSpec& noise);

/// (1/2) dt sum ||u_i||^2 + g(Y(T)); +inf if the forward run blows up.
double control_cost(const SpectralField& y0, const ControlPath& control,
                    const Observable& g, const PhysicalParams& params,
                    const ForcingSpec& forcing, const NoiseSpec& noise);

struct CostGradient {
  double cost = 0.0;
  ControlPath gradient;  // slot i: derivative of the cost in the H pairing
};

/// Exact gradient of the time-discrete cost by a backward adjoint sweep:
///   lambda_M = grad g(Y_M),  lambda_i = w + dt DN[Y_i]^* w,  w = E lambda_{i+1},
///   slot_i = dt u_i + dt Q^(1/2) lambda_{i+1}.
CostGradient cost_and_gradient(const SpectralField& y0, const ControlPath& control,
                               const Observable& g, const PhysicalParams& params,
                               const ForcingSpec& forcing, const NoiseSpec& noise);

struct OptimizerOptions {
  int max_iters = 200;
  double grad_tol = 1e-6;  // relative to the initial gradient norm
  double initial_step = 1.0;
  double shrink = 0.5;
  double armijo = 1e-4;
  int max_backtracks = 30;
  int restarts = 4;
  double restart_amplitude = 0.1;
  std::uint64_t seed = 0;
  bool parallel = true;
};

struct IterationRecord {
  double cost = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
};

struct RestartSummary {
  int restart_id = 0;
  double V = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

struct ValueResult {
  double V = 0.0;
  ControlPath control;
  std::vector<IterationRecord> trace;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  int restart_id = 0;
  bool admissible = true;
  double zero_control_cost = 0.0;
  std::vector<RestartSummary> restarts;
};

/// L^2-in-time norm of a gradient path: sqrt(sum ||G_i||^2 / dt).
double gradient_norm(const ControlPath& gradient);

/// Steepest descent with Armijo backtracking from the zero control plus
/// seeded random restarts; returns the lowest cost found.
ValueResult minimize_value(const SpectralField& y0, const Observable& g,
                           const PhysicalParams& params, const ForcingSpec& forcing,
                           const NoiseSpec& noise, const TimeGrid& grid,
                           const OptimizerOptions& opt = {});

struct DppReport {
  double value = 0.0;       // V(t0, y0)
  double first_leg = 0.0;   // (1/2) int_{t0}^{eta} ||u*||^2
  double tail_value = 0.0;  // V(eta, Y*(eta))
  double residual = 0.0;
};

/// Splits the horizon at the grid node eta and re-optimizes the tail from
/// the endpoint of the jointly optimal first leg.
DppReport dpp_residual(const SpectralField& y0, const Observable& g, double eta,
                       const PhysicalParams& params, const ForcingSpec& forcing,
                       const NoiseSpec& noise, const TimeGrid& grid,
                       const OptimizerOptions& opt = {});

}  // namespace cbf
