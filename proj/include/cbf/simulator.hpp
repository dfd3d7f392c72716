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
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cbf/field.hpp"
#include "cbf/operators.hpp"
#include "cbf/rng.hpp"

namespace cbf {

/// Diagonal covariance q_k = q0 (1+|k|^2)^(-s), the same on every solenoidal
/// direction of mode k, with small-noise scale n.
struct NoiseSpec {
  double q0 = 0.0;
  /// Decay exponent; NaN selects the default d/2 + 2.
  double s = std::numeric_limits<double>::quiet_NaN();
  double n = 1.0;

  double decay(int dim) const;
  double eigenvalue(double k2, int dim) const;
  /// Throws DomainError unless q0 >= 0, n >= 1 and s > d/2 + 1.
  void validate(int dim) const;
  bool active() const { return q0 > 0.0; }

  /// Sums of d' q_k and d' |k|^2 q_k over retained modes, d' the number of
  /// solenoidal directions of mode k.
  double trace_q(Shape shape) const;
  double trace_q1(Shape shape) const;

  /// coeff(k) -> sqrt(q_k) coeff(k)
  void apply_sqrt(SpectralField& u) const;
  SpectralField sqrt_applied(const SpectralField& u) const;
};

struct TimeGrid {
  double t0 = 0.0;
  double T = 1.0;
  int steps = 1;

  double dt() const { return (T - t0) / steps; }
  double time(int i) const { return t0 + i * dt(); }
  void validate() const;
  /// Step index whose time equals t up to 1e-9 dt; ConfigurationError otherwise.
  int index_of(double t) const;
  bool operator==(const TimeGrid&) const = default;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SpectralField> fields;

  std::size_t size() const { return times.size(); }
  const SpectralField& final() const { return fields.back(); }
};

// Coordinates in the real H-orthonormal solenoidal basis of the box.
std::size_t basis_size(Shape shape);
SpectralField from_basis_coordinates(Shape shape, std::span<const double> z);
std::vector<double> basis_coordinates(const SpectralField& u);

/// Cylindrical increment sum_j dW_j e_j with dW_j ~ N(0, dt) over the
/// orthonormal solenoidal basis.
SpectralField sample_cylindrical_increment(Shape shape, double dt, CounterRng& rng);

/// (1/sqrt n) Q^(1/2) applied to a cylindrical increment: variance
/// q_k dt / n per orthonormal direction.
SpectralField sample_noise_increment(const NoiseSpec& noise, Shape shape,
                                     double dt, CounterRng& rng);

/// Noise stream for (seed, sample, step).
inline CounterRng noise_stream(std::uint64_t seed, std::uint64_t sample,
                               std::uint64_t step) {
  return CounterRng(seed, sample, step);
}

/// Integrating-factor Euler map for fixed (params, forcing, dt):
///   u <- P[E (u + dt (-B(u) - beta C(u) + f(t)))],  E = exp(-(mu|k|^2+alpha) dt).
class Integrator {
 public:
  Integrator(Shape shape, const PhysicalParams& params, const ForcingSpec& forcing,
             double dt);

  void advance(SpectralField& u, double t);
  /// Multiplies by E in place.
  void apply_factor(SpectralField& u) const;
  const std::vector<double>& factor() const { return factor_; }
  double dt() const { return dt_; }
  NonlinearTerms& terms() { return *terms_; }
  const PhysicalParams& params() const { return params_; }
  const ForcingSpec& forcing() const { return forcing_; }

 private:
  Shape shape_;
  PhysicalParams params_;
  ForcingSpec forcing_;
  double dt_;
  std::vector<double> factor_;
  NonlinearTerms* terms_;
  SpectralField work_;
};

inline constexpr double kBlowupThreshold = 1e6;

/// Throws NumericalBlowup(t) if u has non-finite entries or ||u||_V > 1e6.
void check_state(const SpectralField& u, double t);

/// Largest |u(x)| over the dealiased grid nodes.
double sup_norm(const SpectralField& u);

/// dt <= min(0.5 / ||y0||_V^2, 0.1 / (beta amp^(r-1))), amp the sup norm of y0.
double stable_dt(const SpectralField& y0, const PhysicalParams& params);
/// ConfigurationError when grid.dt() exceeds stable_dt.
void check_stability(const SpectralField& y0, const PhysicalParams& params,
                     const TimeGrid& grid);

/// One step from t to t + dt; `noise_increment` is added after the
/// exponential map.
SpectralField step(const SpectralField& state, double t, double dt,
                   const PhysicalParams& params, const ForcingSpec& forcing,
                   const SpectralField* noise_increment = nullptr);

/// Full trajectory with steps+1 snapshots. Noise, when present, uses the
/// streams (seed, sample, i).
Trajectory simulate(const SpectralField& y0, const PhysicalParams& params,
                    const ForcingSpec& forcing, const std::optional<NoiseSpec>& noise,
                    const TimeGrid& grid, std::uint64_t seed,
                    std::uint64_t sample = 0);

/// 1/2 ||Y(T)||^2 - 1/2 ||y0||^2 + int (mu ||grad Y||^2 + alpha ||Y||^2
///   + beta ||Y||_{r+1}^{r+1} - (f, Y)) dt, left-point rule over the snapshots.
double energy_budget_residual(const Trajectory& traj, const PhysicalParams& params,
                              const ForcingSpec& forcing);

struct DependenceReport {
  double max_ratio = 0.0;          // max_t ||Y1-Y2|| / ||y1-y2||
  double fitted_rate = 0.0;        // least-squares slope of log ratio vs t
  double envelope_rate = 0.0;      // max_{t>0} log(ratio)/t
  double theory_rate = 0.0;        // rho - alpha from the monotonicity estimate
  std::vector<double> ratios;      // per time node
};

/// Two runs driven by the same noise path.
DependenceReport continuous_dependence_gap(const SpectralField& y1,
                                           const SpectralField& y2,
                                           const PhysicalParams& params,
                                           const ForcingSpec& forcing,
                                           const std::optional<NoiseSpec>& noise,
                                           const TimeGrid& grid, std::uint64_t seed);

enum class MomentBranch { QuarterMax, RhoStar, PlanarExemption, None };
const char* to_string(MomentBranch branch);

struct MomentCondition {
  bool satisfied = false;
  MomentBranch branch = MomentBranch::None;
  bool quarter_max = false;           // mu >= max(1/alpha, 1/beta) / 4
  bool rho_star = false;              // alpha >= rho*
  double quarter_threshold = 0.0;
  double rho_star_threshold = 0.0;    // smallest mu for the rho* branch
  std::string note;
};

MomentCondition check_moment_condition(const PhysicalParams& params, int dim);

/// Largest admissible c1 for the statistic: (alpha - rho*)/Tr(Q1) or
/// (alpha - 1/(4 mu))/Tr(Q1) by branch, alpha/Tr(Q1) under the planar
/// exemption; +inf when Tr(Q1) = 0.
double moment_c1_bound(const PhysicalParams& params, const NoiseSpec& noise,
                       Shape shape);

struct MomentRow {
  double n = 1.0;
  double log_statistic = 0.0;   // log of the mean of sup_t exp(n c1 ||Y||_V^2)
  double per_n = 0.0;           // log_statistic / n
  double mean_sup_v2 = 0.0;     // E sup_t ||Y||_V^2
  double mean_dissipation = 0.0;  // E int (mu ||grad Y||^2 + beta ||Y||_{r+1}^{r+1}) dt
};

struct MomentReport {
  MomentCondition condition;
  double c1 = 0.0;
  double c1_bound = 0.0;
  std::vector<MomentRow> rows;
};

/// Monte Carlo probe of the exponential moment bound for each n in n_list.
MomentReport exponential_moment_statistic(const SpectralField& y0,
                                          const PhysicalParams& params,
                                          const ForcingSpec& forcing,
                                          const NoiseSpec& noise,
                                          const TimeGrid& grid, double c1,
                                          int samples,
                                          const std::vector<double>& n_list,
                                          std::uint64_t seed);

/// CSV rows t,H,V,L^{r+1} for each snapshot.
void write_trajectory_csv(const std::string& path, const Trajectory& traj, double r);

}  // namespace cbf
