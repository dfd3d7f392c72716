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
#include <string>
#include <utility>
#include <vector>

#include "cbf/control.hpp"
#include "cbf/observable.hpp"
#include "cbf/simulator.hpp"
#include "cbf/stats.hpp"

namespace cbf {

/// Monte Carlo estimate of (1/n) log E exp(-n g(Y_n(t))).
struct LaplaceEstimate {
  double value = 0.0;
  double n = 1.0;
  int samples = 0;
  double t = 0.0;
  double ci_half_width = 0.0;   // percentile bootstrap, 95%
  double ess = 0.0;             // effective sample size of the exponents
  bool tilted = false;
  double mean_observable = 0.0; // plain sample mean of the summed g values
  std::string observable_id;
  std::uint64_t seed = 0;
};

struct EstimatorOptions {
  int bootstrap = 200;
  bool parallel = true;
};

/// Samples use noise streams (seed, sample, step) and noise.n as the scale.
/// With a tilt, the drift gains Q^(1/2) u(t) and each sample carries the
/// weight exp(-sqrt(n) sum (u_i, dW_i) - (n/2) sum ||u_i||^2 dt).
LaplaceEstimate estimate_laplace(const SpectralField& y0, const Observable& g,
                                 double t, int samples, const PhysicalParams& params,
                                 const ForcingSpec& forcing, const NoiseSpec& noise,
                                 const TimeGrid& grid, std::uint64_t seed,
                                 const ControlPath* tilt = nullptr,
                                 const EstimatorOptions& opt = {});

/// (1/n) log E exp(-n sum_j g_j(Y_n(t_j))) for strictly increasing grid
/// times, simulated once over the full horizon.
LaplaceEstimate estimate_multi_time(const SpectralField& y0,
                                    const std::vector<std::pair<double, Observable>>& terms,
                                    int samples, const PhysicalParams& params,
                                    const ForcingSpec& forcing, const NoiseSpec& noise,
                                    const TimeGrid& grid, std::uint64_t seed,
                                    const ControlPath* tilt = nullptr,
                                    const EstimatorOptions& opt = {});

namespace reference {

/// Straightforward serial estimator built on simulate() and step(); kept as
/// the oracle for the parallel kernel.
LaplaceEstimate estimate_laplace_serial(const SpectralField& y0, const Observable& g,
                                        double t, int samples,
                                        const PhysicalParams& params,
                                        const ForcingSpec& forcing,
                                        const NoiseSpec& noise, const TimeGrid& grid,
                                        std::uint64_t seed,
                                        const ControlPath* tilt = nullptr);

}  // namespace reference

}  // namespace cbf
