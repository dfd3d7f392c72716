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
#include <span>
#include <vector>

namespace cbf {

/// log((1/M) sum_i exp(v_i)) with a max shift. Throws DomainError on an
/// empty list or non-finite entries.
double log_mean_exp(std::span<const double> values);

/// (sum w)^2 / sum w^2 for w_i = exp(v_i - max v).
double effective_sample_size(std::span<const double> log_weights);

/// Linear-interpolation quantile of an unsorted sample, q in [0,1].
double quantile(std::vector<double> values, double q);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
/// Ordinary least squares y ~ intercept + slope x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Percentile bootstrap of (1/n) log_mean_exp over `resamples` index draws;
/// returns half the width of the central 95% interval.
double bootstrap_half_width(std::span<const double> exponents, double n,
                            int resamples, std::uint64_t seed);

// Elementary logarithm bounds used when linearizing moment reports:
// log(1+x) <= x for x >= 0 and log(1-x) >= -2x for 0 < x <= 1/2.
inline double log1p_upper(double x) { return x; }
inline double log1m_lower(double x) { return -2.0 * x; }

}  // namespace cbf
