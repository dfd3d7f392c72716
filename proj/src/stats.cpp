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

#include "cbf/stats.hpp"

#include <algorithm>
#include <cmath>

#include "cbf/field.hpp"
#include "cbf/rng.hpp"

namespace cbf {

double log_mean_exp(std::span<const double> values) {
  if (values.empty()) throw DomainError("log_mean_exp of an empty list");
  double top = values[0];
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("log_mean_exp of a non-finite entry");
    top = std::max(top, v);
  }
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum / static_cast<double>(values.size()));
}

double effective_sample_size(std::span<const double> log_weights) {
  if (log_weights.empty()) return 0.0;
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  double s1 = 0.0, s2 = 0.0;
  for (double v : log_weights) {
    const double w = std::exp(v - top);
    s1 += w;
    s2 += w * w;
  }
  return s1 * s1 / s2;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw DomainError("fit_line needs two or more matched points");
  const double m = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw DomainError("fit_line with degenerate abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

double bootstrap_half_width(std::span<const double> exponents, double n,
                            int resamples, std::uint64_t seed) {
  const std::size_t m = exponents.size();
  if (m == 0) throw DomainError("bootstrap of an empty sample");
  CounterRng rng(seed, kBootstrapStream);
  std::vector<double> draw(m), stats(resamples);
  for (int b = 0; b < resamples; ++b) {
    for (std::size_t i = 0; i < m; ++i) draw[i] = exponents[rng.below(m)];
    stats[b] = log_mean_exp(draw) / n;
  }
  return 0.5 * (quantile(stats, 0.975) - quantile(stats, 0.025));
}

}  // namespace cbf
