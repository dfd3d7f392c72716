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

#include "cbf/laplace.hpp"

#include <cmath>
#include <exception>
#include <mutex>

namespace cbf {

namespace {

struct Term {
  int index;
  const Observable* g;
};

struct PreparedTilt {
  std::vector<SpectralField> push;  // dt Q^(1/2) u_i
  std::vector<double> energy;       // (n/2) dt ||u_i||^2
};

PreparedTilt prepare_tilt(const ControlPath& tilt, const NoiseSpec& noise) {
  PreparedTilt out;
  const double dt = tilt.grid.dt();
  for (const auto& slot : tilt.slots) {
    SpectralField p = noise.sqrt_applied(slot);
    p *= dt;
    out.push.push_back(std::move(p));
    out.energy.push_back(0.5 * noise.n * dt * inner(slot, slot));
  }
  return out;
}

LaplaceEstimate run_estimator(const SpectralField& y0, std::vector<Term> terms,
                              int samples, const PhysicalParams& params,
                              const ForcingSpec& forcing, const NoiseSpec& noise,
                              const TimeGrid& grid, std::uint64_t seed,
                              const ControlPath* tilt, const EstimatorOptions& opt) {
  params.validate(y0.dim());
  grid.validate();
  noise.validate(y0.dim());
  if (samples < 2) throw ConfigurationError("estimator needs at least two samples");
  if (tilt) {
    if (!(tilt->grid == grid) || tilt->size() != grid.steps)
      throw ConfigurationError("tilt control is not aligned with the time grid");
    for (const auto& s : tilt->slots) require_same_shape(y0, s, "tilt");
  }
  check_stability(y0, params, grid);
  const int last = terms.back().index;
  const bool noisy = noise.active();
  const PreparedTilt prepared = tilt ? prepare_tilt(*tilt, noise) : PreparedTilt{};
  const double root_n = std::sqrt(noise.n);
  const double scale = 1.0 / root_n;
  const double dt = grid.dt();

  std::vector<double> exponents(samples), gsum(samples);
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(static) if (opt.parallel)
  for (int m = 0; m < samples; ++m) {
    try {
      Integrator integrator(y0.shape(), params, forcing, dt);
      SpectralField u = y0;
      double log_weight = 0.0;
      double total = 0.0;
      std::size_t next = 0;
      while (next < terms.size() && terms[next].index == 0) total += terms[next++].g->value(u);
      for (int i = 0; i < last; ++i) {
        integrator.advance(u, grid.time(i));
        if (tilt) u += prepared.push[i];
        if (noisy) {
          CounterRng rng = noise_stream(seed, static_cast<std::uint64_t>(m), i);
          SpectralField w = sample_cylindrical_increment(u.shape(), dt, rng);
          if (tilt)
            log_weight += -root_n * inner(tilt->slots[i], w) - prepared.energy[i];
          noise.apply_sqrt(w);
          u.axpy(scale, w);
        }
        check_state(u, grid.time(i + 1));
        while (next < terms.size() && terms[next].index == i + 1)
          total += terms[next++].g->value(u);
      }
      exponents[m] = -noise.n * total + log_weight;
      gsum[m] = total;
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  LaplaceEstimate est;
  est.n = noise.n;
  est.samples = samples;
  est.t = grid.time(last);
  est.tilted = tilt != nullptr;
  est.seed = seed;
  est.value = log_mean_exp(exponents) / noise.n;
  est.ci_half_width = bootstrap_half_width(exponents, noise.n, opt.bootstrap, seed);
  est.ess = effective_sample_size(exponents);
  double mean = 0.0;
  for (double v : gsum) mean += v;
  est.mean_observable = mean / samples;
  std::string id;
  for (const auto& term : terms) id += (id.empty() ? "" : "+") + term.g->id();
  est.observable_id = id;
  return est;
}

}  // namespace

LaplaceEstimate estimate_laplace(const SpectralField& y0, const Observable& g,
                                 double t, int samples, const PhysicalParams& params,
                                 const ForcingSpec& forcing, const NoiseSpec& noise,
                                 const TimeGrid& grid, std::uint64_t seed,
                                 const ControlPath* tilt, const EstimatorOptions& opt) {
  grid.validate();
  return run_estimator(y0, {{grid.index_of(t), &g}}, samples, params, forcing, noise,
                       grid, seed, tilt, opt);
}

LaplaceEstimate estimate_multi_time(const SpectralField& y0,
                                    const std::vector<std::pair<double, Observable>>& terms,
                                    int samples, const PhysicalParams& params,
                                    const ForcingSpec& forcing, const NoiseSpec& noise,
                                    const TimeGrid& grid, std::uint64_t seed,
                                    const ControlPath* tilt, const EstimatorOptions& opt) {
  grid.validate();
  if (terms.empty()) throw ConfigurationError("multi-time estimate needs at least one term");
  std::vector<Term> indexed;
  for (const auto& [t, g] : terms) {
    if (!g.bounded()) throw DomainError("multi-time terms must be bounded observables");
    const int index = grid.index_of(t);
    if (!indexed.empty() && index <= indexed.back().index)
      throw ConfigurationError("multi-time nodes must be strictly increasing");
    indexed.push_back({index, &g});
  }
  return run_estimator(y0, std::move(indexed), samples, params, forcing, noise, grid,
                       seed, tilt, opt);
}

namespace reference {

LaplaceEstimate estimate_laplace_serial(const SpectralField& y0, const Observable& g,
                                        double t, int samples,
                                        const PhysicalParams& params,
                                        const ForcingSpec& forcing,
                                        const NoiseSpec& noise, const TimeGrid& grid,
                                        std::uint64_t seed, const ControlPath* tilt) {
  const int index = grid.index_of(t);
  std::vector<double> exponents;
  double mean = 0.0;
  for (int m = 0; m < samples; ++m) {
    double g_value = 0.0, log_weight = 0.0;
    if (!tilt) {
      const Trajectory traj = simulate(y0, params, forcing, noise, grid, seed, m);
      g_value = g.value(traj.fields[index]);
    } else {
      SpectralField u = y0;
      for (int i = 0; i < index; ++i) {
        SpectralField kick = noise.sqrt_applied(tilt->slots[i]);
        kick *= grid.dt();
        if (noise.active()) {
          CounterRng rng = noise_stream(seed, m, i);
          const SpectralField w = sample_cylindrical_increment(u.shape(), grid.dt(), rng);
          log_weight -= std::sqrt(noise.n) * inner(tilt->slots[i], w);
          log_weight -= 0.5 * noise.n * grid.dt() * inner(tilt->slots[i], tilt->slots[i]);
          kick.axpy(1.0 / std::sqrt(noise.n), noise.sqrt_applied(w));
        }
        u = step(u, grid.time(i), grid.dt(), params, forcing, &kick);
      }
      g_value = g.value(u);
    }
    exponents.push_back(-noise.n * g_value + log_weight);
    mean += g_value / samples;
  }
  LaplaceEstimate est;
  est.n = noise.n;
  est.samples = samples;
  est.t = t;
  est.tilted = tilt != nullptr;
  est.seed = seed;
  est.value = log_mean_exp(exponents) / noise.n;
  est.ci_half_width = bootstrap_half_width(exponents, noise.n, 200, seed);
  est.ess = effective_sample_size(exponents);
  est.mean_observable = mean;
  est.observable_id = g.id();
  return est;
}

}  // namespace reference

}  // namespace cbf
