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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "cbf/experiments.hpp"

using namespace cbf;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

char buffer[512];

template <typename... Args>
std::string format(const char* fmt, Args... args) {
  std::snprintf(buffer, sizeof buffer, fmt, args...);
  return buffer;
}

PhysicalParams frozen() {
  PhysicalParams p;
  p.mu = p.alpha = p.beta = 0.0;
  p.test_mode = true;
  p.convection = false;
  return p;
}

Outcome operator_identities() {
  ExperimentConfig c;  // d=2, N=16, 1000 fields, r in {3,4,5}
  const auto start = std::chrono::steady_clock::now();
  const PropertyReport rep = run_property_suite(c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool ok = rep.passed() && secs < 60.0;
  int failed = 0;
  for (const auto& check : rep.checks)
    if (!check.passed) {
      ++failed;
      std::printf("    failed check: %s worst=%.3e tol=%.3e\n", check.name.c_str(), check.worst, check.tolerance);
    }
  const auto& torus = rep.find("torus identity [r=4]");
  return {ok, format("%zu checks, %d failed, %d fields per r, torus[r=4] worst %.2e, %.1fs",
                     rep.checks.size(), failed, c.property.fields, torus.worst, secs)};
}

Outcome gradient_check() {
  const Shape shape{2, 8};
  const TimeGrid grid{0.0, 0.25, 25};
  NoiseSpec q;
  q.q0 = 1.0;
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  int pairs = 0;
  CounterRng rng(2026, 17);
  for (double r : {3.0, 4.0}) {
    PhysicalParams p;
    p.r = r;
    for (int k = 0; k < 50; ++k) {
      const auto y0 = random_divergence_free(rng.next(), 2.0, 0.05 + 0.05 * rng.uniform(), shape);
      const auto g = Observable::bounded_tanh(random_divergence_free(rng.next(), 2.0, 0.1, shape), 0.5);
      ControlPath c = ControlPath::zeros(shape, grid), dir = ControlPath::zeros(shape, grid);
      const double amp = 0.02 + 0.2 * rng.uniform();
      for (int i = 0; i < grid.steps; ++i) {
        c.slots[i] = random_divergence_free(rng.next(), 2.0, amp, shape);
        dir.slots[i] = random_divergence_free(rng.next(), 2.0, 0.1, shape);
      }
      const auto cg = cost_and_gradient(y0, c, g, p, ForcingSpec::zero(), q);
      double analytic = 0.0;
      for (int i = 0; i < grid.steps; ++i) analytic += inner(cg.gradient.slots[i], dir.slots[i]);
      const double h = 1e-5;
      ControlPath plus = c, minus = c;
      plus.axpy(h, dir);
      minus.axpy(-h, dir);
      const double fd = (control_cost(y0, plus, g, p, ForcingSpec::zero(), q) -
                         control_cost(y0, minus, g, p, ForcingSpec::zero(), q)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - analytic) / std::max(std::abs(analytic), 1e-300));
      ++pairs;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst < 1e-4 && secs < 120.0,
          format("%d pairs, worst relative error %.2e (limit 1e-4), %.1fs", pairs, worst, secs)};
}

Outcome closed_form_oracles() {
  const Shape shape{2, 8};
  const auto y0 = random_divergence_free(101, 2.0, 0.1, shape);
  const auto phi = random_divergence_free(102, 2.0, 0.1, shape);
  NoiseSpec q;
  q.q0 = 1.0;
  q.n = 4.0;
  const TimeGrid grid{0.0, 0.5, 10};
  const double t = grid.T;
  const auto qphi = q.sqrt_applied(phi);
  const double half_energy = 0.5 * t * inner(qphi, qphi);
  const double laplace_exact = -inner(phi, y0) + half_energy;
  const double value_exact = inner(phi, y0) - half_energy;
  const auto g = Observable::linear(phi);
  const auto est = estimate_laplace(y0, g, t, 10000, frozen(), ForcingSpec::zero(), q, grid, 2718);
  NoiseSpec unit = q;
  unit.n = 1.0;
  const auto v = minimize_value(y0, g, frozen(), ForcingSpec::zero(), unit, grid);
  const bool laplace_ok = std::abs(est.value - laplace_exact) <= est.ci_half_width;
  const bool value_ok = std::abs(v.V - value_exact) <= 1e-6;
  const bool dual_ok = std::abs(est.value + v.V) <= est.ci_half_width;
  return {laplace_ok && value_ok && dual_ok && v.converged,
          format("estimate %.6f vs %.6f (CI %.2e); V %.9f vs %.9f (err %.1e); |est+V| %.2e",
                 est.value, laplace_exact, est.ci_half_width, v.V, value_exact,
                 std::abs(v.V - value_exact), std::abs(est.value + v.V))};
}

Outcome convergence_law() {
  ExperimentConfig c;  // d=2, N=8, r=4, mu=alpha=beta=1, tanh, n in {4,16,64,256}
  const auto start = std::chrono::steady_clock::now();
  const ConvergenceReport rep = run_convergence_study(c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& row : rep.rows)
    std::printf("    n=%-4g M=%-6d estimate=%.8f gap=%.3e ci=%.2e ess=%.0f\n", row.n, row.samples,
                row.estimate, row.gap, row.ci, row.ess);
  const bool cond = check_moment_condition(c.params, c.dim).branch == MomentBranch::QuarterMax;
  return {rep.pass && cond && secs < 1200.0,
          format("V=%.6f, slope %.3f (band [-1,-0.25]), nonincreasing=%d, %.1fs", rep.reference_V,
                 rep.slope, rep.gaps_nonincreasing, secs)};
}

Outcome energy_budget() {
  const Shape shape{2, 8};
  PhysicalParams p;
  p.r = 4.0;
  SpectralField pattern(shape);
  pattern.set_mode({1, 2, 0}, std::vector<Complex>{Complex(0.0, 0.2), Complex(0.0, -0.1)});
  const auto f = ForcingSpec::single_mode(pattern, 1.5);
  bool ok = true;
  double lo = 1e300, hi = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto y0 = random_divergence_free(300 + seed, 2.0, 0.1, shape);
    std::vector<double> res;
    for (int steps : {100, 200, 400}) {
      const auto traj = simulate(y0, p, f, std::nullopt, TimeGrid{0.0, 1.0, steps}, 0);
      res.push_back(std::abs(energy_budget_residual(traj, p, f)));
    }
    for (int i = 0; i < 2; ++i) {
      const double ratio = res[i] / res[i + 1];
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      if (!(std::abs(ratio - 2.0) <= 0.3)) ok = false;
    }
  }
  return {ok, format("residual ratio per dt halving in [%.3f, %.3f] (target 2 +- 0.3), 5 runs x 3 levels", lo, hi)};
}

Outcome continuous_dependence() {
  const Shape shape{2, 8};
  PhysicalParams p;
  p.r = 4.0;
  NoiseSpec q;
  q.q0 = 1.0;
  q.n = 4.0;
  const TimeGrid grid{0.0, 0.5, 50};
  CounterRng rng(77, 88);
  double rate = -std::numeric_limits<double>::infinity(), peak = 0.0;
  std::vector<DependenceReport> reports;
  for (int k = 0; k < 100; ++k) {
    const auto y1 = random_divergence_free(rng.next(), 2.0, 0.05 + 0.25 * rng.uniform(), shape);
    const auto y2 = y1 + (1e-3 + 1e-2 * rng.uniform()) * random_divergence_free(rng.next(), 2.0, 1.0, shape);
    reports.push_back(continuous_dependence_gap(y1, y2, p, ForcingSpec::zero(), q, grid, rng.next()));
    rate = std::max(rate, reports.back().envelope_rate);
    peak = std::max(peak, reports.back().max_ratio);
  }
  bool below = std::isfinite(rate);
  for (const auto& r : reports)
    for (std::size_t i = 0; i < r.ratios.size(); ++i)
      if (!std::isfinite(r.ratios[i]) || r.ratios[i] > std::exp(rate * grid.time(i)) * (1.0 + 1e-12))
        below = false;
  const double theory = reports.front().theory_rate;
  return {below && rate <= theory,
          format("fitted C=%.4f (monotonicity rate rho-alpha=%.4f), max ratio %.4f over 100 pairs",
                 rate, theory, peak)};
}

Outcome moment_logic() {
  PhysicalParams unit;
  const auto a = check_moment_condition(unit, 3);
  PhysicalParams critical;
  critical.r = 3.0;
  critical.beta = 1.0;
  critical.mu = 0.5;
  critical.alpha = 1.0;
  const auto b = check_moment_condition(critical, 3);
  PhysicalParams thin;
  thin.mu = 0.01;
  thin.r = 4.0;
  const auto c = check_moment_condition(thin, 3);
  const auto d = check_moment_condition(thin, 2);
  const bool ok = a.satisfied && a.branch == MomentBranch::QuarterMax && a.quarter_threshold == 0.25 &&
                  b.satisfied && 2.0 * critical.beta * critical.mu >= 1.0 && !c.satisfied &&
                  !c.quarter_max && !c.rho_star && d.satisfied &&
                  d.branch == MomentBranch::PlanarExemption;
  return {ok, format("unit: %s; r=3 2*beta*mu=1: %s; mu=0.01 d=3: %s; mu=0.01 d=2: %s",
                     to_string(a.branch), to_string(b.branch), c.satisfied ? "satisfied" : "rejected",
                     to_string(d.branch))};
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"1", "operator identity suite", operator_identities},
      {"2", "adjoint gradient vs central differences", gradient_check},
      {"3", "closed-form frozen linear oracles", closed_form_oracles},
      {"4", "small-noise convergence law", convergence_law},
      {"5", "discrete energy budget", energy_budget},
      {"6", "continuous dependence envelope", continuous_dependence},
      {"7", "moment condition logic", moment_logic},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    if (!out.pass) ++failures;
    std::printf("%s [%s] %s: %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
