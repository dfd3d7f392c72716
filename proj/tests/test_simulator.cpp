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

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <string>

#include "cbf/simulator.hpp"
#include "cbf/stats.hpp"
#include "oracles.hpp"

using namespace cbf;

namespace {

const Complex I(0.0, 1.0);

PhysicalParams frozen() {
  PhysicalParams p;
  p.mu = p.alpha = p.beta = 0.0;
  p.test_mode = true;
  p.convection = false;
  return p;
}

NoiseSpec noise(double q0, double n = 1.0) {
  NoiseSpec q;
  q.q0 = q0;
  q.n = n;
  return q;
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("noise spec") {
  const NoiseSpec q = noise(2.0);
  CHECK(q.decay(2) == 3.0);
  CHECK(q.decay(3) == 3.5);
  CHECK(q.eigenvalue(1.0, 2) == doctest::Approx(2.0 / 8.0));
  CHECK_NOTHROW(q.validate(2));
  NoiseSpec rough = q;
  rough.s = 2.0;
  CHECK_THROWS_AS(rough.validate(2), DomainError);
  rough.s = 2.5;
  CHECK_THROWS_AS(rough.validate(3), DomainError);
  NoiseSpec small = q;
  small.n = 0.5;
  CHECK_THROWS_AS(small.validate(2), DomainError);
  // 2D, N=2: zero mode counts twice, the 8 others once each.
  const Shape shape{2, 2};
  const double expected = 2.0 * 2.0 + 4.0 * 2.0 / 8.0 + 4.0 * 2.0 / 27.0;
  CHECK(q.trace_q(shape) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(q.trace_q1(shape) == doctest::Approx(4.0 * 2.0 / 8.0 + 8.0 * 2.0 / 27.0).epsilon(1e-14));
}

TEST_CASE("orthonormal solenoidal basis") {
  for (Shape shape : {Shape{2, 4}, Shape{3, 2}}) {
    const std::size_t size = basis_size(shape);
    CHECK(size == shape.dim + (shape.mode_count() - 1) * (shape.dim - 1));
    std::vector<SpectralField> e;
    for (std::size_t j = 0; j < size; ++j) {
      std::vector<double> z(size, 0.0);
      z[j] = 1.0;
      e.push_back(from_basis_coordinates(shape, z));
      CHECK(e.back().reality_defect() == 0.0);
      CHECK(e.back().divergence_defect() <= 1e-15);
    }
    double worst = 0.0;
    for (std::size_t a = 0; a < size; ++a)
      for (std::size_t b = 0; b < size; ++b)
        worst = std::max(worst, std::abs(inner(e[a], e[b]) - (a == b ? 1.0 : 0.0)));
    CHECK(worst <= 1e-14);
    const auto u = random_divergence_free(3, 1.0, 1.0, shape);
    CHECK(from_basis_coordinates(shape, basis_coordinates(u)).max_abs_diff(u) <= 1e-15);
  }
}

TEST_CASE("zero noise gives zero increments") {
  CounterRng rng(1, 2, 3);
  CHECK(sample_noise_increment(noise(0.0), Shape{2, 8}, 0.1, rng).max_abs() == 0.0);
}

TEST_CASE("noise increment variance per direction") {
  const Shape shape{2, 4};
  const NoiseSpec q = noise(1.5, 4.0);
  const double dt = 0.01;
  const int draws = 100000;
  const std::size_t size = basis_size(shape);
  std::vector<double> second(size, 0.0);
  for (int m = 0; m < draws; ++m) {
    CounterRng rng = noise_stream(5, m, 0);
    const auto z = basis_coordinates(sample_noise_increment(q, shape, dt, rng));
    for (std::size_t j = 0; j < size; ++j) second[j] += z[j] * z[j] / draws;
  }
  // Direction j lives on one mode; recover its |k|^2 from a unit coordinate.
  for (std::size_t j = 0; j < size; ++j) {
    std::vector<double> unit(size, 0.0);
    unit[j] = 1.0;
    const auto e = from_basis_coordinates(shape, unit);
    const double k2 = std::pow(norm_grad(e), 2);
    const double exact = q.eigenvalue(k2, 2) * dt / q.n;
    CHECK(std::abs(second[j] - exact) <= 3.0 * std::sqrt(2.0 / draws) * exact);
  }
}

TEST_CASE("noise std scales like n^(-1/2)") {
  const Shape shape{2, 4};
  const int draws = 100000;
  auto spread = [&](double n) {
    double s = 0.0;
    for (int m = 0; m < draws; ++m) {
      CounterRng rng = noise_stream(9, m, 0);
      const auto z = basis_coordinates(sample_noise_increment(noise(1.0, n), shape, 0.1, rng));
      s += z[0] * z[0];
    }
    return std::sqrt(s / draws);
  };
  // Independent samples for each n.
  double s4 = 0.0, s16 = 0.0;
  for (int m = 0; m < draws; ++m) {
    CounterRng a = noise_stream(9, m, 0);
    CounterRng b = noise_stream(10, m, 0);
    const double za = basis_coordinates(sample_noise_increment(noise(1.0, 4.0), shape, 0.1, a))[0];
    const double zb = basis_coordinates(sample_noise_increment(noise(1.0, 16.0), shape, 0.1, b))[0];
    s4 += za * za;
    s16 += zb * zb;
  }
  CHECK(std::sqrt(s4 / s16) == doctest::Approx(2.0).epsilon(0.02));
  CHECK(spread(4.0) / spread(16.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("parallel streams are uncorrelated") {
  const Shape shape{2, 4};
  const int draws = 20000;
  const std::size_t size = basis_size(shape);
  std::vector<double> cross(size, 0.0);
  for (int m = 0; m < draws; ++m) {
    CounterRng a = noise_stream(3, 2 * m, 0);
    CounterRng b = noise_stream(3, 2 * m + 1, 0);
    const auto za = basis_coordinates(sample_cylindrical_increment(shape, 1.0, a));
    const auto zb = basis_coordinates(sample_cylindrical_increment(shape, 1.0, b));
    for (std::size_t j = 0; j < size; ++j) cross[j] += za[j] * zb[j] / draws;
  }
  for (double c : cross) CHECK(std::abs(c) <= 3.0 / std::sqrt(draws) * 1.5);
  // Neighbouring steps of one sample, too.
  double lag = 0.0;
  for (int m = 0; m < draws; ++m) {
    CounterRng a = noise_stream(3, m, 0);
    CounterRng b = noise_stream(3, m, 1);
    lag += basis_coordinates(sample_cylindrical_increment(shape, 1.0, a))[4] *
           basis_coordinates(sample_cylindrical_increment(shape, 1.0, b))[4] / draws;
  }
  CHECK(std::abs(lag) <= 3.0 / std::sqrt(draws) * 1.5);
}

TEST_CASE("time grid") {
  const TimeGrid g{0.0, 1.0, 8};
  CHECK(g.dt() == 0.125);
  CHECK(g.index_of(0.5) == 4);
  CHECK(g.index_of(1.0) == 8);
  CHECK_THROWS_AS(g.index_of(0.3), ConfigurationError);
  CHECK_THROWS_AS(g.index_of(1.5), ConfigurationError);
  CHECK_THROWS_AS((TimeGrid{1.0, 1.0, 4}).validate(), ConfigurationError);
  CHECK_THROWS_AS((TimeGrid{0.0, 1.0, 0}).validate(), ConfigurationError);
}

TEST_CASE("step of the zero state") {
  const Shape shape{2, 8};
  PhysicalParams p;
  const auto out = step(SpectralField(shape), 0.0, 0.01, p, ForcingSpec::zero());
  CHECK(out.max_abs() == 0.0);
}

TEST_CASE("step on a single mode without nonlinearity") {
  const Shape shape{2, 8};
  PhysicalParams p;
  p.mu = 0.7;
  p.alpha = 0.3;
  p.beta = 0.0;
  p.test_mode = true;
  const auto u = oracle::single_mode(shape, {0, 2, 0}, {0.4 * I, 0.0});
  const double dt = 0.05;
  const auto out = step(u, 0.0, dt, p, ForcingSpec::zero());
  CHECK(out.max_abs_diff(std::exp(-(0.7 * 4.0 + 0.3) * dt) * u) <= 1e-16);
}

TEST_CASE("pure additive noise step") {
  const Shape shape{2, 8};
  const auto u = random_divergence_free(2, 2.0, 0.1, shape);
  CounterRng rng(4, 5);
  const auto inc = sample_noise_increment(noise(1.0, 4.0), shape, 0.01, rng);
  const auto out = step(u, 0.0, 0.01, frozen(), ForcingSpec::zero(), &inc);
  CHECK((out - u).max_abs_diff(inc) <= 1e-15);
}

TEST_CASE("blowup is reported with its time") {
  const Shape shape{2, 8};
  SpectralField u(shape);
  u.at(WaveVector{0, 1, 0}, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    step(u, 0.5, 0.25, PhysicalParams{}, ForcingSpec::zero());
    FAIL("expected blowup");
  } catch (const NumericalBlowup& e) {
    CHECK(e.time() == 0.75);
  }
  const auto big = oracle::single_mode(shape, {0, 0, 0}, {1e7, 0.0});
  CHECK_THROWS_AS(check_state(big, 0.0), NumericalBlowup);
  CHECK_NOTHROW(check_state(oracle::single_mode(shape, {0, 0, 0}, {1.0, 0.0}), 0.0));
}

TEST_CASE("stability bound is enforced") {
  const Shape shape{2, 8};
  const auto y0 = random_divergence_free(1, 2.0, 0.1, shape);
  const PhysicalParams p;
  const double bound = stable_dt(y0, p);
  CHECK(bound > 0.0);
  CHECK(bound <= 0.5 / std::pow(norm_v(y0), 2));
  CHECK_THROWS_AS(simulate(y0, p, ForcingSpec::zero(), std::nullopt, TimeGrid{0.0, 4.0 * bound, 2}, 1),
                  ConfigurationError);
  CHECK(std::isinf(stable_dt(SpectralField(shape), p)));
}

TEST_CASE("deterministic decay and determinism") {
  const Shape shape{2, 8};
  const auto y0 = random_divergence_free(3, 2.0, 0.1, shape);
  const PhysicalParams p;
  const TimeGrid grid{0.0, 1.0, 100};
  const auto traj = simulate(y0, p, ForcingSpec::zero(), std::nullopt, grid, 0);
  CHECK(traj.size() == 101);
  for (std::size_t i = 1; i < traj.size(); ++i) {
    CHECK(norm_h(traj.fields[i]) <= norm_h(traj.fields[i - 1]));
    CHECK(traj.fields[i].divergence_defect() <= 1e-15);
    CHECK(traj.fields[i].reality_defect() == 0.0);
  }
  const auto q = noise(1.0, 16.0);
  const auto a = simulate(y0, p, ForcingSpec::zero(), q, grid, 42, 3);
  const auto b = simulate(y0, p, ForcingSpec::zero(), q, grid, 42, 3);
  const auto c = simulate(y0, p, ForcingSpec::zero(), q, grid, 43, 3);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.fields[i].max_abs_diff(b.fields[i]) == 0.0);
  CHECK(a.final().max_abs_diff(c.final()) > 0.0);
}

TEST_CASE("energy budget residual is first order") {
  const Shape shape{2, 8};
  const auto y0 = random_divergence_free(4, 2.0, 0.1, shape);
  PhysicalParams p;
  p.r = 3.0;
  const auto f = ForcingSpec::single_mode(oracle::single_mode(shape, {1, 0, 0}, {0.0, 0.5}), 2.0);
  std::vector<double> res;
  for (int steps : {200, 400, 800}) {
    const auto traj = simulate(y0, p, f, std::nullopt, TimeGrid{0.0, 1.0, steps}, 0);
    res.push_back(std::abs(energy_budget_residual(traj, p, f)));
  }
  CHECK(res[0] / res[1] == doctest::Approx(2.0).epsilon(0.15));
  CHECK(res[1] / res[2] == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("first-order global error") {
  const Shape shape{2, 8};
  const auto y0 = random_divergence_free(6, 2.0, 0.1, shape);
  const PhysicalParams p;
  const TimeGrid coarse{0.0, 0.5, 50};
  const auto ref = simulate(y0, p, ForcingSpec::zero(), std::nullopt, TimeGrid{0.0, 0.5, 800}, 0);
  std::vector<double> err;
  for (int steps : {50, 100}) {
    const auto t = simulate(y0, p, ForcingSpec::zero(), std::nullopt, TimeGrid{0.0, 0.5, steps}, 0);
    err.push_back(norm_h(t.final() - ref.final()));
  }
  (void)coarse;
  // Against a dt/8 reference the ratio is (1 - 1/8)/(1/2 - 1/8) = 7/3.
  CHECK(err[0] / err[1] == doctest::Approx(7.0 / 3.0).epsilon(0.1));
}

TEST_CASE("continuous dependence") {
  const Shape shape{2, 8};
  const auto y1 = random_divergence_free(7, 2.0, 0.1, shape);
  const TimeGrid grid{0.0, 0.5, 50};
  const auto same = continuous_dependence_gap(y1, y1, PhysicalParams{}, ForcingSpec::zero(),
                                              noise(1.0, 4.0), grid, 1);
  for (double r : same.ratios) CHECK(r == 0.0);

  // Linear flow with mu = 0: every mode decays like exp(-alpha t).
  PhysicalParams lin = frozen();
  lin.alpha = 0.8;
  const auto y2 = random_divergence_free(8, 2.0, 0.1, shape);
  const auto rep = continuous_dependence_gap(y1, y2, lin, ForcingSpec::zero(), std::nullopt, grid, 0);
  for (std::size_t i = 0; i < rep.ratios.size(); ++i)
    CHECK(rep.ratios[i] == doctest::Approx(std::exp(-0.8 * grid.time(i))).epsilon(1e-12));
  CHECK(rep.fitted_rate == doctest::Approx(-0.8).epsilon(1e-10));
  CHECK(rep.theory_rate == -0.8);

  PhysicalParams p;
  p.r = 4.0;
  const auto near = y1 + 0.01 * random_divergence_free(9, 2.0, 0.1, shape);
  const auto base = continuous_dependence_gap(y1, near, p, ForcingSpec::zero(), noise(1.0, 4.0), grid, 3);
  CHECK(std::isfinite(base.envelope_rate));
  for (std::size_t i = 0; i < base.ratios.size(); ++i)
    CHECK(base.ratios[i] <= std::exp(base.envelope_rate * grid.time(i)) * (1.0 + 1e-12));
  PhysicalParams viscous = p;
  viscous.mu = 2.0;
  const auto damped = continuous_dependence_gap(y1, near, viscous, ForcingSpec::zero(), noise(1.0, 4.0), grid, 3);
  CHECK(damped.ratios.back() < base.ratios.back());
}

TEST_CASE("moment condition cases") {
  PhysicalParams p;
  auto c = check_moment_condition(p, 3);
  CHECK(c.satisfied);
  CHECK(c.branch == MomentBranch::QuarterMax);
  CHECK(c.quarter_threshold == 0.25);

  PhysicalParams crit;
  crit.r = 3.0;
  crit.beta = 1.0;
  crit.mu = 0.5;
  crit.alpha = 0.1;  // quarter-max needs mu >= 2.5
  c = check_moment_condition(crit, 3);
  CHECK(c.satisfied);
  CHECK(c.branch == MomentBranch::RhoStar);
  CHECK(2.0 * crit.beta * crit.mu >= 1.0);

  PhysicalParams thin;
  thin.mu = 0.01;
  thin.r = 4.0;
  c = check_moment_condition(thin, 3);
  CHECK_FALSE(c.satisfied);
  CHECK_FALSE(c.quarter_max);
  CHECK_FALSE(c.rho_star);
  CHECK(c.rho_star_threshold == doctest::Approx(std::cbrt(1.0 / 54.0)).epsilon(1e-14));
  CHECK(c.branch == MomentBranch::None);

  c = check_moment_condition(thin, 2);
  CHECK(c.satisfied);
  CHECK(c.branch == MomentBranch::PlanarExemption);
  CHECK_FALSE(c.note.empty());
  CHECK(std::string(to_string(c.branch)) == "planar-exemption");
}

TEST_CASE("moment c1 bound") {
  const NoiseSpec q = noise(1.0);
  PhysicalParams p;
  CHECK(moment_c1_bound(p, q, Shape{2, 8}) == doctest::Approx(1.0 / q.trace_q1(Shape{2, 8})));
  CHECK(std::isinf(moment_c1_bound(p, noise(0.0), Shape{3, 4})));
  PhysicalParams thin;
  thin.mu = 0.01;
  CHECK_THROWS_AS(moment_c1_bound(thin, q, Shape{3, 4}), DomainError);
  // Quarter-max branch: (alpha - 1/(4 mu))/Tr(Q1) beats the rho* branch here.
  const double tr = q.trace_q1(Shape{3, 4});
  const double quarter = (1.0 - 0.25) / tr;
  const double star = (1.0 - p.rho_star()) / tr;
  CHECK(moment_c1_bound(p, q, Shape{3, 4}) == doctest::Approx(std::max(quarter, star)));
}

TEST_CASE("exponential moment statistic") {
  const Shape shape{2, 8};
  const auto y0 = random_divergence_free(2, 2.0, 0.1, shape);
  const PhysicalParams p;
  const TimeGrid grid{0.0, 0.25, 25};
  const auto det = exponential_moment_statistic(y0, p, ForcingSpec::zero(), noise(0.0), grid, 0.3,
                                                4, {4.0, 16.0}, 1);
  for (const auto& row : det.rows)
    CHECK(row.log_statistic == doctest::Approx(row.n * 0.3 * std::pow(norm_v(y0), 2)).epsilon(1e-14));

  const NoiseSpec q = noise(1.0);
  const double bound = moment_c1_bound(p, q, shape);
  CHECK_THROWS_AS(exponential_moment_statistic(y0, p, ForcingSpec::zero(), q, grid, 1.5 * bound,
                                               4, {4.0}, 1),
                  DomainError);
  const auto rep = exponential_moment_statistic(y0, p, ForcingSpec::zero(), q, grid, 0.5 * bound,
                                                200, {4.0, 16.0, 64.0}, 7);
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[2].per_n <= 1.2 * rep.rows[0].per_n);
  for (const auto& row : rep.rows) {
    CHECK(std::isfinite(row.per_n));
    CHECK(row.mean_dissipation > 0.0);
  }

  PhysicalParams thin;
  thin.mu = 0.01;
  const auto y3 = random_divergence_free(2, 2.0, 0.2, Shape{3, 4});
  CHECK_THROWS_AS(exponential_moment_statistic(y3, thin, ForcingSpec::zero(), q, grid, 0.1,
                                               4, {4.0}, 1),
                  DomainError);
}

TEST_CASE("trajectory csv") {
  const Shape shape{2, 8};
  const auto y0 = random_divergence_free(3, 2.0, 0.1, shape);
  const auto traj = simulate(y0, PhysicalParams{}, ForcingSpec::zero(), std::nullopt, TimeGrid{0, 0.1, 4}, 0);
  const std::string path = "trajectory_test.csv";
  write_trajectory_csv(path, traj, 4.0);
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  std::getline(in, line);
  CHECK(line == "t,norm_h,norm_v,norm_lr1");
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 5);
  std::remove(path.c_str());
}

}  // TEST_SUITE
