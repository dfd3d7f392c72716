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
#include <cstdio>
#include <fstream>

#include "cbf/experiments.hpp"

using namespace cbf;
using nlohmann::json;

namespace {

ExperimentConfig frozen_linear() {
  ExperimentConfig c;
  c.params.mu = c.params.alpha = c.params.beta = 0.0;
  c.params.test_mode = true;
  c.params.convection = false;
  c.observable.id = "linear";
  c.samples_base = 50;
  c.samples_power = 0.0;
  c.optimizer.restarts = 0;
  return c;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("config round trip") {
  ExperimentConfig c;
  c.experiment_id = "roundtrip";
  c.params.r = 5.0;
  c.forcing.id = "single_mode";
  c.forcing.amplitude = 0.2;
  c.forcing.omega = 3.0;
  c.s = 3.5;
  c.n_list = {2, 8};
  c.property.fields = 7;
  const json j = config_to_json(c);
  const ExperimentConfig back = config_from_json(j);
  CHECK(config_to_json(back) == j);
  CHECK(back.params.r == 5.0);
  CHECK(back.s == 3.5);
  CHECK(std::isnan(config_from_json(config_to_json(ExperimentConfig{})).s));
  // Missing keys keep their defaults.
  const ExperimentConfig sparse = config_from_json(json{{"N", 4}});
  CHECK(sparse.n == 4);
  CHECK(sparse.n_list == ExperimentConfig{}.n_list);
}

TEST_CASE("config files") {
  const std::string path = "experiment_config_test.json";
  {
    std::ofstream out(path);
    out << config_to_json(ExperimentConfig{}).dump(2);
  }
  CHECK(config_to_json(load_config(path)) == config_to_json(ExperimentConfig{}));
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_config(path), ConfigurationError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_config("does/not/exist.json"), ConfigurationError);
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(ExperimentConfig{}.validate());
  ExperimentConfig c;
  c.n_list = {4, 4};
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
  c = ExperimentConfig{};
  c.observable.id = "nope";
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
  c = ExperimentConfig{};
  c.forcing.id = "nope";
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
  c = ExperimentConfig{};
  c.dim = 3;
  c.n = 4;
  c.params.mu = 0.01;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
  c.params.test_mode = true;
  CHECK_NOTHROW(c.validate());
  CHECK(ExperimentConfig{}.samples_for(16) == 16000);
}

TEST_CASE("ndjson records") {
  const ResultRecord r{"exp", 16.0, 200, 0.25, "tanh", -0.123, 0.004, true, 99};
  const std::string line = to_ndjson_line(r);
  CHECK(line.find('\n') == std::string::npos);
  CHECK(parse_ndjson_line(line) == r);
  const json j = json::parse(line);
  for (const char* key : {"experiment-id", "n", "M", "t", "observable-id", "value", "ci", "tilted", "seed"})
    CHECK(j.contains(key));
}

TEST_CASE("small property suite") {
  ExperimentConfig c;
  c.property.fields = 20;
  const PropertyReport rep = run_property_suite(c);
  for (const auto& check : rep.checks) {
    INFO(check.name << " worst " << check.worst << " tolerance " << check.tolerance);
    CHECK(check.passed);
  }
  CHECK(rep.passed());
  CHECK(rep.find("convection orthogonality [r=4]").cases == 20);
  CHECK(rep.find("zero-field parseval").worst == 0.0);
  CHECK_THROWS(rep.find("missing"));
  CHECK(to_json(rep).size() == 2);
}

TEST_CASE("linear frozen convergence study is exact") {
  const ConvergenceReport rep = run_convergence_study(frozen_linear());
  CHECK(rep.reference_converged);
  CHECK(rep.statistically_zero);
  CHECK(rep.pass);
  REQUIRE(rep.rows.size() == 4);
  for (const auto& row : rep.rows) CHECK(row.gap <= 1e-10);
  REQUIRE(rep.records.size() == 4);
  CHECK(rep.records[0].tilted);
  CHECK(rep.records[0].observable_id == "linear");
}

TEST_CASE("convergence study reproducibility") {
  ExperimentConfig c;
  c.samples_base = 100;
  c.n_list = {4, 16};
  c.optimizer.restarts = 1;
  const auto a = run_convergence_study(c);
  const auto b = run_convergence_study(c);
  CHECK(to_json(a) == to_json(b));
  c.noise_seed = 12;
  const auto d = run_convergence_study(c);
  CHECK(d.rows[0].estimate != a.rows[0].estimate);
}

TEST_CASE("moment study") {
  ExperimentConfig c;
  c.n_list = {4, 16, 64};
  c.moments.samples = 50;
  const auto rep = run_moment_study(c);
  CHECK(rep.statistic.condition.branch == MomentBranch::QuarterMax);
  CHECK(rep.statistic.rows.size() == 3);
  CHECK(rep.bounded);
  CHECK(rep.statistic.c1 == doctest::Approx(0.5 * rep.statistic.c1_bound));
  CHECK(to_json(rep).contains("rows"));

  ExperimentConfig thin = c;
  thin.params.mu = 0.01;
  CHECK(run_moment_study(thin).statistic.condition.branch == MomentBranch::PlanarExemption);
  thin.dim = 3;
  thin.n = 4;
  CHECK_THROWS_AS(run_moment_study(thin), DomainError);
}

}  // TEST_SUITE
